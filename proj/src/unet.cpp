#include "fvk/unet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "fvk/kernels/ref.hpp"

namespace fvk::unet {

std::string dropout_sites_name(DropoutSites s) {
  switch (s) {
    case DropoutSites::deep_encoder_and_bottleneck: return "deep-encoder-and-bottleneck";
    case DropoutSites::all_blocks: return "all-blocks";
    case DropoutSites::none: return "none";
  }
  return "none";
}

DropoutSites dropout_sites_from_name(const std::string& s) {
  if (s == "deep-encoder-and-bottleneck") return DropoutSites::deep_encoder_and_bottleneck;
  if (s == "all-blocks") return DropoutSites::all_blocks;
  if (s == "none") return DropoutSites::none;
  throw ValueError("unknown dropout_sites value: " + s);
}

void UNetConfig::validate() const {
  if (in_channels < 1 || out_channels < 1)
    throw ValueError("UNetConfig: channel counts must be >= 1");
  if (depth < 1) throw ValueError("UNetConfig: depth must be >= 1");
  if (base_channels < 1) throw ValueError("UNetConfig: base_channels must be >= 1");
  if (!(dropout_p >= 0.0f && dropout_p < 1.0f))
    throw ValueError("UNetConfig: dropout_p must lie in [0,1)");
}

i64 UNetConfig::stage_channels(i64 i) const { return base_channels << i; }

namespace {

Tensor he_conv(Rng& rng, const Shape& shape, i64 fan_in) {
  std::vector<float> data(static_cast<std::size_t>(shape.numel()));
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : data) v = static_cast<float>(rng.normal(0.0, stddev));
  Tensor t = Tensor::from_data(shape, std::move(data));
  t.set_requires_grad(true);
  return t;
}

ConvBlock make_block(Rng* rng, i64 in_ch, i64 out_ch) {
  ConvBlock b;
  b.w1 = rng ? he_conv(*rng, {out_ch, in_ch, 3, 3}, in_ch * 9)
             : Tensor::zeros({out_ch, in_ch, 3, 3});
  b.b1 = Tensor::zeros({out_ch});
  b.bn1 = ops::BatchNormState::init(out_ch);
  b.w2 = rng ? he_conv(*rng, {out_ch, out_ch, 3, 3}, out_ch * 9)
             : Tensor::zeros({out_ch, out_ch, 3, 3});
  b.b2 = Tensor::zeros({out_ch});
  b.bn2 = ops::BatchNormState::init(out_ch);
  for (Tensor* t : {&b.w1, &b.b1, &b.w2, &b.b2, &b.bn1.gamma, &b.bn1.beta,
                    &b.bn2.gamma, &b.bn2.beta})
    t->set_requires_grad(true);
  return b;
}

void append_block(ParameterSet& out, const std::string& prefix, const ConvBlock& b) {
  out.push_back({prefix + ".conv1.w", b.w1, true});
  out.push_back({prefix + ".conv1.b", b.b1, true});
  out.push_back({prefix + ".bn1.gamma", b.bn1.gamma, true});
  out.push_back({prefix + ".bn1.beta", b.bn1.beta, true});
  out.push_back({prefix + ".bn1.rmean", b.bn1.running_mean, false});
  out.push_back({prefix + ".bn1.rvar", b.bn1.running_var, false});
  out.push_back({prefix + ".conv2.w", b.w2, true});
  out.push_back({prefix + ".conv2.b", b.b2, true});
  out.push_back({prefix + ".bn2.gamma", b.bn2.gamma, true});
  out.push_back({prefix + ".bn2.beta", b.bn2.beta, true});
  out.push_back({prefix + ".bn2.rmean", b.bn2.running_mean, false});
  out.push_back({prefix + ".bn2.rvar", b.bn2.running_var, false});
}

}  // namespace

UNet UNet::skeleton(const UNetConfig& cfg) {
  cfg.validate();
  UNet net;
  net.cfg_ = cfg;
  i64 in_ch = cfg.in_channels;
  for (i64 i = 0; i < cfg.depth; ++i) {
    net.enc_.push_back(make_block(nullptr, in_ch, cfg.stage_channels(i)));
    in_ch = cfg.stage_channels(i);
  }
  net.bottleneck_ = make_block(nullptr, cfg.stage_channels(cfg.depth - 1),
                               cfg.stage_channels(cfg.depth));
  net.dec_.resize(static_cast<std::size_t>(cfg.depth));
  for (i64 i = cfg.depth - 1; i >= 0; --i) {
    DecoderStage stage;
    const i64 from = cfg.stage_channels(i + 1);
    const i64 to = cfg.stage_channels(i);
    stage.up_w = Tensor::zeros({from, to, 2, 2});
    stage.up_b = Tensor::zeros({to});
    stage.up_w.set_requires_grad(true);
    stage.up_b.set_requires_grad(true);
    stage.block = make_block(nullptr, 2 * to, to);
    net.dec_[static_cast<std::size_t>(i)] = std::move(stage);
  }
  net.out_w_ = Tensor::zeros({cfg.out_channels, cfg.base_channels, 1, 1});
  net.out_b_ = Tensor::zeros({cfg.out_channels});
  net.out_w_.set_requires_grad(true);
  net.out_b_.set_requires_grad(true);
  return net;
}

UNet UNet::build(const UNetConfig& cfg, u64 seed) {
  cfg.validate();
  UNet net;
  net.cfg_ = cfg;
  Rng rng(seed);
  i64 in_ch = cfg.in_channels;
  for (i64 i = 0; i < cfg.depth; ++i) {
    net.enc_.push_back(make_block(&rng, in_ch, cfg.stage_channels(i)));
    in_ch = cfg.stage_channels(i);
  }
  net.bottleneck_ = make_block(&rng, cfg.stage_channels(cfg.depth - 1),
                               cfg.stage_channels(cfg.depth));
  // decoder stages are created deep -> shallow so the He draws follow the
  // canonical parameter order
  net.dec_.resize(static_cast<std::size_t>(cfg.depth));
  for (i64 i = cfg.depth - 1; i >= 0; --i) {
    DecoderStage stage;
    const i64 from = cfg.stage_channels(i + 1);
    const i64 to = cfg.stage_channels(i);
    stage.up_w = he_conv(rng, {from, to, 2, 2}, from * 4);
    stage.up_b = Tensor::zeros({to});
    stage.up_b.set_requires_grad(true);
    stage.block = make_block(&rng, 2 * to, to);
    net.dec_[static_cast<std::size_t>(i)] = std::move(stage);
  }
  net.out_w_ = he_conv(rng, {cfg.out_channels, cfg.base_channels, 1, 1}, cfg.base_channels);
  net.out_b_ = Tensor::zeros({cfg.out_channels});
  net.out_b_.set_requires_grad(true);

  const auto sites = cfg.dropout_sites;
  if (sites == DropoutSites::all_blocks) {
    for (auto& b : net.enc_) b.dropout = true;
    for (auto& d : net.dec_) d.block.dropout = true;
    net.bottleneck_.dropout = true;
  } else if (sites == DropoutSites::deep_encoder_and_bottleneck) {
    net.enc_.back().dropout = true;
    if (cfg.depth >= 2) net.enc_[static_cast<std::size_t>(cfg.depth - 2)].dropout = true;
    net.bottleneck_.dropout = true;
  }
  return net;
}

ParameterSet UNet::parameters() const {
  ParameterSet out;
  for (i64 i = 0; i < cfg_.depth; ++i)
    append_block(out, "enc" + std::to_string(i), enc_[static_cast<std::size_t>(i)]);
  append_block(out, "bottleneck", bottleneck_);
  for (i64 i = cfg_.depth - 1; i >= 0; --i) {
    const auto& d = dec_[static_cast<std::size_t>(i)];
    const std::string prefix = "dec" + std::to_string(i);
    out.push_back({prefix + ".up.w", d.up_w, true});
    out.push_back({prefix + ".up.b", d.up_b, true});
    append_block(out, prefix, d.block);
  }
  out.push_back({"out.w", out_w_, true});
  out.push_back({"out.b", out_b_, true});
  return out;
}

void UNet::check_input(const Tensor& batch) const {
  if (batch.shape().rank() != 4 || batch.shape().c() != cfg_.in_channels)
    throw ShapeError("forward: expected (N," + std::to_string(cfg_.in_channels) +
                     ",H,W) input, got " + batch.shape().str());
  const i64 div = i64{1} << cfg_.depth;
  if (batch.shape().h() % div != 0 || batch.shape().w() % div != 0)
    throw ShapeError("forward: H and W of " + batch.shape().str() +
                     " must be divisible by 2^depth = " + std::to_string(div));
  for (float v : batch.data())
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValueError("forward: input values must lie in [0,1]");
}

namespace {

Tensor block_forward(ConvBlock& blk, const Tensor& x, ops::Mode mode, float p, Rng& rng) {
  Tensor t = ops::conv2d(x, blk.w1, blk.b1);
  t = ops::batchnorm2d(t, blk.bn1, mode);
  t = ops::relu(t);
  t = ops::conv2d(t, blk.w2, blk.b2);
  t = ops::batchnorm2d(t, blk.bn2, mode);
  t = ops::relu(t);
  if (blk.dropout && mode == ops::Mode::train && p > 0.0f)
    t = ops::dropout2d(t, p, mode, rng);
  return t;
}

Tensor block_forward_eval(const ConvBlock& blk, const Tensor& x) {
  Tensor t = ops::conv2d(x, blk.w1, blk.b1);
  t = ops::batchnorm2d(t, blk.bn1);
  t = ops::relu(t);
  t = ops::conv2d(t, blk.w2, blk.b2);
  t = ops::batchnorm2d(t, blk.bn2);
  return ops::relu(t);
}

}  // namespace

Tensor UNet::forward(const Tensor& batch, ops::Mode mode, u64 dropout_seed) {
  if (mode == ops::Mode::eval) return static_cast<const UNet&>(*this).forward(batch);
  check_input(batch);
  Rng rng(dropout_seed);
  std::vector<Tensor> skips;
  Tensor t = batch;
  for (auto& blk : enc_) {
    t = block_forward(blk, t, mode, cfg_.dropout_p, rng);
    skips.push_back(t);
    t = ops::maxpool2x2(t);
  }
  t = block_forward(bottleneck_, t, mode, cfg_.dropout_p, rng);
  for (i64 i = cfg_.depth - 1; i >= 0; --i) {
    auto& stage = dec_[static_cast<std::size_t>(i)];
    t = ops::conv_transpose2d(t, stage.up_w, stage.up_b);
    t = ops::concat_channels(t, skips[static_cast<std::size_t>(i)]);
    t = block_forward(stage.block, t, mode, cfg_.dropout_p, rng);
  }
  t = ops::conv1x1(t, out_w_, out_b_);
  return ops::sigmoid(t);
}

Tensor UNet::forward(const Tensor& batch) const {
  check_input(batch);
  NoGradGuard guard;  // pure inference: no lineage, no saved activations
  std::vector<Tensor> skips;
  Tensor t = batch;
  for (const auto& blk : enc_) {
    t = block_forward_eval(blk, t);
    skips.push_back(t);
    t = ops::maxpool2x2(t);
  }
  t = block_forward_eval(bottleneck_, t);
  for (i64 i = cfg_.depth - 1; i >= 0; --i) {
    const auto& stage = dec_[static_cast<std::size_t>(i)];
    t = ops::conv_transpose2d(t, stage.up_w, stage.up_b);
    t = ops::concat_channels(t, skips[static_cast<std::size_t>(i)]);
    t = block_forward_eval(stage.block, t);
  }
  t = ops::conv1x1(t, out_w_, out_b_);
  return ops::sigmoid(t);
}

Tensor binarize(const Tensor& prob, float threshold) {
  if (!(threshold >= 0.0f && threshold <= 1.0f))
    throw ValueError("binarize: threshold must lie in [0,1]");
  Tensor mask = Tensor::zeros(prob.shape());
  auto md = mask.mutable_data();
  auto pd = prob.data();
  for (i64 i = 0; i < prob.numel(); ++i) {
    if (!(pd[i] >= 0.0f && pd[i] <= 1.0f))
      throw ValueError("binarize: probabilities must lie in [0,1]");
    md[i] = pd[i] >= threshold ? 1.0f : 0.0f;
  }
  return mask;
}

// ---- double-precision reference forward ------------------------------------

namespace {

struct DTensor {
  i64 n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;
  i64 numel() const { return n * c * h * w; }
};

DTensor to_double(const Tensor& t) {
  DTensor d;
  if (t.shape().rank() == 4) {
    d.n = t.shape().n();
    d.c = t.shape().c();
    d.h = t.shape().h();
    d.w = t.shape().w();
  } else {
    d.n = 1;
    d.c = t.numel();
    d.h = 1;
    d.w = 1;
  }
  d.data.assign(t.data().begin(), t.data().end());
  return d;
}

std::vector<double> flat_double(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

DTensor ref_conv2d(const DTensor& x, const Tensor& w, const Tensor& b) {
  const i64 k = w.shape()[0];
  DTensor y{x.n, k, x.h, x.w, std::vector<double>(static_cast<std::size_t>(x.n * k * x.h * x.w))};
  auto wd = flat_double(w);
  auto bd = flat_double(b);
  kern::conv2d_fwd(x.data.data(), wd.data(), bd.data(), y.data.data(), x.n, x.c,
                   x.h, x.w, k, 0, k);
  return y;
}

DTensor ref_bn(const DTensor& x, const ops::BatchNormState& st, bool train) {
  const i64 hw = x.h * x.w;
  std::vector<double> mean(static_cast<std::size_t>(x.c)), var(static_cast<std::size_t>(x.c));
  if (train) {
    kern::channel_mean_var(x.data.data(), x.n, x.c, hw, mean.data(), var.data());
  } else {
    for (i64 ci = 0; ci < x.c; ++ci) {
      mean[static_cast<std::size_t>(ci)] = st.running_mean.data()[static_cast<std::size_t>(ci)];
      var[static_cast<std::size_t>(ci)] = st.running_var.data()[static_cast<std::size_t>(ci)];
    }
  }
  DTensor y{x.n, x.c, x.h, x.w, std::vector<double>(x.data.size())};
  for (i64 ni = 0; ni < x.n; ++ni)
    for (i64 ci = 0; ci < x.c; ++ci) {
      const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(ci)] +
                                         static_cast<double>(st.eps));
      const double g = st.gamma.data()[static_cast<std::size_t>(ci)];
      const double be = st.beta.data()[static_cast<std::size_t>(ci)];
      const i64 base = (ni * x.c + ci) * hw;
      for (i64 p = 0; p < hw; ++p)
        y.data[static_cast<std::size_t>(base + p)] =
            g * ((x.data[static_cast<std::size_t>(base + p)] -
                  mean[static_cast<std::size_t>(ci)]) * inv) + be;
    }
  return y;
}

DTensor ref_relu(DTensor x) {
  for (auto& v : x.data) v = v > 0.0 ? v : 0.0;
  return x;
}

DTensor ref_block(const ConvBlock& blk, const DTensor& x, bool train) {
  DTensor t = ref_conv2d(x, blk.w1, blk.b1);
  t = ref_relu(ref_bn(t, blk.bn1, train));
  t = ref_conv2d(t, blk.w2, blk.b2);
  return ref_relu(ref_bn(t, blk.bn2, train));
}

DTensor ref_maxpool(const DTensor& x) {
  DTensor y{x.n, x.c, x.h / 2, x.w / 2, {}};
  y.data.resize(static_cast<std::size_t>(y.numel()));
  std::vector<u8> arg(y.data.size());
  kern::maxpool2x2_fwd(x.data.data(), y.data.data(), arg.data(), x.n, x.c, x.h, x.w);
  return y;
}

DTensor ref_convt(const DTensor& x, const Tensor& w, const Tensor& b) {
  const i64 k = w.shape()[1];
  DTensor y{x.n, k, 2 * x.h, 2 * x.w, {}};
  y.data.resize(static_cast<std::size_t>(y.numel()));
  auto wd = flat_double(w);
  auto bd = flat_double(b);
  kern::convt2x2_fwd(x.data.data(), wd.data(), bd.data(), y.data.data(), x.n,
                     x.c, x.h, x.w, k, 0, k);
  return y;
}

DTensor ref_concat(const DTensor& a, const DTensor& b) {
  DTensor y{a.n, a.c + b.c, a.h, a.w, {}};
  y.data.resize(static_cast<std::size_t>(y.numel()));
  const i64 hw = a.h * a.w;
  for (i64 ni = 0; ni < a.n; ++ni) {
    std::copy_n(a.data.begin() + ni * a.c * hw, a.c * hw,
                y.data.begin() + ni * y.c * hw);
    std::copy_n(b.data.begin() + ni * b.c * hw, b.c * hw,
                y.data.begin() + ni * y.c * hw + a.c * hw);
  }
  return y;
}

DTensor ref_conv1x1(const DTensor& x, const Tensor& w, const Tensor& b) {
  const i64 k = w.shape()[0];
  DTensor y{x.n, k, x.h, x.w, {}};
  y.data.resize(static_cast<std::size_t>(y.numel()));
  auto wd = flat_double(w);
  auto bd = flat_double(b);
  kern::conv1x1_fwd(x.data.data(), wd.data(), bd.data(), y.data.data(), x.n,
                    x.c, x.h * x.w, k, 0, k);
  return y;
}

}  // namespace

double UNet::ref_loss(const Tensor& batch, const Tensor& target,
                      const LossConfig& loss_cfg, ops::Mode mode) const {
  const bool train = mode == ops::Mode::train;
  std::vector<DTensor> skips;
  DTensor t = to_double(batch);
  for (const auto& blk : enc_) {
    t = ref_block(blk, t, train);
    skips.push_back(t);
    t = ref_maxpool(t);
  }
  t = ref_block(bottleneck_, t, train);
  for (i64 i = cfg_.depth - 1; i >= 0; --i) {
    const auto& stage = dec_[static_cast<std::size_t>(i)];
    t = ref_convt(t, stage.up_w, stage.up_b);
    t = ref_concat(t, skips[static_cast<std::size_t>(i)]);
    t = ref_block(stage.block, t, train);
  }
  t = ref_conv1x1(t, out_w_, out_b_);
  for (auto& v : t.data) v = kern::sigmoid_at(v);
  auto y = flat_double(target);
  return dice_bce_ref(y, t.data, loss_cfg.bce_clamp, loss_cfg.eps_dice);
}

// ---- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'F', 'V', 'K', 'C', 'K', 'P', 'T', '1'};

std::string shape_str(const Shape& s) {
  std::string out;
  for (i64 i = 0; i < s.rank(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

Shape parse_shape(const std::string& s, const std::string& param) {
  std::vector<i64> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, 'x')) {
    try {
      dims.push_back(std::stoll(tok));
    } catch (...) {
      throw FormatError("checkpoint: corrupt shape for parameter " + param);
    }
  }
  if (dims.empty()) throw FormatError("checkpoint: corrupt shape for parameter " + param);
  return Shape(dims);
}

std::string fmt_float(float v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

void write_le32(std::string& out, u32 v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace

void save_checkpoint(const UNet& net, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const auto params = net.parameters();
  const auto& cfg = net.config();

  std::string header;
  header += "config.in_channels = " + std::to_string(cfg.in_channels) + "\n";
  header += "config.out_channels = " + std::to_string(cfg.out_channels) + "\n";
  header += "config.depth = " + std::to_string(cfg.depth) + "\n";
  header += "config.base_channels = " + std::to_string(cfg.base_channels) + "\n";
  header += "config.dropout_p = " + fmt_float(cfg.dropout_p) + "\n";
  header += "config.dropout_sites = " + dropout_sites_name(cfg.dropout_sites) + "\n";
  header += "meta.step = " + std::to_string(meta.step) + "\n";
  header += "meta.input_h = " + std::to_string(meta.input_h) + "\n";
  header += "meta.input_w = " + std::to_string(meta.input_w) + "\n";
  header += "param.count = " + std::to_string(params.size()) + "\n";
  for (std::size_t i = 0; i < params.size(); ++i) {
    header += "param." + std::to_string(i) + ".name = " + params[i].name + "\n";
    header += "param." + std::to_string(i) + ".shape = " +
              shape_str(params[i].tensor.shape()) + "\n";
  }

  std::string blob(kMagic, sizeof(kMagic));
  write_le32(blob, static_cast<u32>(header.size()));
  blob += header;
  for (const auto& p : params) {
    const auto d = p.tensor.data();
    if constexpr (std::endian::native == std::endian::little) {
      const std::size_t off = blob.size();
      blob.resize(off + d.size() * 4);
      std::memcpy(blob.data() + off, d.data(), d.size() * 4);
    } else {
      for (float f : d) {
        const u32 bits = std::bit_cast<u32>(f);
        write_le32(blob, bits);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError("checkpoint: short write to " + path.string());
}

std::pair<UNet, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("checkpoint: bad magic in " + path.string());
  const u32 header_len = static_cast<u32>(static_cast<u8>(blob[8])) |
                         static_cast<u32>(static_cast<u8>(blob[9])) << 8 |
                         static_cast<u32>(static_cast<u8>(blob[10])) << 16 |
                         static_cast<u32>(static_cast<u8>(blob[11])) << 24;
  if (12 + static_cast<std::size_t>(header_len) > blob.size())
    throw FormatError("checkpoint: truncated header in " + path.string());
  const std::string header = blob.substr(12, header_len);

  std::map<std::string, std::string> kv;
  std::stringstream ss(header);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw FormatError("checkpoint: malformed header line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint: missing header key " + key);
    return it->second;
  };

  UNetConfig cfg;
  cfg.in_channels = std::stoll(get("config.in_channels"));
  cfg.out_channels = std::stoll(get("config.out_channels"));
  cfg.depth = std::stoll(get("config.depth"));
  cfg.base_channels = std::stoll(get("config.base_channels"));
  cfg.dropout_p = std::stof(get("config.dropout_p"));
  cfg.dropout_sites = dropout_sites_from_name(get("config.dropout_sites"));
  CheckpointMeta meta;
  meta.step = std::stoull(get("meta.step"));
  meta.input_h = std::stoll(get("meta.input_h"));
  meta.input_w = std::stoll(get("meta.input_w"));

  UNet net = UNet::build(cfg, 0);
  auto params = net.parameters();
  const std::size_t count = std::stoull(get("param.count"));
  if (count != params.size())
    throw FormatError("checkpoint: manifest lists " + std::to_string(count) +
                      " parameters, architecture has " + std::to_string(params.size()));

  std::size_t offset = 12 + header_len;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = get("param." + std::to_string(i) + ".name");
    if (name != params[i].name)
      throw FormatError("checkpoint: manifest parameter " + name +
                        " does not match expected " + params[i].name);
    const Shape shape = parse_shape(get("param." + std::to_string(i) + ".shape"), name);
    if (!(shape == params[i].tensor.shape()))
      throw FormatError("checkpoint: corrupt shape for parameter " + name +
                        " (manifest " + shape.str() + ", architecture " +
                        params[i].tensor.shape().str() + ")");
    const std::size_t bytes = static_cast<std::size_t>(shape.numel()) * 4;
    if (offset + bytes > blob.size())
      throw FormatError("checkpoint: data truncated at parameter " + name);
    auto dst = params[i].tensor.mutable_data();
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(dst.data(), blob.data() + offset, bytes);
    } else {
      for (i64 e = 0; e < shape.numel(); ++e) {
        const std::size_t o = offset + static_cast<std::size_t>(e) * 4;
        const u32 bits = static_cast<u32>(static_cast<u8>(blob[o])) |
                         static_cast<u32>(static_cast<u8>(blob[o + 1])) << 8 |
                         static_cast<u32>(static_cast<u8>(blob[o + 2])) << 16 |
                         static_cast<u32>(static_cast<u8>(blob[o + 3])) << 24;
        dst[static_cast<std::size_t>(e)] = std::bit_cast<float>(bits);
      }
    }
    offset += bytes;
  }
  if (offset != blob.size())
    throw FormatError("checkpoint: " + std::to_string(blob.size() - offset) +
                      " trailing bytes after parameter data");
  return {std::move(net), meta};
}

}  // namespace fvk::unet
