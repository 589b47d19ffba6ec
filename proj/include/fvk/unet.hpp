#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fvk/loss.hpp"
#include "fvk/ops.hpp"
#include "fvk/rng.hpp"
#include "fvk/tensor.hpp"

namespace fvk::unet {

enum class DropoutSites { deep_encoder_and_bottleneck, all_blocks, none };

std::string dropout_sites_name(DropoutSites s);
DropoutSites dropout_sites_from_name(const std::string& s);

struct UNetConfig {
  i64 in_channels = 1;
  i64 out_channels = 1;
  i64 depth = 4;           // number of down-sampling stages
  i64 base_channels = 64;  // channels of the first encoder block
  float dropout_p = 0.5f;
  DropoutSites dropout_sites = DropoutSites::deep_encoder_and_bottleneck;

  void validate() const;
  i64 stage_channels(i64 i) const;  // base * 2^i
};

struct ConvBlock {
  Tensor w1, b1, w2, b2;
  ops::BatchNormState bn1, bn2;
  bool dropout = false;
};

struct DecoderStage {
  Tensor up_w, up_b;
  ConvBlock block;
};

struct Param {
  std::string name;
  Tensor tensor;
  bool trainable;  // batch-norm running stats are buffers, not parameters
};
using ParameterSet = std::vector<Param>;

// Encoder/decoder with skip concatenations (upsampled features first),
// conv-BN-ReLU twice per block, channel dropout at the configured sites,
// sigmoid output head.
//
// Parameter order is canonical and documented: encoder shallow->deep
// (enc0..), bottleneck, decoder deep->shallow (dec{depth-1}..dec0), output
// head. Within a block: conv1.w, conv1.b, bn1.gamma, bn1.beta, bn1.rmean,
// bn1.rvar, then the same for conv2/bn2; decoder stages prepend up.w, up.b.
class UNet {
 public:
  // He-normal conv weights (stddev sqrt(2/fan_in)), zero biases, gamma 1,
  // beta 0. Identical seeds give bitwise-identical parameter sets.
  static UNet build(const UNetConfig& cfg, u64 seed);

  // Train mode updates batch-norm running statistics and applies dropout
  // (mask drawn from dropout_seed). Input must be (N, in_channels, H, W)
  // with H and W divisible by 2^depth and values in [0,1].
  Tensor forward(const Tensor& batch, ops::Mode mode, u64 dropout_seed = 0);
  // Eval-mode forward; a pure function of parameters and input.
  Tensor forward(const Tensor& batch) const;

  ParameterSet parameters() const;
  const UNetConfig& config() const { return cfg_; }

  // Forward-only double-precision DiceBCE evaluation along the same op
  // sequence (dropout excluded); the reference path for gradient checks.
  double ref_loss(const Tensor& batch, const Tensor& target,
                  const LossConfig& loss_cfg, ops::Mode mode) const;

 private:
  friend std::pair<UNet, struct CheckpointMeta> load_checkpoint(
      const std::filesystem::path& path);
  static UNet skeleton(const UNetConfig& cfg);
  void check_input(const Tensor& batch) const;

  UNetConfig cfg_;
  std::vector<ConvBlock> enc_;
  ConvBlock bottleneck_;
  std::vector<DecoderStage> dec_;  // index i pairs with encoder level i
  Tensor out_w_, out_b_;
};

// mask = 1 where prob >= threshold. Values must be probabilities in [0,1].
Tensor binarize(const Tensor& prob, float threshold = 0.5f);

// ---- checkpoint file --------------------------------------------------------
// Layout: magic "FVKCKPT1", u32 little-endian header length, header text
// (key = value lines: config.*, meta.*, param manifest with shapes), then the
// raw parameter data as little-endian float32 in manifest order. Round-trips
// are bitwise lossless.

struct CheckpointMeta {
  u64 step = 0;
  i64 input_h = 0;  // training resolution, used by predict to auto-resize
  i64 input_w = 0;
};

void save_checkpoint(const UNet& net, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
std::pair<UNet, CheckpointMeta> load_checkpoint(const std::filesystem::path& path);

}  // namespace fvk::unet
