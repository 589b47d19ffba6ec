#include "fvk/netpbm.hpp"

#include <cstring>
#include <fstream>

namespace fvk {

namespace {

struct Cursor {
  std::span<const u8> bytes;
  std::size_t pos = 0;

  bool eof() const { return pos >= bytes.size(); }
  u8 peek() const { return bytes[pos]; }
  u8 take() { return bytes[pos++]; }
};

bool is_ws(u8 c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

void skip_ws_and_comments(Cursor& cur) {
  while (!cur.eof()) {
    if (is_ws(cur.peek())) {
      cur.take();
    } else if (cur.peek() == '#') {
      while (!cur.eof() && cur.take() != '\n') {
      }
    } else {
      return;
    }
  }
}

i64 read_int(Cursor& cur, const char* field) {
  skip_ws_and_comments(cur);
  if (cur.eof() || cur.peek() < '0' || cur.peek() > '9')
    throw FormatError(std::string("netpbm: expected integer for ") + field);
  i64 v = 0;
  while (!cur.eof() && cur.peek() >= '0' && cur.peek() <= '9') {
    v = v * 10 + (cur.take() - '0');
    if (v > 1'000'000'000) throw FormatError(std::string("netpbm: absurd ") + field);
  }
  return v;
}

}  // namespace

ImageU8 decode_netpbm(std::span<const u8> bytes) {
  Cursor cur{bytes};
  if (bytes.size() < 2)
    throw FormatError("netpbm: input shorter than a magic number");
  const char m0 = static_cast<char>(cur.take());
  const char m1 = static_cast<char>(cur.take());
  i64 channels = 0;
  if (m0 == 'P' && m1 == '5')
    channels = 1;
  else if (m0 == 'P' && m1 == '6')
    channels = 3;
  else
    throw FormatError("netpbm: unsupported format magic '" + std::string{m0, m1} +
                      "' (only binary P5/P6)");

  const i64 width = read_int(cur, "width");
  const i64 height = read_int(cur, "height");
  const i64 maxval = read_int(cur, "maxval");
  if (width < 1 || height < 1) throw FormatError("netpbm: degenerate dimensions");
  if (maxval != 255)
    throw FormatError("netpbm: unsupported depth, maxval " + std::to_string(maxval) +
                      " (only 255)");
  if (cur.eof() || !is_ws(cur.peek()))
    throw FormatError("netpbm: missing whitespace before pixel data");
  cur.take();  // exactly one whitespace byte separates header and data

  const std::size_t need = static_cast<std::size_t>(width * height * channels);
  if (bytes.size() - cur.pos < need)
    throw FormatError("netpbm: pixel data truncated (" +
                      std::to_string(bytes.size() - cur.pos) + " of " +
                      std::to_string(need) + " bytes)");
  ImageU8 img = ImageU8::make(width, height, channels);
  std::memcpy(img.data.data(), bytes.data() + cur.pos, need);
  return img;
}

std::vector<u8> encode_netpbm(const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ValueError("encode_netpbm: channels must be 1 or 3");
  std::string header = (img.channels == 1 ? "P5\n" : "P6\n");
  header += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<u8> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

ImageU8 read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<u8> bytes((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  try {
    return decode_netpbm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_netpbm(const ImageU8& img, const std::filesystem::path& path) {
  const auto bytes = encode_netpbm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

}  // namespace fvk
