#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fvk {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using u32 = std::uint32_t;
using u8 = std::uint8_t;

// Error taxonomy; the CLI maps these onto exit codes (usage 1, data 2,
// numeric 3).
class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor/image dimensions.
class ShapeError : public Error {
  using Error::Error;
};

// A parameter outside its documented domain.
class ValueError : public Error {
  using Error::Error;
};

// Malformed file contents (bad magic, truncation, header corruption).
class FormatError : public Error {
  using Error::Error;
};

// Dataset-level problems (unpaired files, non-binary masks, empty dirs).
class DataError : public Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
  using Error::Error;
};

}  // namespace fvk
