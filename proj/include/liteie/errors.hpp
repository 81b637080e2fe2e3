#pragma once

#include <stdexcept>
#include <string>

namespace liteie {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or directory entry does not exist.
struct NotFound : Error { using Error::Error; };

// Bytes exist but cannot be decoded as a supported image format.
struct DecodeError : Error { using Error::Error; };

// Write-side I/O failure (unwritable path, disk error).
struct IoError : Error { using Error::Error; };

// Caller passed a value outside an operation's documented domain.
struct InvalidArgument : Error { using Error::Error; };

// Tensor/kernel dimensions do not line up.
struct ShapeError : Error { using Error::Error; };

// Weights-file violations: bad magic, version, or size mismatch.
struct FormatError : Error { using Error::Error; };

// Input is valid in shape but degenerate in content (e.g. all-zero image
// where channel ratios are undefined).
struct DegenerateInput : Error { using Error::Error; };

// Training data directory is unusable (empty, or no image large enough).
struct DatasetError : Error { using Error::Error; };

// Training loss or parameters became non-finite.
struct DivergenceError : Error { using Error::Error; };

}  // namespace liteie
