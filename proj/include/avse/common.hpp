// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace avse {

// Base class for all library errors. CLI subcommands map these to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct InputTooShort : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct BadThreshold : Error { using Error::Error; };
struct BadProbability : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ModalityError : Error { using Error::Error; };
struct DegenerateSignal : Error { using Error::Error; };
struct DownsampleUnsupported : Error { using Error::Error; };
struct AlignmentError : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct UnsupportedWav : Error { using Error::Error; };
struct BadVideoFile : Error { using Error::Error; };
struct UndefinedRate : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
/// Training produced a non-finite loss; the CLI maps this to exit code 3.
struct DivergenceError : Error { using Error::Error; };

/// Dense row-major real matrix. Used for frame matrices, dB grids and other
/// intermediates that carry no domain metadata.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace avse
