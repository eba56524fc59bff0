// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace avse::maskcore {

/// Hard time-frequency mask over {0,1}, row-major [frames, bins].
struct BinaryMask {
  int frames = 0;
  int bins = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int t, int f) : frames(t), bins(f), data(static_cast<size_t>(t) * f, 0) {}
  uint8_t& at(int t, int f) { return data[static_cast<size_t>(t) * bins + f]; }
  uint8_t at(int t, int f) const { return data[static_cast<size_t>(t) * bins + f]; }
};

/// Real-valued mask over [0,1], row-major [frames, bins].
struct SoftMask {
  int frames = 0;
  int bins = 0;
  std::vector<double> data;

  SoftMask() = default;
  SoftMask(int t, int f, double fill = 0.0)
      : frames(t), bins(f), data(static_cast<size_t>(t) * f, fill) {}
  double& at(int t, int f) { return data[static_cast<size_t>(t) * bins + f]; }
  double at(int t, int f) const { return data[static_cast<size_t>(t) * bins + f]; }
};

inline SoftMask to_soft(const BinaryMask& m) {
  SoftMask out(m.frames, m.bins);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i] ? 1.0 : 0.0;
  return out;
}

// TFMK mask dump: little-endian, magic "TFMK", u32 frames, u32 bins,
// u8 kind (0=binary, 1=soft), then frames*bins float32 row-major.
constexpr uint8_t kMaskKindBinary = 0;
constexpr uint8_t kMaskKindSoft = 1;

void save_mask(const std::string& path, const BinaryMask& m);
void save_mask(const std::string& path, const SoftMask& m);

struct LoadedMask {
  uint8_t kind = kMaskKindSoft;
  SoftMask values;  // binary masks load as 0/1 values
};
LoadedMask load_mask(const std::string& path);

}  // namespace avse::maskcore
