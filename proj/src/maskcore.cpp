// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/maskcore.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace avse::maskcore {

namespace {

constexpr double kEps = 1e-12;

void check_shapes(const dsp::PowerSpectrum& a, const dsp::PowerSpectrum& b,
                  const char* who) {
  if (a.frames != b.frames || a.bins != b.bins)
    throw ShapeError(std::string(who) + ": speech " + std::to_string(a.frames) + "x" +
                     std::to_string(a.bins) + " vs noise " + std::to_string(b.frames) +
                     "x" + std::to_string(b.bins));
}

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

float read_f32(std::istream& is) {
  uint32_t u = read_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

void save_mask_impl(const std::string& path, int frames, int bins, uint8_t kind,
                    const double* values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_mask: cannot open " + path);
  os.write("TFMK", 4);
  write_u32(os, static_cast<uint32_t>(frames));
  write_u32(os, static_cast<uint32_t>(bins));
  os.put(static_cast<char>(kind));
  const size_t n = static_cast<size_t>(frames) * bins;
  for (size_t i = 0; i < n; ++i) write_f32(os, static_cast<float>(values[i]));
  if (!os) throw IoError("save_mask: write failed for " + path);
}

}  // namespace

Matrix local_snr_db(const dsp::PowerSpectrum& speech, const dsp::PowerSpectrum& noise) {
  check_shapes(speech, noise, "local_snr_db");
  Matrix out(speech.frames, speech.bins);
  const int64_t n = static_cast<int64_t>(out.data.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (int64_t i = 0; i < n; ++i)
    out.data[static_cast<size_t>(i)] = 10.0 * std::log10((speech.data[static_cast<size_t>(i)] + kEps) /
                                                         (noise.data[static_cast<size_t>(i)] + kEps));
  return out;
}

BinaryMask ideal_binary_mask(const dsp::PowerSpectrum& speech,
                             const dsp::PowerSpectrum& noise, MaskCriterion c) {
  check_shapes(speech, noise, "ideal_binary_mask");
  BinaryMask out(speech.frames, speech.bins);
  const int64_t n = static_cast<int64_t>(out.data.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (int64_t i = 0; i < n; ++i) {
    const double snr = 10.0 * std::log10((speech.data[static_cast<size_t>(i)] + kEps) /
                                         (noise.data[static_cast<size_t>(i)] + kEps));
    out.data[static_cast<size_t>(i)] = snr > c.lc_db ? 1 : 0;
  }
  return out;
}

BinaryMask threshold_mask(const SoftMask& m, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw BadThreshold("threshold_mask: theta must be in [0,1], got " + std::to_string(theta));
  BinaryMask out(m.frames, m.bins);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i] > theta ? 1 : 0;
  return out;
}

void save_mask(const std::string& path, const BinaryMask& m) {
  std::vector<double> vals(m.data.begin(), m.data.end());
  save_mask_impl(path, m.frames, m.bins, kMaskKindBinary, vals.data());
}

void save_mask(const std::string& path, const SoftMask& m) {
  save_mask_impl(path, m.frames, m.bins, kMaskKindSoft, m.data.data());
}

LoadedMask load_mask(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_mask: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TFMK", 4) != 0)
    throw IoError("load_mask: bad magic in " + path);
  const uint32_t frames = read_u32(is);
  const uint32_t bins = read_u32(is);
  const int kind = is.get();
  if (!is || (kind != kMaskKindBinary && kind != kMaskKindSoft))
    throw IoError("load_mask: bad header in " + path);
  LoadedMask out;
  out.kind = static_cast<uint8_t>(kind);
  out.values = SoftMask(static_cast<int>(frames), static_cast<int>(bins));
  for (auto& v : out.values.data) v = read_f32(is);
  if (!is) throw IoError("load_mask: truncated payload in " + path);
  return out;
}

}  // namespace avse::maskcore
