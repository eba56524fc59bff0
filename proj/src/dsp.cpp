// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace avse::dsp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// FFTW plan creation/destruction is not thread-safe; execution on private
// buffers is.
std::mutex g_fftw_mutex;

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    real_ = fftw_alloc_real(static_cast<size_t>(n));
    cplx_ = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, cplx_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, cplx_, real_, FFTW_ESTIMATE);
  }

  ~RealFft() {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(cplx_);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // in: n reals, out: n/2+1 complex bins (unnormalized).
  void forward(const double* in, std::complex<double>* out) {
    std::copy(in, in + n_, real_);
    fftw_execute(fwd_);
    for (int f = 0; f <= n_ / 2; ++f) out[f] = {cplx_[f][0], cplx_[f][1]};
  }

  // in: n/2+1 complex bins, out: n reals, scaled by 1/n.
  void inverse(const std::complex<double>* in, double* out) {
    for (int f = 0; f <= n_ / 2; ++f) {
      cplx_[f][0] = in[f].real();
      cplx_[f][1] = in[f].imag();
    }
    fftw_execute(inv_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = real_[i] * scale;
  }

 private:
  int n_;
  double* real_;
  fftw_complex* cplx_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

int frame_count(size_t n_samples, const FrameSpec& spec) {
  if (n_samples < static_cast<size_t>(spec.frame_len))
    throw InputTooShort("frame_signal: signal of " + std::to_string(n_samples) +
                        " samples is shorter than one frame (" +
                        std::to_string(spec.frame_len) + ")");
  return static_cast<int>((n_samples - spec.frame_len) / spec.hop) + 1;
}

}  // namespace

WindowKind window_from_string(const std::string& name) {
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "hann") return WindowKind::kHann;
  if (name == "rect") return WindowKind::kRect;
  throw ConfigError("unknown window kind: " + name);
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kHann: return "hann";
    case WindowKind::kRect: return "rect";
  }
  return "?";
}

void FrameSpec::validate() const {
  if (hop <= 0 || frame_len < hop || fft_size < frame_len)
    throw ConfigError("FrameSpec: need 0 < hop <= frame_len <= fft_size, got hop=" +
                      std::to_string(hop) + " frame_len=" + std::to_string(frame_len) +
                      " fft_size=" + std::to_string(fft_size));
  if (fft_size % 2 != 0)
    throw ConfigError("FrameSpec: fft_size must be even, got " + std::to_string(fft_size));
}

Matrix frame_signal(const Waveform& w, const FrameSpec& spec) {
  spec.validate();
  const int frames = frame_count(w.samples.size(), spec);
  Matrix out(frames, spec.frame_len);
#pragma omp parallel for schedule(static) if (frames > 16)
  for (int t = 0; t < frames; ++t) {
    const double* src = w.samples.data() + static_cast<size_t>(t) * spec.hop;
    std::copy(src, src + spec.frame_len, &out.at(t, 0));
  }
  return out;
}

std::vector<double> window_coeffs(WindowKind kind, int n) {
  if (n <= 0) throw EmptyWindow("window_coeffs: n must be >= 1");
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  if (n == 1 || kind == WindowKind::kRect) return w;
  const double denom = n - 1.0;
  for (int k = 0; k < n; ++k) {
    const double c = std::cos(2.0 * kPi * k / denom);
    w[static_cast<size_t>(k)] =
        kind == WindowKind::kHamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

Spectrogram stft(const Waveform& w, const FrameSpec& spec) {
  spec.validate();
  const int frames = frame_count(w.samples.size(), spec);
  const int bins = spec.bin_count();
  const std::vector<double> win = window_coeffs(spec.window, spec.frame_len);

  Spectrogram out;
  out.frames = frames;
  out.bins = bins;
  out.data.resize(static_cast<size_t>(frames) * bins);
  out.spec = spec;
  out.sample_rate = w.sample_rate;

#pragma omp parallel
  {
    RealFft fft(spec.fft_size);
    std::vector<double> buf(static_cast<size_t>(spec.fft_size), 0.0);
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      const double* src = w.samples.data() + static_cast<size_t>(t) * spec.hop;
      for (int i = 0; i < spec.frame_len; ++i) buf[static_cast<size_t>(i)] = src[i] * win[static_cast<size_t>(i)];
      std::fill(buf.begin() + spec.frame_len, buf.end(), 0.0);
      fft.forward(buf.data(), &out.data[static_cast<size_t>(t) * bins]);
    }
  }
  return out;
}

PowerSpectrum power_spectrum(const Spectrogram& s) {
  PowerSpectrum out;
  out.frames = s.frames;
  out.bins = s.bins;
  out.spec = s.spec;
  out.data.resize(s.data.size());
  const int64_t n = static_cast<int64_t>(s.data.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (int64_t i = 0; i < n; ++i) {
    const std::complex<double>& z = s.data[static_cast<size_t>(i)];
    out.data[static_cast<size_t>(i)] = z.real() * z.real() + z.imag() * z.imag();
  }
  return out;
}

Spectrogram apply_mask(const Spectrogram& s, const maskcore::SoftMask& m) {
  if (m.frames != s.frames || m.bins != s.bins)
    throw ShapeError("apply_mask: mask " + std::to_string(m.frames) + "x" +
                     std::to_string(m.bins) + " vs spectrogram " +
                     std::to_string(s.frames) + "x" + std::to_string(s.bins));
  Spectrogram out = s;
  const int64_t n = static_cast<int64_t>(s.data.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (int64_t i = 0; i < n; ++i)
    out.data[static_cast<size_t>(i)] = s.data[static_cast<size_t>(i)] * m.data[static_cast<size_t>(i)];
  return out;
}

Waveform istft(const Spectrogram& s) {
  const FrameSpec& spec = s.spec;
  spec.validate();
  const int frames = s.frames;
  const std::vector<double> win = window_coeffs(spec.window, spec.frame_len);
  const size_t out_len =
      static_cast<size_t>(frames - 1) * spec.hop + spec.frame_len;

  // Per-frame inverse transforms run in parallel; the overlapping adds stay
  // serial so the summation order is fixed.
  Matrix synth(frames, spec.frame_len);
#pragma omp parallel
  {
    RealFft fft(spec.fft_size);
    std::vector<double> full(static_cast<size_t>(spec.fft_size));
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      fft.inverse(&s.data[static_cast<size_t>(t) * s.bins], full.data());
      for (int i = 0; i < spec.frame_len; ++i)
        synth.at(t, i) = full[static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
    }
  }

  std::vector<double> out(out_len, 0.0);
  std::vector<double> envelope(out_len, 0.0);
  for (int t = 0; t < frames; ++t) {
    const size_t off = static_cast<size_t>(t) * spec.hop;
    for (int i = 0; i < spec.frame_len; ++i) {
      out[off + i] += synth.at(t, i);
      envelope[off + i] += win[static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
    }
  }
  for (size_t i = 0; i < out_len; ++i)
    if (envelope[i] >= 1e-10) out[i] /= envelope[i];

  Waveform w;
  w.samples = std::move(out);
  w.sample_rate = s.sample_rate;
  return w;
}

}  // namespace avse::dsp
