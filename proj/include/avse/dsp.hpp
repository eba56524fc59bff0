// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "avse/common.hpp"
#include "avse/masks.hpp"

namespace avse::dsp {

/// Mono audio signal, amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

enum class WindowKind { kHamming, kHann, kRect };

WindowKind window_from_string(const std::string& name);
std::string to_string(WindowKind kind);

/// Short-time analysis geometry. The defaults give 16 kHz signals 1200-sample
/// frames with a 300-sample hop and a 622-bin one-sided spectrum.
struct FrameSpec {
  int frame_len = 1200;
  int hop = 300;
  WindowKind window = WindowKind::kHamming;
  int fft_size = 1242;

  int bin_count() const { return fft_size / 2 + 1; }
  void validate() const;  // 0 < hop <= frame_len <= fft_size, fft_size even
};

/// One-sided complex STFT, row-major [frames, bins].
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<std::complex<double>> data;
  FrameSpec spec;
  int sample_rate = 0;

  std::complex<double>& at(int t, int f) { return data[static_cast<size_t>(t) * bins + f]; }
  const std::complex<double>& at(int t, int f) const {
    return data[static_cast<size_t>(t) * bins + f];
  }
};

/// Squared-magnitude spectrum, row-major [frames, bins].
struct PowerSpectrum {
  int frames = 0;
  int bins = 0;
  std::vector<double> data;
  FrameSpec spec;

  double& at(int t, int f) { return data[static_cast<size_t>(t) * bins + f]; }
  const double& at(int t, int f) const { return data[static_cast<size_t>(t) * bins + f]; }
};

/// Slices the signal into frames of frame_len every hop samples; the trailing
/// partial frame is dropped. Throws InputTooShort when no frame fits.
Matrix frame_signal(const Waveform& w, const FrameSpec& spec);

/// Symmetric window coefficients; n == 0 throws EmptyWindow.
std::vector<double> window_coeffs(WindowKind kind, int n);

/// Windowed, zero-padded, one-sided STFT. Forward transform is unnormalized.
Spectrogram stft(const Waveform& w, const FrameSpec& spec);

PowerSpectrum power_spectrum(const Spectrogram& s);

/// Element-wise complex scaling by the mask; the noisy phase is retained.
Spectrogram apply_mask(const Spectrogram& s, const maskcore::SoftMask& m);

/// Overlap-add inverse with a synthesis window equal to the analysis window
/// and squared-window envelope normalization (envelope entries below 1e-10
/// are left undivided). Output length is (frames-1)*hop + frame_len.
Waveform istft(const Spectrogram& s);

}  // namespace avse::dsp
