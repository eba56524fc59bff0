// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "avse/dsp.hpp"
#include "avse/maskcore.hpp"
#include "avse/rng.hpp"
#include "avse/tensor.hpp"

namespace avse::data {

/// Grayscale frame sequence, values in [0,1], frame-major row-major.
struct VideoSequence {
  int frames = 0;
  int h = 0;
  int w = 0;
  double fps = 25.0;
  std::vector<double> data;

  double& at(int t, int y, int x) {
    return data[(static_cast<size_t>(t) * h + y) * w + x];
  }
  double at(int t, int y, int x) const {
    return data[(static_cast<size_t>(t) * h + y) * w + x];
  }
};

/// Parallel clean/noise/mixture signals; mixture == clean + noise_scaled
/// sample for sample.
struct MixtureTriple {
  dsp::Waveform clean;
  dsp::Waveform noise_scaled;
  dsp::Waveform mixture;
  double snr_db = 0.0;
  bool clipped = false;  // |mixture| exceeded 1 in the float domain
};

/// One aligned training unit: mixture power-spectrum context, lip-frame
/// context and the IBM row of the most recent frame.
struct SampleRecord {
  nn::Tensor audio_ctx;  // [T_ctx, F] raw power rows t_{k-depth}..t_k
  nn::Tensor video_ctx;  // [T_ctx, 1, H, W]
  nn::Tensor target;     // [F] in {0,1}
  std::string utt_id;
  int frame_index = 0;
  double snr_db = 0.0;
};

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.2;
  double test_frac = 0.0;
  uint64_t seed = 0;
  void validate() const;
};

/// Scales a random crop of `noise` so that the mixture hits the requested
/// SNR over the whole clean-utterance extent, then mixes. No post-mix
/// renormalization; clipping is only flagged. The rng chooses the crop
/// offset.
MixtureTriple mix_at_snr(const dsp::Waveform& clean, const dsp::Waveform& noise,
                         double snr_db, Rng& rng);

/// Nearest-earlier-frame repetition to a higher rate: output frame j shows
/// input frame floor(j * fps / target_fps). The 25->75 case is exact x3
/// repetition.
VideoSequence align_video(const VideoSequence& v, double target_fps);

/// Index map used by align_video: entry j is the source frame for output j.
std::vector<int> align_indices(int src_frames, double src_fps, double target_fps,
                               int out_frames);

/// Shared per-utterance feature block: mixture power spectrum, IBM from the
/// parallel clean/noise spectra, and the video frame index per audio frame.
struct UttFeatures {
  dsp::PowerSpectrum mix_power;
  maskcore::BinaryMask ibm;
  VideoSequence video;          // raw frames (possibly empty when unused)
  std::vector<int> video_index; // audio frame -> raw video frame
};
UttFeatures compute_utt_features(const MixtureTriple& mix, const VideoSequence* video,
                                 const dsp::FrameSpec& fspec, maskcore::MaskCriterion c);

/// Materializes one SampleRecord per frame k in [depth, T-1].
std::vector<SampleRecord> assemble_records(const MixtureTriple& mix,
                                           const VideoSequence& video,
                                           const dsp::FrameSpec& fspec,
                                           maskcore::MaskCriterion c, int depth,
                                           const std::string& utt_id);

// ---- synthetic dataset -------------------------------------------------

struct SynthConfig {
  int n_utts = 50;
  double utt_seconds = 0.5;
  int sample_rate = 8000;
  uint64_t seed = 0;
  std::vector<double> snr_grid = {-12.0, -6.0, 0.0, 6.0};
  int video_h = 16;
  int video_w = 24;
  double video_fps = 25.0;
};

/// Writes clean/noise/mixture WAVs, lip-frame tensors and manifest.tsv under
/// out_dir. Speech is harmonic tones under a syllabic on/off envelope; noise
/// is amplitude-modulated colored noise; lip frames open with the envelope,
/// so the visual stream genuinely carries speech activity. Fully determined
/// by cfg.seed.
void synth_toy_dataset(const SynthConfig& cfg, const std::string& out_dir);

// ---- manifest ----------------------------------------------------------

struct ManifestRow {
  std::string utt_id;
  std::string clean_path;
  std::string noise_path;
  std::string mix_path;
  std::string video_path;
  double snr_db = 0.0;
  std::string split = "-";
};

std::vector<ManifestRow> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestRow>& rows);

struct SplitManifests {
  std::vector<ManifestRow> train;
  std::vector<ManifestRow> val;
  std::vector<ManifestRow> test;
};
/// Deterministic seeded shuffle and partition at utterance granularity.
SplitManifests split_manifest(const std::vector<ManifestRow>& rows, const SplitSpec& s);

// ---- file formats ------------------------------------------------------

/// RIFF/WAVE PCM16 mono only; samples scale to [-1,1] by 1/32767.
dsp::Waveform load_wav(const std::string& path);
/// Clamps to [-1,1] and quantizes round-half-away at scale 32767.
void save_wav(const std::string& path, const dsp::Waveform& w);

/// LIPV tensor: little-endian, magic "LIPV", u32 version, u32 T, u32 H,
/// u32 W, f32 fps, then T*H*W float32 in [0,1].
VideoSequence load_video_tensor(const std::string& path);
void save_video_tensor(const std::string& path, const VideoSequence& v);

}  // namespace avse::data
