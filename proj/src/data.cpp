// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace avse::data {

namespace fs = std::filesystem;
using dsp::Waveform;

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac})
    if (!(f >= 0.0 && f <= 1.0))
      throw ConfigError("SplitSpec: fractions must be in [0,1]");
  if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw ConfigError("SplitSpec: fractions must sum to 1");
}

MixtureTriple mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db,
                         Rng& rng) {
  if (clean.sample_rate != noise.sample_rate)
    throw Error("mix_at_snr: sample rates differ (" + std::to_string(clean.sample_rate) +
                " vs " + std::to_string(noise.sample_rate) + ")");
  const size_t n = clean.samples.size();
  if (noise.samples.size() < n)
    throw Error("mix_at_snr: noise must be at least as long as clean");

  double p_clean = 0.0;
  for (double x : clean.samples) p_clean += x * x;
  p_clean /= static_cast<double>(n);
  if (p_clean <= 0.0) throw DegenerateSignal("mix_at_snr: clean signal has zero power");

  const size_t offset = static_cast<size_t>(rng.next_below(noise.samples.size() - n + 1));
  double p_noise = 0.0;
  for (size_t i = 0; i < n; ++i) p_noise += noise.samples[offset + i] * noise.samples[offset + i];
  p_noise /= static_cast<double>(n);
  if (p_noise <= 0.0) throw DegenerateSignal("mix_at_snr: noise crop has zero power");

  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixtureTriple out;
  out.clean = clean;
  out.snr_db = snr_db;
  out.noise_scaled.sample_rate = clean.sample_rate;
  out.noise_scaled.samples.resize(n);
  out.mixture.sample_rate = clean.sample_rate;
  out.mixture.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double ns = gain * noise.samples[offset + i];
    out.noise_scaled.samples[i] = ns;
    out.mixture.samples[i] = clean.samples[i] + ns;
    if (std::fabs(out.mixture.samples[i]) > 1.0) out.clipped = true;
  }
  return out;
}

std::vector<int> align_indices(int src_frames, double src_fps, double target_fps,
                               int out_frames) {
  std::vector<int> idx(static_cast<size_t>(out_frames));
  for (int j = 0; j < out_frames; ++j) {
    int i = static_cast<int>(std::floor(j * src_fps / target_fps));
    idx[static_cast<size_t>(j)] = std::min(i, src_frames - 1);
  }
  return idx;
}

VideoSequence align_video(const VideoSequence& v, double target_fps) {
  if (target_fps < v.fps)
    throw DownsampleUnsupported("align_video: target fps " + std::to_string(target_fps) +
                                " below source fps " + std::to_string(v.fps));
  const int out_frames =
      static_cast<int>(std::ceil(v.frames * target_fps / v.fps - 1e-9));
  const std::vector<int> idx = align_indices(v.frames, v.fps, target_fps, out_frames);
  VideoSequence out;
  out.frames = out_frames;
  out.h = v.h;
  out.w = v.w;
  out.fps = target_fps;
  out.data.resize(static_cast<size_t>(out_frames) * v.h * v.w);
  const size_t frame_px = static_cast<size_t>(v.h) * v.w;
  for (int j = 0; j < out_frames; ++j)
    std::copy(v.data.begin() + idx[static_cast<size_t>(j)] * frame_px,
              v.data.begin() + (idx[static_cast<size_t>(j)] + 1) * frame_px,
              out.data.begin() + static_cast<size_t>(j) * frame_px);
  return out;
}

UttFeatures compute_utt_features(const MixtureTriple& mix, const VideoSequence* video,
                                 const dsp::FrameSpec& fspec, maskcore::MaskCriterion c) {
  UttFeatures out;
  out.mix_power = dsp::power_spectrum(dsp::stft(mix.mixture, fspec));
  const dsp::PowerSpectrum clean_p = dsp::power_spectrum(dsp::stft(mix.clean, fspec));
  const dsp::PowerSpectrum noise_p = dsp::power_spectrum(dsp::stft(mix.noise_scaled, fspec));
  out.ibm = maskcore::ideal_binary_mask(clean_p, noise_p, c);

  if (video) {
    const double frame_rate =
        static_cast<double>(mix.mixture.sample_rate) / fspec.hop;
    if (frame_rate < video->fps)
      throw DownsampleUnsupported("compute_utt_features: audio frame rate " +
                                  std::to_string(frame_rate) + " below video fps " +
                                  std::to_string(video->fps));
    const int aligned_len =
        static_cast<int>(std::ceil(video->frames * frame_rate / video->fps - 1e-9));
    if (aligned_len < out.mix_power.frames)
      throw AlignmentError("compute_utt_features: video covers " +
                           std::to_string(aligned_len) + " frames but audio has " +
                           std::to_string(out.mix_power.frames));
    out.video = *video;
    out.video_index =
        align_indices(video->frames, video->fps, frame_rate, out.mix_power.frames);
  }
  return out;
}

std::vector<SampleRecord> assemble_records(const MixtureTriple& mix,
                                           const VideoSequence& video,
                                           const dsp::FrameSpec& fspec,
                                           maskcore::MaskCriterion c, int depth,
                                           const std::string& utt_id) {
  const UttFeatures feats = compute_utt_features(mix, &video, fspec, c);
  const int frames = feats.mix_power.frames;
  const int bins = feats.mix_power.bins;
  const int t_ctx = depth + 1;
  const size_t frame_px = static_cast<size_t>(video.h) * video.w;

  std::vector<SampleRecord> out;
  for (int k = depth; k < frames; ++k) {
    SampleRecord rec;
    rec.audio_ctx = nn::Tensor({t_ctx, bins});
    rec.video_ctx = nn::Tensor({t_ctx, 1, video.h, video.w});
    rec.target = nn::Tensor({bins});
    for (int i = 0; i < t_ctx; ++i) {
      const int frame = k - depth + i;
      std::copy(&feats.mix_power.at(frame, 0), &feats.mix_power.at(frame, 0) + bins,
                rec.audio_ctx.data() + static_cast<int64_t>(i) * bins);
      const int vsrc = feats.video_index[static_cast<size_t>(frame)];
      std::copy(feats.video.data.begin() + vsrc * frame_px,
                feats.video.data.begin() + (vsrc + 1) * frame_px,
                rec.video_ctx.data() + static_cast<int64_t>(i) * static_cast<int64_t>(frame_px));
    }
    for (int f = 0; f < bins; ++f) rec.target[f] = feats.ibm.at(k, f);
    rec.utt_id = utt_id;
    rec.frame_index = k;
    rec.snr_db = mix.snr_db;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- synthetic dataset ---------------------------------------------------

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

std::string format_snr(double snr) {
  std::ostringstream os;
  os << snr;
  return os.str();
}

/// Smooth 0/1 syllabic gate at `rate` Hz.
double syllabic_envelope(double t, double rate, double phase) {
  const double s = std::sin(kTau * rate * t + phase);
  return 1.0 / (1.0 + std::exp(-8.0 * s));
}

struct UttSignals {
  Waveform clean;
  Waveform noise;
  VideoSequence video;
  // envelope sampled at video frame times, for the lip aperture
};

UttSignals synth_utterance(const SynthConfig& cfg, Rng rng) {
  const int n = static_cast<int>(cfg.utt_seconds * cfg.sample_rate);
  const double dt = 1.0 / cfg.sample_rate;

  const double f0 = rng.uniform(90.0, 180.0);
  const int n_harm = 2 + static_cast<int>(rng.next_below(3));  // 2..4
  std::vector<double> harm_amp(static_cast<size_t>(n_harm));
  std::vector<double> harm_phase(static_cast<size_t>(n_harm));
  double amp_sum = 0.0;
  for (int h = 0; h < n_harm; ++h) {
    harm_amp[static_cast<size_t>(h)] = rng.uniform(0.5, 1.0);
    harm_phase[static_cast<size_t>(h)] = rng.uniform(0.0, kTau);
    amp_sum += harm_amp[static_cast<size_t>(h)];
  }
  const double syll_rate = rng.uniform(4.0, 8.0);
  const double syll_phase = rng.uniform(0.0, kTau);

  UttSignals out;
  out.clean.sample_rate = cfg.sample_rate;
  out.clean.samples.resize(static_cast<size_t>(n));
  double lp = 0.0;  // low-passed noise floor state
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double env = syllabic_envelope(t, syll_rate, syll_phase);
    double tone = 0.0;
    for (int h = 0; h < n_harm; ++h)
      tone += harm_amp[static_cast<size_t>(h)] *
              std::sin(kTau * f0 * (h + 1) * t + harm_phase[static_cast<size_t>(h)]);
    tone /= amp_sum;
    lp = 0.9 * lp + 0.1 * rng.uniform(-1.0, 1.0);
    out.clean.samples[static_cast<size_t>(i)] = 0.2 * env * tone + 0.004 * lp;
  }

  // Nonstationary colored noise: one-pole lowpass plus slow amplitude
  // modulation, so its band overlaps the harmonics and its level swings.
  const int n_noise = n + cfg.sample_rate / 2;
  const double pole = rng.uniform(0.6, 0.92);
  const double am_rate = rng.uniform(0.5, 2.0);
  const double am_phase = rng.uniform(0.0, kTau);
  out.noise.sample_rate = cfg.sample_rate;
  out.noise.samples.resize(static_cast<size_t>(n_noise));
  double state = 0.0;
  double rms_acc = 0.0;
  for (int i = 0; i < n_noise; ++i) {
    state = pole * state + (1.0 - pole) * rng.uniform(-1.0, 1.0);
    const double am = 0.55 + 0.45 * std::sin(kTau * am_rate * i * dt + am_phase);
    out.noise.samples[static_cast<size_t>(i)] = state * am;
    rms_acc += out.noise.samples[static_cast<size_t>(i)] * out.noise.samples[static_cast<size_t>(i)];
  }
  const double rms = std::sqrt(rms_acc / n_noise);
  for (auto& x : out.noise.samples) x *= 0.1 / rms;

  // Lip frames: a soft ellipse whose vertical spread follows the envelope.
  // ceil() so the video spans the full utterance, including the last frame.
  const int n_frames = std::max(1, static_cast<int>(std::ceil(cfg.utt_seconds * cfg.video_fps)));
  out.video.frames = n_frames;
  out.video.h = cfg.video_h;
  out.video.w = cfg.video_w;
  out.video.fps = cfg.video_fps;
  out.video.data.resize(static_cast<size_t>(n_frames) * cfg.video_h * cfg.video_w);
  const double cy = 0.5 * (cfg.video_h - 1);
  const double cx = 0.5 * (cfg.video_w - 1);
  const double sx = 0.25 * cfg.video_w;
  for (int j = 0; j < n_frames; ++j) {
    const double t = j / cfg.video_fps;
    const double env = syllabic_envelope(t, syll_rate, syll_phase);
    const double sy = (0.08 + 0.32 * env) * cfg.video_h;
    for (int y = 0; y < cfg.video_h; ++y) {
      for (int x = 0; x < cfg.video_w; ++x) {
        const double dy = (y - cy) / sy;
        const double dx = (x - cx) / sx;
        double v = 0.15 + 0.75 * std::exp(-0.5 * (dx * dx + dy * dy));
        v += rng.uniform(-0.02, 0.02);
        out.video.at(j, y, x) = std::min(1.0, std::max(0.0, v));
      }
    }
  }
  return out;
}

}  // namespace

void synth_toy_dataset(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.n_utts < 1) throw ConfigError("synth_toy_dataset: n_utts must be >= 1");
  if (cfg.snr_grid.empty()) throw ConfigError("synth_toy_dataset: empty snr grid");

  const fs::path root(out_dir);
  std::error_code ec;
  for (const char* sub : {"clean", "noise", "mix", "video"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw IoError("synth_toy_dataset: cannot create " + (root / sub).string());
  }

  const Rng base(cfg.seed);
  const int n_snr = static_cast<int>(cfg.snr_grid.size());
  std::vector<ManifestRow> rows(static_cast<size_t>(cfg.n_utts) * n_snr);
  std::exception_ptr first_error;

#pragma omp parallel for schedule(dynamic)
  for (int u = 0; u < cfg.n_utts; ++u) {
    try {
    char id[16];
    std::snprintf(id, sizeof(id), "utt%04d", u);
    const UttSignals sig = synth_utterance(cfg, base.split(1000 + static_cast<uint64_t>(u)));

    const std::string video_rel = "video/" + std::string(id) + ".lipv";
    save_video_tensor((root / video_rel).string(), sig.video);

    for (int si = 0; si < n_snr; ++si) {
      const double snr = cfg.snr_grid[static_cast<size_t>(si)];
      Rng crop_rng = base.split(3000 + static_cast<uint64_t>(u) * 64 + static_cast<uint64_t>(si));
      MixtureTriple triple = mix_at_snr(sig.clean, sig.noise, snr, crop_rng);

      // Common safety rescale keeps the files clip-free without changing the
      // SNR or the clean+noise==mixture identity.
      double peak = 0.0;
      for (size_t i = 0; i < triple.mixture.samples.size(); ++i)
        peak = std::max({peak, std::fabs(triple.mixture.samples[i]),
                         std::fabs(triple.clean.samples[i]),
                         std::fabs(triple.noise_scaled.samples[i])});
      if (peak > 0.95) {
        const double s = 0.95 / peak;
        for (auto& x : triple.clean.samples) x *= s;
        for (auto& x : triple.noise_scaled.samples) x *= s;
        for (auto& x : triple.mixture.samples) x *= s;
      }

      const std::string tag = std::string(id) + "_snr" + format_snr(snr);
      ManifestRow row;
      row.utt_id = id;
      row.clean_path = "clean/" + tag + ".wav";
      row.noise_path = "noise/" + tag + ".wav";
      row.mix_path = "mix/" + tag + ".wav";
      row.video_path = video_rel;
      row.snr_db = snr;
      save_wav((root / row.clean_path).string(), triple.clean);
      save_wav((root / row.noise_path).string(), triple.noise_scaled);
      save_wav((root / row.mix_path).string(), triple.mixture);
      rows[static_cast<size_t>(u) * n_snr + si] = std::move(row);
    }
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  save_manifest((root / "manifest.tsv").string(), rows);
}

// ---- manifest --------------------------------------------------------------

std::vector<ManifestRow> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_manifest: cannot open " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 7)
      throw IoError("load_manifest: " + path + ":" + std::to_string(lineno) +
                    ": expected 7 tab-separated fields, got " + std::to_string(fields.size()));
    ManifestRow row;
    row.utt_id = fields[0];
    row.clean_path = fields[1];
    row.noise_path = fields[2];
    row.mix_path = fields[3];
    row.video_path = fields[4];
    row.snr_db = std::stod(fields[5]);
    row.split = fields[6];
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("save_manifest: cannot open " + path);
  for (const ManifestRow& r : rows)
    os << r.utt_id << '\t' << r.clean_path << '\t' << r.noise_path << '\t' << r.mix_path
       << '\t' << r.video_path << '\t' << format_snr(r.snr_db) << '\t' << r.split << '\n';
  if (!os) throw IoError("save_manifest: write failed for " + path);
}

SplitManifests split_manifest(const std::vector<ManifestRow>& rows, const SplitSpec& s) {
  s.validate();
  if (rows.empty()) throw EmptyDataset("split_manifest: empty manifest");

  std::vector<std::string> ids;
  {
    std::map<std::string, bool> seen;
    for (const ManifestRow& r : rows)
      if (!seen.count(r.utt_id)) {
        seen[r.utt_id] = true;
        ids.push_back(r.utt_id);
      }
  }
  std::sort(ids.begin(), ids.end());
  Rng rng(s.seed);
  for (size_t i = ids.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng.next_below(i + 1));
    std::swap(ids[i], ids[j]);
  }

  const int64_t n = static_cast<int64_t>(ids.size());
  int64_t n_train = std::llround(n * s.train_frac);
  int64_t n_val = std::llround(n * s.val_frac);
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  std::map<std::string, std::string> tag;
  for (int64_t i = 0; i < n; ++i)
    tag[ids[static_cast<size_t>(i)]] = i < n_train ? "train" : i < n_train + n_val ? "val" : "test";

  SplitManifests out;
  for (ManifestRow r : rows) {
    r.split = tag[r.utt_id];
    if (r.split == "train") out.train.push_back(std::move(r));
    else if (r.split == "val") out.val.push_back(std::move(r));
    else out.test.push_back(std::move(r));
  }
  return out;
}

// ---- WAV -----------------------------------------------------------------

namespace {

void wav_write_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void wav_write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint16_t wav_read_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t wav_read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UnsupportedWav("load_wav: cannot open " + path);
  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0)
    throw UnsupportedWav("load_wav: " + path + ": not a RIFF file");
  wav_read_u32(is);  // overall size, unused
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0)
    throw UnsupportedWav("load_wav: " + path + ": not a WAVE file");

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  bool have_data = false;

  while (is) {
    is.read(tag, 4);
    if (!is) break;
    const uint32_t chunk_size = wav_read_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16)
        throw UnsupportedWav("load_wav: " + path + ": fmt chunk too small");
      format = wav_read_u16(is);
      channels = wav_read_u16(is);
      rate = wav_read_u32(is);
      wav_read_u32(is);  // byte rate
      wav_read_u16(is);  // block align
      bits = wav_read_u16(is);
      is.ignore(chunk_size - 16 + (chunk_size % 2));
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      pcm.resize(chunk_size / 2);
      for (auto& s : pcm) s = static_cast<int16_t>(wav_read_u16(is));
      if (chunk_size % 2) is.ignore(1);
      have_data = true;
    } else {
      is.ignore(chunk_size + (chunk_size % 2));
    }
  }
  if (!have_fmt || !have_data)
    throw UnsupportedWav("load_wav: " + path + ": missing fmt or data chunk");
  if (format != 1)
    throw UnsupportedWav("load_wav: " + path + ": only PCM supported, got format " +
                         std::to_string(format));
  if (channels != 1)
    throw UnsupportedWav("load_wav: " + path + ": only mono supported, got " +
                         std::to_string(channels) + " channels");
  if (bits != 16)
    throw UnsupportedWav("load_wav: " + path + ": only 16-bit supported, got " +
                         std::to_string(bits));

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(pcm.size());
  for (size_t i = 0; i < pcm.size(); ++i) w.samples[i] = pcm[i] / 32767.0;
  return w;
}

void save_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_wav: cannot open " + path);
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  wav_write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wav_write_u32(os, 16);
  wav_write_u16(os, 1);  // PCM
  wav_write_u16(os, 1);  // mono
  wav_write_u32(os, static_cast<uint32_t>(w.sample_rate));
  wav_write_u32(os, static_cast<uint32_t>(w.sample_rate) * 2);
  wav_write_u16(os, 2);   // block align
  wav_write_u16(os, 16);  // bits
  os.write("data", 4);
  wav_write_u32(os, data_bytes);
  for (double x : w.samples) {
    const double clamped = std::min(1.0, std::max(-1.0, x));
    const long q = std::lround(clamped * 32767.0);  // half away from zero
    wav_write_u16(os, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  if (!os) throw IoError("save_wav: write failed for " + path);
}

// ---- LIPV ------------------------------------------------------------------

VideoSequence load_video_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw BadVideoFile("load_video_tensor: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LIPV", 4) != 0)
    throw BadVideoFile("load_video_tensor: bad magic in " + path);
  const uint32_t version = wav_read_u32(is);
  if (version != 1)
    throw BadVideoFile("load_video_tensor: unsupported version in " + path);
  const uint32_t frames = wav_read_u32(is);
  const uint32_t h = wav_read_u32(is);
  const uint32_t w = wav_read_u32(is);
  const uint32_t fps_bits = wav_read_u32(is);
  float fps;
  std::memcpy(&fps, &fps_bits, 4);
  if (!is || frames == 0 || h == 0 || w == 0 || !(fps > 0.0f))
    throw BadVideoFile("load_video_tensor: bad header in " + path);

  VideoSequence v;
  v.frames = static_cast<int>(frames);
  v.h = static_cast<int>(h);
  v.w = static_cast<int>(w);
  v.fps = fps;
  v.data.resize(static_cast<size_t>(frames) * h * w);
  for (auto& px : v.data) {
    const uint32_t bits = wav_read_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    px = f;
  }
  if (!is) throw BadVideoFile("load_video_tensor: payload shorter than header dims in " + path);
  return v;
}

void save_video_tensor(const std::string& path, const VideoSequence& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_video_tensor: cannot open " + path);
  os.write("LIPV", 4);
  wav_write_u32(os, 1);
  wav_write_u32(os, static_cast<uint32_t>(v.frames));
  wav_write_u32(os, static_cast<uint32_t>(v.h));
  wav_write_u32(os, static_cast<uint32_t>(v.w));
  const float fps = static_cast<float>(v.fps);
  uint32_t fps_bits;
  std::memcpy(&fps_bits, &fps, 4);
  wav_write_u32(os, fps_bits);
  for (double px : v.data) {
    const float f = static_cast<float>(px);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    wav_write_u32(os, bits);
  }
  if (!os) throw IoError("save_video_tensor: write failed for " + path);
}

}  // namespace avse::data
