// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace avse::pipeline {

namespace fs = std::filesystem;
using data::ManifestRow;
using data::UttFeatures;
using maskcore::BinaryMask;
using maskcore::SoftMask;
using models::MaskModel;
using models::ModelConfig;
using nn::Tensor;

// ---- run settings --------------------------------------------------------

namespace {

void write_run_settings(std::ostream& os, const RunSettings& s) {
  os << "variant = " << models::to_string(s.model.variant) << "\n"
     << "context_depth = " << s.model.context_depth << "\n"
     << "audio_bins = " << s.model.audio_bins << "\n"
     << "lstm_cells = " << s.model.lstm_cells << "\n"
     << "conv_maps = " << s.model.conv_maps[0] << "," << s.model.conv_maps[1] << ","
     << s.model.conv_maps[2] << "," << s.model.conv_maps[3] << "\n"
     << "fusion_hidden = " << s.model.fusion_hidden << "\n"
     << "dropout_p = " << s.model.dropout_p << "\n"
     << "video_h = " << s.model.video_h << "\n"
     << "video_w = " << s.model.video_w << "\n"
     << "log_power = " << (s.model.log_power ? 1 : 0) << "\n"
     << "frame_len = " << s.fspec.frame_len << "\n"
     << "hop = " << s.fspec.hop << "\n"
     << "fft_size = " << s.fspec.fft_size << "\n"
     << "window = " << dsp::to_string(s.fspec.window) << "\n"
     << "lc_db = " << s.crit.lc_db << "\n";
}

}  // namespace

void save_run_settings(const std::string& path, const RunSettings& s) {
  std::ofstream os(path);
  if (!os) throw IoError("save_run_settings: cannot open " + path);
  write_run_settings(os, s);
  if (!os) throw IoError("save_run_settings: write failed for " + path);
}

RunSettings load_run_settings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_run_settings: cannot open " + path);
  RunSettings s;
  std::string line;
  int lineno = 0;
  const auto trim = [](std::string t) {
    const size_t a = t.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::string();
    const size_t b = t.find_last_not_of(" \t\r\n");
    return t.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "variant") s.model.variant = models::variant_from_string(val);
    else if (key == "context_depth") s.model.context_depth = std::stoi(val);
    else if (key == "audio_bins") s.model.audio_bins = std::stoi(val);
    else if (key == "lstm_cells") s.model.lstm_cells = std::stoi(val);
    else if (key == "fusion_hidden") s.model.fusion_hidden = std::stoi(val);
    else if (key == "dropout_p") s.model.dropout_p = std::stod(val);
    else if (key == "video_h") s.model.video_h = std::stoi(val);
    else if (key == "video_w") s.model.video_w = std::stoi(val);
    else if (key == "log_power") s.model.log_power = (val == "1" || val == "true");
    else if (key == "frame_len") s.fspec.frame_len = std::stoi(val);
    else if (key == "hop") s.fspec.hop = std::stoi(val);
    else if (key == "fft_size") s.fspec.fft_size = std::stoi(val);
    else if (key == "window") s.fspec.window = dsp::window_from_string(val);
    else if (key == "lc_db") s.crit.lc_db = std::stod(val);
    else if (key == "conv_maps") {
      std::stringstream ss(val);
      std::string item;
      size_t i = 0;
      while (std::getline(ss, item, ',')) {
        if (i >= 4) throw ConfigError(path + ": conv_maps needs exactly 4 entries");
        s.model.conv_maps[i++] = std::stoi(trim(item));
      }
      if (i != 4) throw ConfigError(path + ": conv_maps needs exactly 4 entries");
    } else {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return s;
}

// ---- shared helpers --------------------------------------------------------

namespace {

struct LoadedUtt {
  UttFeatures feats;
  double snr_db = 0.0;
  std::string utt_id;
};

data::MixtureTriple load_triple(const ManifestRow& row, const std::string& base_dir) {
  const fs::path base(base_dir);
  data::MixtureTriple t;
  t.clean = data::load_wav((base / row.clean_path).string());
  t.noise_scaled = data::load_wav((base / row.noise_path).string());
  t.mixture = data::load_wav((base / row.mix_path).string());
  t.snr_db = row.snr_db;
  if (t.clean.sample_rate != t.mixture.sample_rate ||
      t.noise_scaled.sample_rate != t.mixture.sample_rate)
    throw UnsupportedWav("manifest row " + row.utt_id + ": sample rates differ across files");
  if (t.clean.samples.size() != t.mixture.samples.size() ||
      t.noise_scaled.samples.size() != t.mixture.samples.size())
    throw AlignmentError("manifest row " + row.utt_id + ": file lengths differ");
  return t;
}

LoadedUtt load_utt(const ManifestRow& row, const std::string& base_dir,
                   const dsp::FrameSpec& fspec, maskcore::MaskCriterion crit,
                   bool need_video) {
  LoadedUtt out;
  const data::MixtureTriple triple = load_triple(row, base_dir);
  data::VideoSequence video;
  const data::VideoSequence* vptr = nullptr;
  if (need_video) {
    video = data::load_video_tensor((fs::path(base_dir) / row.video_path).string());
    vptr = &video;
  }
  out.feats = data::compute_utt_features(triple, vptr, fspec, crit);
  out.snr_db = row.snr_db;
  out.utt_id = row.utt_id;
  return out;
}

// (utterance index, frame index) pairs with full context.
std::vector<std::pair<int, int>> build_record_index(const std::vector<LoadedUtt>& utts,
                                                    int depth, int stride) {
  std::vector<std::pair<int, int>> recs;
  for (size_t u = 0; u < utts.size(); ++u)
    for (int k = depth; k < utts[u].feats.mix_power.frames; k += stride)
      recs.emplace_back(static_cast<int>(u), k);
  return recs;
}

void gather_batch(const std::vector<LoadedUtt>& utts,
                  const std::vector<std::pair<int, int>>& recs, size_t begin, int batch,
                  const ModelConfig& cfg, Tensor* audio, Tensor* video, Tensor* targets) {
  const int t_ctx = cfg.context_frames();
  const int bins = cfg.audio_bins;
  const size_t frame_px = static_cast<size_t>(cfg.video_h) * cfg.video_w;
  for (int bi = 0; bi < batch; ++bi) {
    const auto [u, k] = recs[begin + static_cast<size_t>(bi)];
    const UttFeatures& f = utts[static_cast<size_t>(u)].feats;
    for (int i = 0; i < t_ctx; ++i) {
      const int frame = k - cfg.context_depth + i;
      if (audio)
        std::copy(&f.mix_power.at(frame, 0), &f.mix_power.at(frame, 0) + bins,
                  audio->data() + (static_cast<int64_t>(bi) * t_ctx + i) * bins);
      if (video) {
        const int vsrc = f.video_index[static_cast<size_t>(frame)];
        std::copy(f.video.data.begin() + vsrc * frame_px,
                  f.video.data.begin() + (vsrc + 1) * frame_px,
                  video->data() + (static_cast<int64_t>(bi) * t_ctx + i) *
                                      static_cast<int64_t>(frame_px));
      }
    }
    if (targets)
      for (int j = 0; j < bins; ++j)
        (*targets)[static_cast<int64_t>(bi) * bins + j] = f.ibm.at(k, j);
  }
}

std::string format_line(int epoch, double train_loss, double val_loss, double val_acc) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f\t%.6f", epoch, train_loss, val_loss,
                val_acc);
  return buf;
}

}  // namespace

// ---- training --------------------------------------------------------------

TrainResult run_training(const TrainOptions& opt) {
  const ModelConfig& mcfg = opt.settings.model;
  mcfg.validate();
  opt.settings.fspec.validate();
  if (mcfg.audio_bins != opt.settings.fspec.bin_count())
    throw ConfigError("run_training: audio_bins " + std::to_string(mcfg.audio_bins) +
                      " != fft bins " + std::to_string(opt.settings.fspec.bin_count()));
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.record_stride < 1)
    throw ConfigError("run_training: epochs, batch_size, record_stride must be >= 1");

  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("run_training: cannot create " + opt.out_dir);

  const auto manifest = data::load_manifest((fs::path(opt.data_dir) / "manifest.tsv").string());
  data::SplitSpec split = opt.split;
  const data::SplitManifests splits = data::split_manifest(manifest, split);
  if (splits.train.empty() || splits.val.empty())
    throw EmptyDataset("run_training: train or val split is empty");
  data::save_manifest((fs::path(opt.out_dir) / "manifest_train.tsv").string(), splits.train);
  data::save_manifest((fs::path(opt.out_dir) / "manifest_val.tsv").string(), splits.val);
  data::save_manifest((fs::path(opt.out_dir) / "manifest_test.tsv").string(), splits.test);

  const bool need_video = mcfg.uses_video();
  std::vector<LoadedUtt> train_utts, val_utts;
  for (const ManifestRow& row : splits.train)
    train_utts.push_back(load_utt(row, opt.data_dir, opt.settings.fspec, opt.settings.crit,
                                  need_video));
  for (const ManifestRow& row : splits.val)
    val_utts.push_back(load_utt(row, opt.data_dir, opt.settings.fspec, opt.settings.crit,
                                need_video));
  if (need_video)
    for (const auto& u : train_utts)
      if (u.feats.video.h != mcfg.video_h || u.feats.video.w != mcfg.video_w)
        throw ConfigError("run_training: video " + std::to_string(u.feats.video.h) + "x" +
                          std::to_string(u.feats.video.w) + " does not match model " +
                          std::to_string(mcfg.video_h) + "x" + std::to_string(mcfg.video_w));

  const auto train_recs = build_record_index(train_utts, mcfg.context_depth, opt.record_stride);
  const auto val_recs = build_record_index(val_utts, mcfg.context_depth, opt.record_stride);
  if (train_recs.empty() || val_recs.empty())
    throw EmptyDataset("run_training: no usable records (utterances shorter than context?)");

  Rng init_rng = Rng(opt.seed).split(1);
  MaskModel model(mcfg, init_rng);

  const int t_ctx = mcfg.context_frames();
  const auto eval_split = [&](const std::vector<LoadedUtt>& utts,
                              const std::vector<std::pair<int, int>>& recs, double* loss_out,
                              double* acc_out) {
    double loss_sum = 0.0;
    int64_t cells = 0, correct = 0, count = 0;
    for (size_t begin = 0; begin < recs.size(); begin += static_cast<size_t>(opt.batch_size)) {
      const int b = static_cast<int>(
          std::min(static_cast<size_t>(opt.batch_size), recs.size() - begin));
      Tensor audio, video, targets({b, mcfg.audio_bins});
      Tensor* ap = nullptr;
      Tensor* vp = nullptr;
      if (mcfg.uses_audio()) { audio = Tensor({b, t_ctx, mcfg.audio_bins}); ap = &audio; }
      if (mcfg.uses_video()) { video = Tensor({b, t_ctx, 1, mcfg.video_h, mcfg.video_w}); vp = &video; }
      gather_batch(utts, recs, begin, b, mcfg, ap, vp, &targets);
      const Tensor pred = model.infer(ap, vp);
      loss_sum += nn::bce_loss(pred, targets, nullptr) * b;
      for (int64_t i = 0; i < pred.size(); ++i) {
        const int est = pred[i] > 0.5 ? 1 : 0;
        if (est == static_cast<int>(targets[i])) ++correct;
        ++cells;
      }
      count += b;
    }
    *loss_out = loss_sum / static_cast<double>(count);
    *acc_out = static_cast<double>(correct) / static_cast<double>(cells);
  };

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  result.checkpoint_path = (fs::path(opt.out_dir) / "best.ckpt").string();

  std::vector<size_t> order(train_recs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::pair<int, int>> shuffled(train_recs.size());

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    Rng shuffle_rng = Rng(opt.seed).split(7000 + static_cast<uint64_t>(epoch));
    for (size_t i = order.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.next_below(i + 1));
      std::swap(order[i], order[j]);
    }
    for (size_t i = 0; i < order.size(); ++i) shuffled[i] = train_recs[order[i]];

    Rng train_rng = Rng(opt.seed).split(8000 + static_cast<uint64_t>(epoch));
    double loss_sum = 0.0;
    int64_t seen = 0;
    for (size_t begin = 0; begin < shuffled.size(); begin += static_cast<size_t>(opt.batch_size)) {
      const int b = static_cast<int>(
          std::min(static_cast<size_t>(opt.batch_size), shuffled.size() - begin));
      Tensor audio, video, targets({b, mcfg.audio_bins});
      Tensor* ap = nullptr;
      Tensor* vp = nullptr;
      if (mcfg.uses_audio()) { audio = Tensor({b, t_ctx, mcfg.audio_bins}); ap = &audio; }
      if (mcfg.uses_video()) { video = Tensor({b, t_ctx, 1, mcfg.video_h, mcfg.video_w}); vp = &video; }
      gather_batch(train_utts, shuffled, begin, b, mcfg, ap, vp, &targets);
      const double loss = model.train_step(ap, vp, targets, opt.adam, train_rng);
      if (!std::isfinite(loss))
        throw DivergenceError("run_training: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * b;
      seen += b;
    }
    const double train_loss = loss_sum / static_cast<double>(seen);

    double val_loss = 0.0, val_acc = 0.0;
    eval_split(val_utts, val_recs, &val_loss, &val_acc);
    if (!std::isfinite(val_loss))
      throw DivergenceError("run_training: non-finite validation loss at epoch " +
                            std::to_string(epoch));
    result.log_lines.push_back(format_line(epoch, train_loss, val_loss, val_acc));
    result.final_val_accuracy = val_acc;

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      nn::save_checkpoint(result.checkpoint_path, model.params());
      save_run_settings(result.checkpoint_path + ".cfg", opt.settings);
    }
  }

  {
    std::ofstream os((fs::path(opt.out_dir) / "train_log.tsv").string());
    os << "epoch\ttrain_loss\tval_loss\tval_tf_acc\n";
    for (const std::string& line : result.log_lines) os << line << '\n';
  }
  {
    std::ofstream os((fs::path(opt.out_dir) / "effective.cfg").string());
    os << "# effective training configuration\n";
    write_run_settings(os, opt.settings);
    os << "epochs = " << opt.epochs << "\n"
       << "batch_size = " << opt.batch_size << "\n"
       << "record_stride = " << opt.record_stride << "\n"
       << "lr = " << opt.adam.lr << "\n"
       << "seed = " << opt.seed << "\n"
       << "train_frac = " << opt.split.train_frac << "\n"
       << "val_frac = " << opt.split.val_frac << "\n"
       << "test_frac = " << opt.split.test_frac << "\n"
       << "data_dir = " << opt.data_dir << "\n";
  }
  return result;
}

// ---- inference -------------------------------------------------------------

maskcore::SoftMask model_soft_mask(const MaskModel& model, const dsp::PowerSpectrum& mix_power,
                                   const data::VideoSequence* video,
                                   const std::vector<int>* video_index, int batch_size) {
  const ModelConfig& cfg = model.config();
  if (cfg.audio_bins != mix_power.bins)
    throw ShapeError("model_soft_mask: model expects " + std::to_string(cfg.audio_bins) +
                     " bins, spectrum has " + std::to_string(mix_power.bins));
  if (cfg.uses_video() && (!video || !video_index))
    throw ModalityError("model_soft_mask: variant " + models::to_string(cfg.variant) +
                        " requires video");

  const int frames = mix_power.frames;
  const int depth = cfg.context_depth;
  const int t_ctx = cfg.context_frames();
  // Warm-up frames without full context pass the mixture through unchanged.
  SoftMask out(frames, mix_power.bins, 1.0);
  if (frames <= depth) return out;

  const size_t frame_px = cfg.uses_video() ? static_cast<size_t>(video->h) * video->w : 0;
  if (cfg.uses_video() && (video->h != cfg.video_h || video->w != cfg.video_w))
    throw ShapeError("model_soft_mask: video frame size mismatch");

  std::vector<int> ks;
  for (int k = depth; k < frames; ++k) ks.push_back(k);

  for (size_t begin = 0; begin < ks.size(); begin += static_cast<size_t>(batch_size)) {
    const int b = static_cast<int>(std::min(static_cast<size_t>(batch_size), ks.size() - begin));
    Tensor audio, vid;
    Tensor* ap = nullptr;
    Tensor* vp = nullptr;
    if (cfg.uses_audio()) { audio = Tensor({b, t_ctx, cfg.audio_bins}); ap = &audio; }
    if (cfg.uses_video()) { vid = Tensor({b, t_ctx, 1, cfg.video_h, cfg.video_w}); vp = &vid; }
    for (int bi = 0; bi < b; ++bi) {
      const int k = ks[begin + static_cast<size_t>(bi)];
      for (int i = 0; i < t_ctx; ++i) {
        const int frame = k - depth + i;
        if (ap)
          std::copy(&mix_power.at(frame, 0), &mix_power.at(frame, 0) + mix_power.bins,
                    audio.data() + (static_cast<int64_t>(bi) * t_ctx + i) * mix_power.bins);
        if (vp) {
          const int vsrc = (*video_index)[static_cast<size_t>(frame)];
          std::copy(video->data.begin() + vsrc * frame_px,
                    video->data.begin() + (vsrc + 1) * frame_px,
                    vid.data() + (static_cast<int64_t>(bi) * t_ctx + i) *
                                     static_cast<int64_t>(frame_px));
        }
      }
    }
    const Tensor pred = model.infer(ap, vp);
    for (int bi = 0; bi < b; ++bi) {
      const int k = ks[begin + static_cast<size_t>(bi)];
      for (int f = 0; f < mix_power.bins; ++f)
        out.at(k, f) = pred[static_cast<int64_t>(bi) * mix_power.bins + f];
    }
  }
  return out;
}

dsp::Waveform enhance_waveform(const dsp::Waveform& mixture, const SoftMask& mask,
                               const dsp::FrameSpec& fspec) {
  const dsp::Spectrogram spec = dsp::stft(mixture, fspec);
  return dsp::istft(dsp::apply_mask(spec, mask));
}

// ---- evaluation ------------------------------------------------------------

std::vector<eval::ReportRow> run_evaluation(const std::vector<ManifestRow>& rows,
                                            const std::vector<EvalModelRef>& model_list,
                                            const EvalOptions& opt, int* skipped) {
  bool any_video = false;
  for (const EvalModelRef& m : model_list)
    if (m.model->config().uses_video()) any_video = true;

  std::vector<eval::UttMetrics> metrics;
  int skip_count = 0;

  for (const ManifestRow& row : rows) {
    LoadedUtt utt;
    data::MixtureTriple triple;
    try {
      triple = load_triple(row, opt.base_dir);
      data::VideoSequence video;
      const data::VideoSequence* vptr = nullptr;
      if (any_video) {
        video = data::load_video_tensor((fs::path(opt.base_dir) / row.video_path).string());
        vptr = &video;
      }
      utt.feats = data::compute_utt_features(triple, vptr, opt.fspec, opt.crit);
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << row.utt_id << " @ " << row.snr_db
                << " dB: " << e.what() << "\n";
      ++skip_count;
      continue;
    }

    const int frames = utt.feats.mix_power.frames;
    const int bins = utt.feats.mix_power.bins;

    for (const EvalModelRef& m : model_list) {
      const ModelConfig& cfg = m.model->config();
      const SoftMask soft = model_soft_mask(
          *m.model, utt.feats.mix_power, cfg.uses_video() ? &utt.feats.video : nullptr,
          cfg.uses_video() ? &utt.feats.video_index : nullptr);
      const int depth = cfg.context_depth;

      // Mask metrics exclude warm-up frames, which carry no estimate.
      const int eval_frames = frames - depth;
      BinaryMask est_sub(eval_frames, bins), ibm_sub(eval_frames, bins);
      for (int k = depth; k < frames; ++k)
        for (int f = 0; f < bins; ++f) {
          est_sub.at(k - depth, f) = soft.at(k, f) > 0.5 ? 1 : 0;
          ibm_sub.at(k - depth, f) = utt.feats.ibm.at(k, f);
        }

      eval::UttMetrics um;
      um.snr_db = row.snr_db;
      um.variant = m.name;
      um.conf = eval::confusion(est_sub, ibm_sub);
      const dsp::Waveform enhanced = enhance_waveform(triple.mixture, soft, opt.fspec);
      um.si_sdr_db = eval::si_sdr(enhanced, triple.clean);
      um.seg_snr_db = eval::seg_snr(enhanced, triple.clean);
      um.n_frames = eval_frames;
      metrics.push_back(um);
    }

    if (opt.include_baselines) {
      eval::UttMetrics noisy;
      noisy.snr_db = row.snr_db;
      noisy.variant = "noisy";
      noisy.has_mask_metrics = false;
      noisy.si_sdr_db = eval::si_sdr(triple.mixture, triple.clean);
      noisy.seg_snr_db = eval::seg_snr(triple.mixture, triple.clean);
      noisy.n_frames = frames;
      metrics.push_back(noisy);

      eval::UttMetrics oracle;
      oracle.snr_db = row.snr_db;
      oracle.variant = "ibm";
      oracle.conf = eval::confusion(utt.feats.ibm, utt.feats.ibm);
      const dsp::Waveform enhanced =
          enhance_waveform(triple.mixture, maskcore::to_soft(utt.feats.ibm), opt.fspec);
      oracle.si_sdr_db = eval::si_sdr(enhanced, triple.clean);
      oracle.seg_snr_db = eval::seg_snr(enhanced, triple.clean);
      oracle.n_frames = frames;
      metrics.push_back(oracle);
    }
  }

  if (skipped) *skipped = skip_count;
  return eval::aggregate(metrics);
}

}  // namespace avse::pipeline
