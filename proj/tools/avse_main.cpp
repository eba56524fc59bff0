// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// avse: audio-visual speech enhancement toolkit.
//
// Subcommands: synth, mix, ibm, train, enhance, eval, gradcheck.
// Exit codes: 0 success, 1 check failure, 2 usage/input error, 3 divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avse/data.hpp"
#include "avse/dsp.hpp"
#include "avse/eval.hpp"
#include "avse/gradcheck_suite.hpp"
#include "avse/maskcore.hpp"
#include "avse/models.hpp"
#include "avse/nn.hpp"
#include "avse/pipeline.hpp"

namespace fs = std::filesystem;
using namespace avse;

namespace {

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::array<int, 4> parse_conv_maps(const std::string& s) {
  const std::vector<double> vals = parse_double_list(s);
  if (vals.size() != 4) throw ConfigError("conv maps need exactly 4 entries");
  std::array<int, 4> out{};
  for (size_t i = 0; i < 4; ++i) out[i] = static_cast<int>(vals[i]);
  return out;
}

struct FrameFlags {
  int frame_len = 1200;
  int hop = 300;
  int fft_size = 1242;
  std::string window = "hamming";

  void attach(CLI::App* cmd, int dflt_frame, int dflt_hop, int dflt_fft) {
    frame_len = dflt_frame;
    hop = dflt_hop;
    fft_size = dflt_fft;
    cmd->add_option("--frame-len", frame_len, "samples per frame");
    cmd->add_option("--hop", hop, "samples between frame starts");
    cmd->add_option("--fft-size", fft_size, "FFT size (even, >= frame length)");
    cmd->add_option("--window", window, "analysis window: hamming|hann|rect");
  }

  dsp::FrameSpec spec() const {
    dsp::FrameSpec s;
    s.frame_len = frame_len;
    s.hop = hop;
    s.fft_size = fft_size;
    s.window = dsp::window_from_string(window);
    s.validate();
    return s;
  }
};

models::MaskModel load_model(const std::string& ckpt_path, pipeline::RunSettings* settings) {
  *settings = pipeline::load_run_settings(ckpt_path + ".cfg");
  Rng rng(0);
  models::MaskModel model(settings->model, rng);
  nn::load_checkpoint(ckpt_path, model.params());
  return model;
}

int cmd_synth(const data::SynthConfig& cfg, const std::string& out_dir) {
  data::synth_toy_dataset(cfg, out_dir);
  std::ofstream os((fs::path(out_dir) / "effective.cfg").string());
  os << "n_utts = " << cfg.n_utts << "\n"
     << "seconds = " << cfg.utt_seconds << "\n"
     << "rate = " << cfg.sample_rate << "\n"
     << "seed = " << cfg.seed << "\n"
     << "snr = ";
  for (size_t i = 0; i < cfg.snr_grid.size(); ++i)
    os << (i ? "," : "") << cfg.snr_grid[i];
  os << "\nvideo_h = " << cfg.video_h << "\nvideo_w = " << cfg.video_w
     << "\nfps = " << cfg.video_fps << "\n";
  std::cout << "wrote " << cfg.n_utts * cfg.snr_grid.size() << " mixtures ("
            << cfg.n_utts << " utterances x " << cfg.snr_grid.size()
            << " SNRs) to " << out_dir << "\n";
  return 0;
}

int cmd_mix(const std::string& clean_path, const std::string& noise_path, double snr,
            uint64_t seed, const std::string& out_mix, const std::string& out_noise) {
  const dsp::Waveform clean = data::load_wav(clean_path);
  const dsp::Waveform noise = data::load_wav(noise_path);
  Rng rng(seed);
  const data::MixtureTriple triple = data::mix_at_snr(clean, noise, snr, rng);
  data::save_wav(out_mix, triple.mixture);
  if (!out_noise.empty()) data::save_wav(out_noise, triple.noise_scaled);
  double pc = 0.0, pn = 0.0;
  for (double x : triple.clean.samples) pc += x * x;
  for (double x : triple.noise_scaled.samples) pn += x * x;
  std::printf("requested %.3f dB, achieved %.9f dB%s\n", snr, 10.0 * std::log10(pc / pn),
              triple.clipped ? " (clipped)" : "");
  return 0;
}

int cmd_ibm(const std::string& clean_path, const std::string& noise_path, double lc,
            const FrameFlags& frames, const std::string& out_path) {
  const dsp::Waveform clean = data::load_wav(clean_path);
  const dsp::Waveform noise = data::load_wav(noise_path);
  if (clean.sample_rate != noise.sample_rate)
    throw UnsupportedWav("ibm: clean and noise sample rates differ");
  if (clean.samples.size() != noise.samples.size())
    throw AlignmentError("ibm: clean and noise lengths differ (" +
                         std::to_string(clean.samples.size()) + " vs " +
                         std::to_string(noise.samples.size()) + ")");
  const dsp::FrameSpec spec = frames.spec();
  const dsp::PowerSpectrum sp = dsp::power_spectrum(dsp::stft(clean, spec));
  const dsp::PowerSpectrum np = dsp::power_spectrum(dsp::stft(noise, spec));
  const maskcore::BinaryMask ibm = maskcore::ideal_binary_mask(sp, np, {lc});
  maskcore::save_mask(out_path, ibm);
  std::cout << "wrote " << ibm.frames << "x" << ibm.bins << " binary mask to " << out_path
            << "\n";
  return 0;
}

int cmd_train(pipeline::TrainOptions opt, const std::string& variant,
              const std::string& conv_maps, bool raw_power, const FrameFlags& frames) {
  opt.settings.fspec = frames.spec();
  opt.settings.model.variant = models::variant_from_string(variant);
  opt.settings.model.conv_maps = parse_conv_maps(conv_maps);
  opt.settings.model.log_power = !raw_power;
  opt.settings.model.audio_bins = opt.settings.fspec.bin_count();

  // Default lip-frame dims come from the dataset itself.
  if (opt.settings.model.uses_video() &&
      (opt.settings.model.video_h == 0 || opt.settings.model.video_w == 0)) {
    const auto manifest =
        data::load_manifest((fs::path(opt.data_dir) / "manifest.tsv").string());
    if (manifest.empty()) throw EmptyDataset("train: empty manifest");
    const data::VideoSequence v = data::load_video_tensor(
        (fs::path(opt.data_dir) / manifest.front().video_path).string());
    opt.settings.model.video_h = v.h;
    opt.settings.model.video_w = v.w;
  }

  const pipeline::TrainResult result = pipeline::run_training(opt);
  std::cout << "epoch\ttrain_loss\tval_loss\tval_tf_acc\n";
  for (const std::string& line : result.log_lines) std::cout << line << "\n";
  std::printf("best val loss %.6f, checkpoint %s\n", result.best_val_loss,
              result.checkpoint_path.c_str());
  return 0;
}

int cmd_enhance(const std::string& mix_path, const std::string& ckpt,
                const std::vector<std::string>& oracle_files, const std::string& video_path,
                double lc, const FrameFlags& frames, const std::string& out_path) {
  const dsp::Waveform mixture = data::load_wav(mix_path);
  maskcore::SoftMask mask;
  dsp::FrameSpec spec;

  if (!ckpt.empty() && !oracle_files.empty())
    throw ConfigError("enhance: --ckpt and --oracle-ibm are mutually exclusive");

  if (!oracle_files.empty()) {
    const dsp::Waveform clean = data::load_wav(oracle_files[0]);
    const dsp::Waveform noise = data::load_wav(oracle_files[1]);
    spec = frames.spec();
    const dsp::PowerSpectrum sp = dsp::power_spectrum(dsp::stft(clean, spec));
    const dsp::PowerSpectrum np = dsp::power_spectrum(dsp::stft(noise, spec));
    mask = maskcore::to_soft(maskcore::ideal_binary_mask(sp, np, {lc}));
  } else if (!ckpt.empty()) {
    pipeline::RunSettings settings;
    const models::MaskModel model = load_model(ckpt, &settings);
    spec = settings.fspec;
    const dsp::PowerSpectrum mp = dsp::power_spectrum(dsp::stft(mixture, spec));
    data::VideoSequence video;
    std::vector<int> vidx;
    const data::VideoSequence* vptr = nullptr;
    const std::vector<int>* iptr = nullptr;
    if (model.config().uses_video()) {
      if (video_path.empty())
        throw ModalityError("enhance: variant " + models::to_string(model.config().variant) +
                            " requires --video");
      video = data::load_video_tensor(video_path);
      const double frame_rate = static_cast<double>(mixture.sample_rate) / spec.hop;
      const int aligned =
          static_cast<int>(std::ceil(video.frames * frame_rate / video.fps - 1e-9));
      if (aligned < mp.frames)
        throw AlignmentError("enhance: video too short for the mixture");
      vidx = data::align_indices(video.frames, video.fps, frame_rate, mp.frames);
      vptr = &video;
      iptr = &vidx;
    }
    mask = pipeline::model_soft_mask(model, mp, vptr, iptr);
  } else {
    throw ConfigError("enhance: need --ckpt or --oracle-ibm");
  }

  const dsp::Waveform enhanced = pipeline::enhance_waveform(mixture, mask, spec);
  data::save_wav(out_path, enhanced);
  std::cout << "wrote " << enhanced.samples.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::vector<std::string>& ckpts,
             const std::string& split_filter, double lc, const FrameFlags& frames,
             bool no_baselines, const std::string& out_path) {
  std::vector<data::ManifestRow> rows = data::load_manifest(manifest_path);
  if (!split_filter.empty()) {
    std::vector<data::ManifestRow> filtered;
    for (auto& r : rows)
      if (r.split == split_filter) filtered.push_back(r);
    rows = std::move(filtered);
  }
  if (rows.empty()) throw EmptyDataset("eval: no manifest rows selected");

  std::vector<models::MaskModel> model_storage;
  std::vector<pipeline::RunSettings> settings_list;
  model_storage.reserve(ckpts.size());
  for (const std::string& c : ckpts) {
    pipeline::RunSettings s;
    model_storage.push_back(load_model(c, &s));
    settings_list.push_back(s);
  }

  pipeline::EvalOptions opt;
  opt.base_dir = fs::path(manifest_path).parent_path().string();
  opt.crit.lc_db = lc;
  opt.include_baselines = !no_baselines;
  if (!settings_list.empty()) {
    opt.fspec = settings_list.front().fspec;
    for (const auto& s : settings_list)
      if (s.fspec.frame_len != opt.fspec.frame_len || s.fspec.hop != opt.fspec.hop ||
          s.fspec.fft_size != opt.fspec.fft_size || s.fspec.window != opt.fspec.window)
        throw ConfigError("eval: checkpoints disagree on the frame spec");
  } else {
    opt.fspec = frames.spec();
  }

  std::vector<pipeline::EvalModelRef> refs;
  for (size_t i = 0; i < model_storage.size(); ++i)
    refs.push_back({models::to_string(settings_list[i].model.variant), &model_storage[i]});

  int skipped = 0;
  const std::vector<eval::ReportRow> report = pipeline::run_evaluation(rows, refs, opt, &skipped);

  std::ostringstream body;
  eval::write_report(body, report);
  if (skipped > 0) body << "# skipped_rows\t" << skipped << "\n";
  std::cout << body.str();
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw IoError("eval: cannot open " + out_path);
    os << body.str();
  }
  return 0;
}

int cmd_gradcheck(const std::string& scale, const std::string& only,
                  const std::string& corrupt) {
  if (scale != "desk") throw ConfigError("gradcheck: unsupported --scale '" + scale + "'");
  const auto results = gradcheck::run_suite(only, corrupt);
  for (const auto& r : results)
    std::printf("%-8s max_rel_err %.3e threshold %.0e %s\n", r.name.c_str(), r.max_rel_err,
                r.threshold, r.pass ? "PASS" : "FAIL");
  return gradcheck::all_pass(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio-visual time-frequency mask estimation toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic AV dataset");
  data::SynthConfig synth_cfg;
  std::string synth_out, synth_snr = "-12,-6,0,6";
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--utts", synth_cfg.n_utts, "number of utterances");
  synth->add_option("--seconds", synth_cfg.utt_seconds, "utterance duration");
  synth->add_option("--rate", synth_cfg.sample_rate, "sample rate in Hz");
  synth->add_option("--seed", synth_cfg.seed, "dataset seed");
  synth->add_option("--snr", synth_snr, "comma-separated SNR grid in dB");
  synth->add_option("--video-h", synth_cfg.video_h, "lip frame height");
  synth->add_option("--video-w", synth_cfg.video_w, "lip frame width");
  synth->add_option("--fps", synth_cfg.video_fps, "video frame rate");
  synth->set_config("--config");

  // mix
  auto* mixc = app.add_subcommand("mix", "mix clean speech with noise at a target SNR");
  std::string mix_clean, mix_noise, mix_out, mix_out_noise;
  double mix_snr = 0.0;
  uint64_t mix_seed = 0;
  mixc->add_option("clean", mix_clean, "clean WAV")->required();
  mixc->add_option("noise", mix_noise, "noise WAV")->required();
  mixc->add_option("--snr", mix_snr, "target SNR in dB")->required();
  mixc->add_option("--seed", mix_seed, "crop-offset seed");
  mixc->add_option("--out", mix_out, "mixture WAV path")->required();
  mixc->add_option("--out-noise", mix_out_noise, "scaled-noise WAV path");
  mixc->set_config("--config");

  // ibm
  auto* ibmc = app.add_subcommand("ibm", "compute the ideal binary mask of a parallel pair");
  std::string ibm_clean, ibm_noise, ibm_out;
  double ibm_lc = 0.0;
  FrameFlags ibm_frames;
  ibmc->add_option("clean", ibm_clean, "clean WAV")->required();
  ibmc->add_option("noise", ibm_noise, "scaled-noise WAV")->required();
  ibmc->add_option("--lc", ibm_lc, "local criterion in dB");
  ibmc->add_option("--out", ibm_out, "output mask path (.tfmk)")->required();
  ibm_frames.attach(ibmc, 1200, 300, 1242);
  ibmc->set_config("--config");

  // train
  auto* trainc = app.add_subcommand("train", "train a mask-estimation model");
  pipeline::TrainOptions topt;
  std::string train_variant = "av", train_conv = "4,8,8,16";
  bool train_raw_power = false;
  FrameFlags train_frames;
  topt.settings.model.video_h = 0;  // 0 = take from dataset
  topt.settings.model.video_w = 0;
  trainc->add_option("--data", topt.data_dir, "dataset directory with manifest.tsv")->required();
  trainc->add_option("--out", topt.out_dir, "output directory")->required();
  trainc->add_option("--variant", train_variant, "audio|visual|av");
  trainc->add_option("--seed", topt.seed, "training seed");
  trainc->add_option("--epochs", topt.epochs, "training epochs");
  trainc->add_option("--batch", topt.batch_size, "batch size");
  trainc->add_option("--lr", topt.adam.lr, "Adam learning rate");
  trainc->add_option("--stride", topt.record_stride, "record stride over frames");
  trainc->add_option("--context-depth", topt.settings.model.context_depth, "context history frames");
  trainc->add_option("--lstm-cells", topt.settings.model.lstm_cells, "LSTM hidden size");
  trainc->add_option("--conv-maps", train_conv, "conv channel counts, 4 comma-separated");
  trainc->add_option("--fusion-hidden", topt.settings.model.fusion_hidden, "fusion MLP width");
  trainc->add_option("--dropout", topt.settings.model.dropout_p, "dropout probability");
  trainc->add_option("--video-h", topt.settings.model.video_h, "lip frame height (0 = from data)");
  trainc->add_option("--video-w", topt.settings.model.video_w, "lip frame width (0 = from data)");
  trainc->add_flag("--raw-power", train_raw_power, "feed raw power instead of log power");
  trainc->add_option("--lc", topt.settings.crit.lc_db, "IBM local criterion in dB");
  trainc->add_option("--train-frac", topt.split.train_frac, "train fraction");
  trainc->add_option("--val-frac", topt.split.val_frac, "validation fraction");
  trainc->add_option("--test-frac", topt.split.test_frac, "test fraction");
  train_frames.attach(trainc, 64, 16, 64);
  trainc->set_config("--config");

  // enhance
  auto* enh = app.add_subcommand("enhance", "apply an estimated or oracle mask to a mixture");
  std::string enh_mix, enh_ckpt, enh_video, enh_out;
  std::vector<std::string> enh_oracle;
  double enh_lc = 0.0;
  FrameFlags enh_frames;
  enh->add_option("mixture", enh_mix, "mixture WAV")->required();
  enh->add_option("--ckpt", enh_ckpt, "model checkpoint (expects <ckpt>.cfg beside it)");
  enh->add_option("--oracle-ibm", enh_oracle, "clean and scaled-noise WAVs for the IBM oracle")
      ->expected(2);
  enh->add_option("--video", enh_video, "lip video (.lipv) for AV/V variants");
  enh->add_option("--lc", enh_lc, "local criterion for the oracle mask");
  enh->add_option("--out", enh_out, "enhanced WAV path")->required();
  enh_frames.attach(enh, 64, 16, 64);
  enh->set_config("--config");

  // eval
  auto* evalc = app.add_subcommand("eval", "objective evaluation over a manifest");
  std::string eval_manifest, eval_split, eval_out;
  std::vector<std::string> eval_ckpts;
  double eval_lc = 0.0;
  bool eval_no_baselines = false;
  FrameFlags eval_frames;
  evalc->add_option("--manifest", eval_manifest, "manifest TSV")->required();
  evalc->add_option("--ckpt", eval_ckpts, "model checkpoint(s)");
  evalc->add_option("--split", eval_split, "only rows with this split tag");
  evalc->add_option("--lc", eval_lc, "IBM local criterion in dB");
  evalc->add_flag("--no-baselines", eval_no_baselines, "skip noisy and IBM rows");
  evalc->add_option("--out", eval_out, "also write the report here");
  eval_frames.attach(evalc, 64, 16, 64);
  evalc->set_config("--config");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_scale = "desk", gc_only, gc_corrupt;
  gc->add_option("--scale", gc_scale, "check scale (desk)");
  gc->add_option("--only", gc_only, "run a single component");
  gc->add_option("--corrupt", gc_corrupt, "double a component's gradients to prove detection");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      synth_cfg.snr_grid = parse_double_list(synth_snr);
      return cmd_synth(synth_cfg, synth_out);
    }
    if (mixc->parsed())
      return cmd_mix(mix_clean, mix_noise, mix_snr, mix_seed, mix_out, mix_out_noise);
    if (ibmc->parsed()) return cmd_ibm(ibm_clean, ibm_noise, ibm_lc, ibm_frames, ibm_out);
    if (trainc->parsed())
      return cmd_train(topt, train_variant, train_conv, train_raw_power, train_frames);
    if (enh->parsed())
      return cmd_enhance(enh_mix, enh_ckpt, enh_oracle, enh_video, enh_lc, enh_frames, enh_out);
    if (evalc->parsed())
      return cmd_eval(eval_manifest, eval_ckpts, eval_split, eval_lc, eval_frames,
                      eval_no_baselines, eval_out);
    if (gc->parsed()) return cmd_gradcheck(gc_scale, gc_only, gc_corrupt);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
