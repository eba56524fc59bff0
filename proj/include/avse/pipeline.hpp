// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "avse/data.hpp"
#include "avse/eval.hpp"
#include "avse/models.hpp"
#include "avse/nn.hpp"

namespace avse::pipeline {

/// Everything an inference run needs to know besides the weights. Saved as a
/// flat `key = value` sidecar next to each checkpoint.
struct RunSettings {
  models::ModelConfig model;
  dsp::FrameSpec fspec;
  maskcore::MaskCriterion crit;
};

void save_run_settings(const std::string& path, const RunSettings& s);
RunSettings load_run_settings(const std::string& path);

struct TrainOptions {
  RunSettings settings;
  data::SplitSpec split;
  int epochs = 10;
  int batch_size = 32;
  int record_stride = 4;  // every Nth frame becomes a training record
  nn::AdamConfig adam;
  uint64_t seed = 0;
  std::string data_dir;  // directory containing manifest.tsv
  std::string out_dir;
};

struct TrainResult {
  std::string checkpoint_path;  // best-validation-loss checkpoint
  std::vector<std::string> log_lines;
  double best_val_loss = 0.0;
  double final_val_accuracy = 0.0;
};

/// Full training run: split, per-epoch train/val logging, best-val
/// checkpointing. Deterministic given (options, seed). Writes train_log.tsv,
/// manifest_{train,val,test}.tsv, best.ckpt (+.cfg) and effective.cfg under
/// out_dir. Throws DivergenceError on a non-finite loss.
TrainResult run_training(const TrainOptions& opt);

/// Runs the model over every frame of the utterance; rows with incomplete
/// context (k < context_depth) get all-ones pass-through rows.
maskcore::SoftMask model_soft_mask(const models::MaskModel& model,
                                   const dsp::PowerSpectrum& mix_power,
                                   const data::VideoSequence* video,
                                   const std::vector<int>* video_index,
                                   int batch_size = 64);

/// istft(apply_mask(stft(mixture), mask)).
dsp::Waveform enhance_waveform(const dsp::Waveform& mixture, const maskcore::SoftMask& mask,
                               const dsp::FrameSpec& fspec);

struct EvalModelRef {
  std::string name;
  const models::MaskModel* model = nullptr;
};

struct EvalOptions {
  dsp::FrameSpec fspec;
  maskcore::MaskCriterion crit;
  bool include_baselines = true;  // add "noisy" and "ibm" rows
  std::string base_dir;           // manifest paths resolve against this
};

/// Per-utterance inference + metrics, aggregated per (snr, variant). Rows
/// with unreadable files are skipped and counted into *skipped.
std::vector<eval::ReportRow> run_evaluation(const std::vector<data::ManifestRow>& rows,
                                            const std::vector<EvalModelRef>& model_list,
                                            const EvalOptions& opt, int* skipped = nullptr);

}  // namespace avse::pipeline
