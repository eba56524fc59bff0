// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <optional>
#include <string>

#include "avse/nn.hpp"
#include "avse/rng.hpp"
#include "avse/tensor.hpp"

namespace avse::models {

enum class Variant { kAudioOnly, kVisualOnly, kAudioVisual };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

/// Network dimensions. Defaults are the desk scale; the full-scale layout
/// (audio_bins=622, lstm_cells=1024, conv_maps=32/64/64/128, fusion 1024,
/// video 50x92) is configurable but slow to train on a CPU.
struct ModelConfig {
  Variant variant = Variant::kAudioVisual;
  int context_depth = 5;  // frames of history; the network sees depth+1 frames
  int audio_bins = 33;
  int lstm_cells = 32;
  std::array<int, 4> conv_maps = {4, 8, 8, 16};
  int fusion_hidden = 64;
  double dropout_p = 0.2;
  int video_h = 16;
  int video_w = 24;
  bool log_power = true;  // audio features are log(power + 1e-12) when set

  void validate() const;  // throws ConfigError
  int context_frames() const { return context_depth + 1; }
  bool uses_audio() const { return variant != Variant::kVisualOnly; }
  bool uses_video() const { return variant != Variant::kAudioOnly; }
  /// Spatial dim after n halving pools.
  static int pooled_dim(int v, int n_pools);
  /// Flattened per-frame feature width after the conv/pool stack.
  int visual_feat_dim() const;
  int fusion_input_width() const;
};

/// Mask-estimation network: stacked-LSTM audio branch, per-frame CNN + LSTM
/// visual branch, and a two-layer MLP fusion head with sigmoid outputs.
/// Single-modality variants wire only their branch into the same head.
class MaskModel {
 public:
  MaskModel(ModelConfig config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  /// Inference-mode forward. audio: [B,T_ctx,F] raw power rows; video:
  /// [B,T_ctx,1,H,W]. Returns sigmoid mask rows [B,F] in (0,1).
  nn::Tensor infer(const nn::Tensor* audio, const nn::Tensor* video) const;

  /// One forward/BCE/backward/Adam cycle; returns the pre-step loss.
  double train_step(const nn::Tensor* audio, const nn::Tensor* video,
                    const nn::Tensor& targets, const nn::AdamConfig& opt, Rng& rng);

  /// Eval-mode loss without touching gradients.
  double eval_loss(const nn::Tensor* audio, const nn::Tensor* video,
                   const nn::Tensor& targets) const;

  /// Forward + loss, optionally accumulating gradients; used by the gradient
  /// checker. Dropout is active when `training`; the rng is consumed, so the
  /// caller must replay an identical stream per call.
  double loss_for_check(const nn::Tensor* audio, const nn::Tensor* video,
                        const nn::Tensor& targets, bool with_grad, bool training,
                        Rng& rng);

 private:
  struct ForwardState;
  nn::Tensor run_forward(const nn::Tensor* audio, const nn::Tensor* video,
                         bool training, Rng* rng, ForwardState* state) const;
  void run_backward(const ForwardState& state, const nn::Tensor& grad_pred);
  void check_inputs(const nn::Tensor* audio, const nn::Tensor* video) const;

  ModelConfig config_;
  nn::ParamStore params_;
};

/// Flat `key = value` config round trip; unknown keys are rejected.
ModelConfig load_model_config(const std::string& path);
void save_model_config(const std::string& path, const ModelConfig& config);

}  // namespace avse::models
