// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "avse/rng.hpp"
#include "avse/tensor.hpp"

namespace avse::nn {

/// One trainable tensor with its gradient and Adam moment buffers. grad/m/v
/// are allocated lazily so inference-only models stay light.
struct Param {
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;

  void ensure_grad();
  void ensure_adam();
};

/// Named parameter map. std::map keeps a stable name order, which makes
/// optimizer sweeps, checkpoints and initialization deterministic.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor value);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  void zero_grads();
  int64_t total_size() const;
  size_t count() const { return params_.size(); }

  uint64_t step = 0;  // Adam step counter

 private:
  std::map<std::string, Param> params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update over every parameter; increments store.step first and uses
/// it for bias correction. Gradients are left untouched.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// ---- layers ----------------------------------------------------------
// forward(inputs, params) -> outputs (+cache); backward(cache, grad_out) ->
// grad_in, accumulating parameter gradients into the tensors the caller
// passes (they must be pre-zeroed or hold a running sum).

/// y[B,O] = x[B,I] * w[I,O] + b[O]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out,
                      Tensor* grad_w, Tensor* grad_b);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// Numerically stable logistic; large negative inputs underflow to 0.
Tensor sigmoid_forward(const Tensor& x);
/// Takes the forward *output* y, since sigmoid' = y*(1-y).
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

/// 3x3 same-padded convolution: x[B,C,H,W], k[Cout,C,3,3], b[Cout].
Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b);
Tensor conv2d_backward(const Tensor& x, const Tensor& k, const Tensor& grad_out,
                       Tensor* grad_k, Tensor* grad_b);

struct MaxPoolCache {
  std::vector<int64_t> argmax;
  std::vector<int> in_shape;  // [B,C,H,W]
};
/// 2x2 stride-2 max pooling; odd trailing row/col dropped. H,W >= 2.
Tensor maxpool2_forward(const Tensor& x, MaxPoolCache* cache);
Tensor maxpool2_backward(const Tensor& grad_out, const MaxPoolCache& cache);

/// LSTM over a [B,T,In] sequence. Weights: wx[In,4H], wh[H,4H], b[4H] with
/// gate order (i,f,g,o); sigmoid gates, tanh candidate, zero initial state.
struct LstmCache {
  Tensor x;        // [B,T,In]
  Tensor gates;    // [B,T,4H] post-activation
  Tensor cells;    // [B,T,H]
  Tensor tanh_c;   // [B,T,H]
  Tensor h_all;    // [B,T,H]
  int hidden = 0;
};
Tensor lstm_forward(const Tensor& x, const Tensor& wx, const Tensor& wh,
                    const Tensor& b, LstmCache* cache);
Tensor lstm_backward(const LstmCache& cache, const Tensor& wx, const Tensor& wh,
                     const Tensor& grad_h_all, Tensor* grad_wx, Tensor* grad_wh,
                     Tensor* grad_b);

/// h_all[B,T,H] -> last step [B,H].
Tensor last_step(const Tensor& h_all);
/// Places g[B,H] at the last step of a zero [B,T,H] gradient.
Tensor last_step_grad(const Tensor& g, int steps);

struct DropoutCache {
  Tensor scaled_mask;  // empty when dropout was inactive
  bool active = false;
};
/// Inverted dropout: zero with probability p and scale survivors by 1/(1-p)
/// during training; identity at inference. p must be in [0,1).
Tensor dropout_forward(const Tensor& x, double p, Rng& rng, bool training,
                       DropoutCache* cache);
Tensor dropout_backward(const Tensor& grad_out, const DropoutCache& cache);

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7].
/// Returns the loss; when grad_pred is non-null it receives dL/dpred.
double bce_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred);

/// Central-difference gradient check. eval(true) must (re)compute the loss
/// with gradients accumulated into freshly zeroed store grads; eval(false)
/// computes the loss only. Any randomness inside eval must be replayed
/// identically on every call. Returns the max relative error over all
/// parameter entries (0 when the store is empty); per_param optionally
/// receives the worst error per parameter name.
double grad_check(ParamStore& store, const std::function<double(bool)>& eval,
                  double h = 1e-5, std::map<std::string, double>* per_param = nullptr);

// ---- checkpoints -----------------------------------------------------
// Binary little-endian: magic "MFCK", u32 version, u32 entry count, then per
// entry u16 name length, name bytes, u8 rank, u32 dims..., float64 values.
// Adam state rides along as "<name>.m"/"<name>.v" entries and the final u64
// is the optimizer step counter.

void save_checkpoint(const std::string& path, const ParamStore& store);
/// Loads into an existing store; every stored value entry must match an
/// existing parameter's name and shape.
void load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace avse::nn
