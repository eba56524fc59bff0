// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "avse/common.hpp"
#include "avse/kernels.hpp"

namespace avse::nn {

namespace {

void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

void add_bias_rows(double* y, const double* b, int rows, int cols) {
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(rows) * cols > 16384)
  for (int i = 0; i < rows; ++i) {
    double* yi = y + static_cast<int64_t>(i) * cols;
    for (int j = 0; j < cols; ++j) yi[j] += b[j];
  }
}

inline double sigmoid1(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Param::ensure_grad() {
  if (grad.size() != value.size()) grad = Tensor(value.shape());
}

void Param::ensure_adam() {
  if (adam_m.size() != value.size()) adam_m = Tensor(value.shape());
  if (adam_v.size() != value.size()) adam_v = Tensor(value.shape());
}

Param& ParamStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw Error("ParamStore: duplicate parameter " + name);
  Param p;
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("ParamStore: no parameter " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("ParamStore: no parameter " + name);
  return it->second;
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) != 0; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grads() {
  for (auto& [_, p] : params_) {
    p.ensure_grad();
    p.grad.fill(0.0);
  }
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const std::string& name : store.names()) {
    Param& p = store.at(name);
    p.ensure_grad();
    p.ensure_adam();
    const int64_t n = p.value.size();
    double* v = p.value.data();
    const double* g = p.grad.data();
    double* m = p.adam_m.data();
    double* s = p.adam_v.data();
#pragma omp parallel for schedule(static) if (n > 16384)
    for (int64_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      s[i] = cfg.beta2 * s[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = s[i] / bc2;
      v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(x.rank() == 2 && w.rank() == 2 && b.rank() == 1,
        "dense_forward: expected x[B,I], w[I,O], b[O]");
  check(x.dim(1) == w.dim(0) && w.dim(1) == b.dim(0),
        "dense_forward: shape mismatch x" + x.shape_str() + " w" + w.shape_str());
  Tensor y({x.dim(0), w.dim(1)});
  kernels::matmul(x.data(), w.data(), y.data(), x.dim(0), x.dim(1), w.dim(1));
  add_bias_rows(y.data(), b.data(), x.dim(0), w.dim(1));
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out,
                      Tensor* grad_w, Tensor* grad_b) {
  check(grad_out.rank() == 2 && grad_out.dim(0) == x.dim(0) &&
            grad_out.dim(1) == w.dim(1),
        "dense_backward: grad_out shape mismatch");
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (grad_w) {
    check(grad_w->same_shape(w), "dense_backward: grad_w shape");
    kernels::matmul_tn(x.data(), grad_out.data(), grad_w->data(), in, batch, out,
                       /*accumulate=*/true);
  }
  if (grad_b) {
    check(grad_b->size() == out, "dense_backward: grad_b shape");
    for (int i = 0; i < batch; ++i) {
      const double* gi = grad_out.data() + static_cast<int64_t>(i) * out;
      for (int j = 0; j < out; ++j) (*grad_b)[j] += gi[j];
    }
  }
  Tensor grad_x({batch, in});
  kernels::matmul_nt(grad_out.data(), w.data(), grad_x.data(), batch, out, in);
  return grad_x;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  const int64_t n = y.size();
  double* d = y.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  check(x.same_shape(grad_out), "relu_backward: shape mismatch");
  Tensor g = grad_out;
  const int64_t n = g.size();
  double* d = g.data();
  const double* xv = x.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i)
    if (xv[i] <= 0.0) d[i] = 0.0;
  return g;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  const int64_t n = y.size();
  double* d = y.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) d[i] = sigmoid1(d[i]);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  check(y.same_shape(grad_out), "sigmoid_backward: shape mismatch");
  Tensor g = grad_out;
  const int64_t n = g.size();
  double* d = g.data();
  const double* yv = y.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) d[i] *= yv[i] * (1.0 - yv[i]);
  return g;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b) {
  check(x.rank() == 4 && k.rank() == 4 && b.rank() == 1,
        "conv2d_forward: expected x[B,C,H,W], k[Cout,C,3,3], b[Cout]");
  check(k.dim(2) == 3 && k.dim(3) == 3, "conv2d_forward: kernel must be 3x3");
  check(k.dim(1) == x.dim(1), "conv2d_forward: channel mismatch x" + x.shape_str() +
                                  " k" + k.shape_str());
  check(b.dim(0) == k.dim(0), "conv2d_forward: bias size mismatch");
  Tensor y({x.dim(0), k.dim(0), x.dim(2), x.dim(3)});
  kernels::conv2d_forward(x.data(), k.data(), b.data(), y.data(), x.dim(0),
                          x.dim(1), x.dim(2), x.dim(3), k.dim(0));
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& k, const Tensor& grad_out,
                       Tensor* grad_k, Tensor* grad_b) {
  check(grad_out.rank() == 4 && grad_out.dim(0) == x.dim(0) &&
            grad_out.dim(1) == k.dim(0) && grad_out.dim(2) == x.dim(2) &&
            grad_out.dim(3) == x.dim(3),
        "conv2d_backward: grad_out shape mismatch");
  if (grad_k) {
    check(grad_k->same_shape(k), "conv2d_backward: grad_k shape");
    check(grad_b && grad_b->size() == k.dim(0), "conv2d_backward: grad_b shape");
    kernels::conv2d_backward_params(x.data(), grad_out.data(), grad_k->data(),
                                    grad_b->data(), x.dim(0), x.dim(1), x.dim(2),
                                    x.dim(3), k.dim(0));
  }
  Tensor grad_x(x.shape());
  kernels::conv2d_backward_input(grad_out.data(), k.data(), grad_x.data(),
                                 x.dim(0), x.dim(1), x.dim(2), x.dim(3), k.dim(0));
  return grad_x;
}

Tensor maxpool2_forward(const Tensor& x, MaxPoolCache* cache) {
  check(x.rank() == 4, "maxpool2_forward: expected x[B,C,H,W]");
  if (x.dim(2) < 2 || x.dim(3) < 2)
    throw ShapeError("maxpool2_forward: spatial dims must be >= 2, got " + x.shape_str());
  Tensor y({x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2});
  std::vector<int64_t> argmax(static_cast<size_t>(y.size()));
  kernels::maxpool2_forward(x.data(), y.data(), argmax.data(), x.dim(0), x.dim(1),
                            x.dim(2), x.dim(3));
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->in_shape = x.shape();
  }
  return y;
}

Tensor maxpool2_backward(const Tensor& grad_out, const MaxPoolCache& cache) {
  check(cache.in_shape.size() == 4, "maxpool2_backward: empty cache");
  Tensor grad_x(cache.in_shape);
  check(grad_out.size() == static_cast<int64_t>(cache.argmax.size()),
        "maxpool2_backward: grad_out size mismatch");
  kernels::maxpool2_backward(grad_out.data(), cache.argmax.data(), grad_x.data(),
                             cache.in_shape[0], cache.in_shape[1], cache.in_shape[2],
                             cache.in_shape[3]);
  return grad_x;
}

Tensor lstm_forward(const Tensor& x, const Tensor& wx, const Tensor& wh,
                    const Tensor& b, LstmCache* cache) {
  check(x.rank() == 3, "lstm_forward: expected x[B,T,In]");
  const int batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
  check(steps >= 1, "lstm_forward: need T >= 1");
  check(wx.rank() == 2 && wx.dim(0) == in && wx.dim(1) % 4 == 0,
        "lstm_forward: wx shape mismatch x" + x.shape_str() + " wx" + wx.shape_str());
  const int hidden = wx.dim(1) / 4;
  check(wh.rank() == 2 && wh.dim(0) == hidden && wh.dim(1) == 4 * hidden,
        "lstm_forward: wh shape mismatch");
  check(b.rank() == 1 && b.dim(0) == 4 * hidden, "lstm_forward: bias shape mismatch");

  // Input projection for all steps at once.
  Tensor xw({batch * steps, 4 * hidden});
  kernels::matmul(x.data(), wx.data(), xw.data(), batch * steps, in, 4 * hidden);

  Tensor gates({batch, steps, 4 * hidden});
  Tensor cells({batch, steps, hidden});
  Tensor tanh_c({batch, steps, hidden});
  Tensor h_all({batch, steps, hidden});

  Tensor h_prev({batch, hidden});
  Tensor c_prev({batch, hidden});
  Tensor pre({batch, 4 * hidden});

  for (int t = 0; t < steps; ++t) {
    for (int bi = 0; bi < batch; ++bi)
      std::copy(xw.data() + (static_cast<int64_t>(bi) * steps + t) * 4 * hidden,
                xw.data() + (static_cast<int64_t>(bi) * steps + t + 1) * 4 * hidden,
                pre.data() + static_cast<int64_t>(bi) * 4 * hidden);
    kernels::matmul(h_prev.data(), wh.data(), pre.data(), batch, hidden, 4 * hidden,
                    /*accumulate=*/true);
    add_bias_rows(pre.data(), b.data(), batch, 4 * hidden);

    for (int bi = 0; bi < batch; ++bi) {
      const double* p = pre.data() + static_cast<int64_t>(bi) * 4 * hidden;
      double* gt = gates.data() + (static_cast<int64_t>(bi) * steps + t) * 4 * hidden;
      double* ct = cells.data() + (static_cast<int64_t>(bi) * steps + t) * hidden;
      double* tc = tanh_c.data() + (static_cast<int64_t>(bi) * steps + t) * hidden;
      double* ht = h_all.data() + (static_cast<int64_t>(bi) * steps + t) * hidden;
      double* hp = h_prev.data() + static_cast<int64_t>(bi) * hidden;
      double* cp = c_prev.data() + static_cast<int64_t>(bi) * hidden;
      for (int j = 0; j < hidden; ++j) {
        const double gi = sigmoid1(p[j]);
        const double gf = sigmoid1(p[hidden + j]);
        const double gg = std::tanh(p[2 * hidden + j]);
        const double go = sigmoid1(p[3 * hidden + j]);
        const double c = gf * cp[j] + gi * gg;
        const double tcv = std::tanh(c);
        const double h = go * tcv;
        gt[j] = gi;
        gt[hidden + j] = gf;
        gt[2 * hidden + j] = gg;
        gt[3 * hidden + j] = go;
        ct[j] = c;
        tc[j] = tcv;
        ht[j] = h;
        hp[j] = h;
        cp[j] = c;
      }
    }
  }

  if (cache) {
    cache->x = x;
    cache->gates = gates;
    cache->cells = cells;
    cache->tanh_c = tanh_c;
    cache->h_all = h_all;
    cache->hidden = hidden;
  }
  return h_all;
}

Tensor lstm_backward(const LstmCache& cache, const Tensor& wx, const Tensor& wh,
                     const Tensor& grad_h_all, Tensor* grad_wx, Tensor* grad_wh,
                     Tensor* grad_b) {
  const int batch = cache.x.dim(0), steps = cache.x.dim(1), in = cache.x.dim(2);
  const int hidden = cache.hidden;
  check(grad_h_all.rank() == 3 && grad_h_all.dim(0) == batch &&
            grad_h_all.dim(1) == steps && grad_h_all.dim(2) == hidden,
        "lstm_backward: grad_h_all shape mismatch");
  check(grad_wx && grad_wx->same_shape(wx) && grad_wh && grad_wh->same_shape(wh) &&
            grad_b && grad_b->size() == 4 * hidden,
        "lstm_backward: parameter gradient shapes");

  Tensor grad_x({batch, steps, in});
  Tensor dh_next({batch, hidden});
  Tensor dc_next({batch, hidden});
  Tensor dgates({batch, 4 * hidden});
  Tensor x_t({batch, in});
  Tensor h_prev({batch, hidden});
  Tensor dx_t({batch, in});
  Tensor dh_rec({batch, hidden});

  for (int t = steps - 1; t >= 0; --t) {
    for (int bi = 0; bi < batch; ++bi) {
      const double* gt = cache.gates.data() + (static_cast<int64_t>(bi) * steps + t) * 4 * hidden;
      const double* tc = cache.tanh_c.data() + (static_cast<int64_t>(bi) * steps + t) * hidden;
      const double* gh = grad_h_all.data() + (static_cast<int64_t>(bi) * steps + t) * hidden;
      const double* cp =
          t > 0 ? cache.cells.data() + (static_cast<int64_t>(bi) * steps + t - 1) * hidden
                : nullptr;
      double* dhn = dh_next.data() + static_cast<int64_t>(bi) * hidden;
      double* dcn = dc_next.data() + static_cast<int64_t>(bi) * hidden;
      double* dg = dgates.data() + static_cast<int64_t>(bi) * 4 * hidden;
      for (int j = 0; j < hidden; ++j) {
        const double gi = gt[j];
        const double gf = gt[hidden + j];
        const double gg = gt[2 * hidden + j];
        const double go = gt[3 * hidden + j];
        const double tcv = tc[j];
        const double dh = gh[j] + dhn[j];
        const double dov = dh * tcv;
        const double dc = dh * go * (1.0 - tcv * tcv) + dcn[j];
        const double cprev = cp ? cp[j] : 0.0;
        const double div = dc * gg;
        const double dfv = dc * cprev;
        const double dgv = dc * gi;
        dcn[j] = dc * gf;
        dg[j] = div * gi * (1.0 - gi);
        dg[hidden + j] = dfv * gf * (1.0 - gf);
        dg[2 * hidden + j] = dgv * (1.0 - gg * gg);
        dg[3 * hidden + j] = dov * go * (1.0 - go);
      }
    }

    for (int bi = 0; bi < batch; ++bi) {
      const double* dg = dgates.data() + static_cast<int64_t>(bi) * 4 * hidden;
      for (int j = 0; j < 4 * hidden; ++j) (*grad_b)[j] += dg[j];
    }

    for (int bi = 0; bi < batch; ++bi)
      std::copy(cache.x.data() + (static_cast<int64_t>(bi) * steps + t) * in,
                cache.x.data() + (static_cast<int64_t>(bi) * steps + t + 1) * in,
                x_t.data() + static_cast<int64_t>(bi) * in);
    kernels::matmul_tn(x_t.data(), dgates.data(), grad_wx->data(), in, batch,
                       4 * hidden, /*accumulate=*/true);

    if (t > 0) {
      for (int bi = 0; bi < batch; ++bi)
        std::copy(cache.h_all.data() + (static_cast<int64_t>(bi) * steps + t - 1) * hidden,
                  cache.h_all.data() + (static_cast<int64_t>(bi) * steps + t) * hidden,
                  h_prev.data() + static_cast<int64_t>(bi) * hidden);
      kernels::matmul_tn(h_prev.data(), dgates.data(), grad_wh->data(), hidden,
                         batch, 4 * hidden, /*accumulate=*/true);
    }

    kernels::matmul_nt(dgates.data(), wx.data(), dx_t.data(), batch, 4 * hidden, in);
    for (int bi = 0; bi < batch; ++bi)
      std::copy(dx_t.data() + static_cast<int64_t>(bi) * in,
                dx_t.data() + (static_cast<int64_t>(bi) + 1) * in,
                grad_x.data() + (static_cast<int64_t>(bi) * steps + t) * in);

    kernels::matmul_nt(dgates.data(), wh.data(), dh_rec.data(), batch, 4 * hidden,
                       hidden);
    dh_next = dh_rec;
  }
  return grad_x;
}

Tensor last_step(const Tensor& h_all) {
  check(h_all.rank() == 3, "last_step: expected [B,T,H]");
  const int batch = h_all.dim(0), steps = h_all.dim(1), hidden = h_all.dim(2);
  Tensor out({batch, hidden});
  for (int bi = 0; bi < batch; ++bi)
    std::copy(h_all.data() + (static_cast<int64_t>(bi) * steps + steps - 1) * hidden,
              h_all.data() + (static_cast<int64_t>(bi) * steps + steps) * hidden,
              out.data() + static_cast<int64_t>(bi) * hidden);
  return out;
}

Tensor last_step_grad(const Tensor& g, int steps) {
  check(g.rank() == 2, "last_step_grad: expected [B,H]");
  const int batch = g.dim(0), hidden = g.dim(1);
  Tensor out({batch, steps, hidden});
  for (int bi = 0; bi < batch; ++bi)
    std::copy(g.data() + static_cast<int64_t>(bi) * hidden,
              g.data() + (static_cast<int64_t>(bi) + 1) * hidden,
              out.data() + (static_cast<int64_t>(bi) * steps + steps - 1) * hidden);
  return out;
}

Tensor dropout_forward(const Tensor& x, double p, Rng& rng, bool training,
                       DropoutCache* cache) {
  if (!(p >= 0.0 && p < 1.0))
    throw BadProbability("dropout: p must be in [0,1), got " + std::to_string(p));
  if (!training || p == 0.0) {
    if (cache) cache->active = false;
    return x;
  }
  const double scale = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  Tensor y = x;
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) {
    const double keep = rng.next_double() >= p ? scale : 0.0;
    mask[i] = keep;
    y[i] *= keep;
  }
  if (cache) {
    cache->scaled_mask = std::move(mask);
    cache->active = true;
  }
  return y;
}

Tensor dropout_backward(const Tensor& grad_out, const DropoutCache& cache) {
  if (!cache.active) return grad_out;
  check(grad_out.same_shape(cache.scaled_mask), "dropout_backward: shape mismatch");
  Tensor g = grad_out;
  for (int64_t i = 0; i < g.size(); ++i) g[i] *= cache.scaled_mask[i];
  return g;
}

double bce_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred) {
  check(pred.same_shape(target), "bce_loss: pred " + pred.shape_str() + " vs target " +
                                     target.shape_str());
  const int64_t n = pred.size();
  check(n > 0, "bce_loss: empty tensors");
  constexpr double kLo = 1e-7;
  constexpr double kHi = 1.0 - 1e-7;
  if (grad_pred && !grad_pred->same_shape(pred)) *grad_pred = Tensor(pred.shape());
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double raw = pred[i];
    const double p = std::min(kHi, std::max(kLo, raw));
    const double t = target[i];
    sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    if (grad_pred) {
      // Clamped entries sit on a flat region of the loss.
      (*grad_pred)[i] =
          (raw < kLo || raw > kHi) ? 0.0 : (p - t) / (p * (1.0 - p)) / static_cast<double>(n);
    }
  }
  return sum / static_cast<double>(n);
}

double grad_check(ParamStore& store, const std::function<double(bool)>& eval,
                  double h, std::map<std::string, double>* per_param) {
  store.zero_grads();
  eval(true);

  std::map<std::string, Tensor> analytic;
  for (const std::string& name : store.names()) analytic[name] = store.at(name).grad;

  double max_rel = 0.0;
  for (const std::string& name : store.names()) {
    Param& p = store.at(name);
    const Tensor& a = analytic[name];
    double param_max = 0.0;
    for (int64_t i = 0; i < p.value.size(); ++i) {
      const double old = p.value[i];
      p.value[i] = old + h;
      const double lp = eval(false);
      p.value[i] = old - h;
      const double lm = eval(false);
      p.value[i] = old;
      const double numeric = (lp - lm) / (2.0 * h);
      const double rel =
          std::fabs(a[i] - numeric) / std::max({std::fabs(a[i]), std::fabs(numeric), 1e-8});
      param_max = std::max(param_max, rel);
    }
    if (per_param) (*per_param)[name] = param_max;
    max_rel = std::max(max_rel, param_max);
  }
  return max_rel;
}

// ---- checkpoint IO ----------------------------------------------------

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u16le(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  write_bytes(os, b, 2);
}

void write_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(os, b, 4);
}

void write_u64le(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(os, b, 8);
}

void write_f64le(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u64le(os, u);
}

uint16_t read_u16le(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t read_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64le(std::istream& is) {
  uint64_t u = read_u64le(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void write_entry(std::ostream& os, const std::string& name, const Tensor& t) {
  write_u16le(os, static_cast<uint16_t>(name.size()));
  write_bytes(os, name.data(), name.size());
  os.put(static_cast<char>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_u32le(os, static_cast<uint32_t>(t.dim(i)));
  for (int64_t i = 0; i < t.size(); ++i) write_f64le(os, t[i]);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  os.write("MFCK", 4);
  write_u32le(os, kCheckpointVersion);
  const std::vector<std::string> names = store.names();
  write_u32le(os, static_cast<uint32_t>(names.size() * 3));
  for (const std::string& name : names) {
    const Param& p = store.at(name);
    write_entry(os, name, p.value);
    write_entry(os, name + ".m",
                p.adam_m.size() == p.value.size() ? p.adam_m : Tensor(p.value.shape()));
    write_entry(os, name + ".v",
                p.adam_v.size() == p.value.size() ? p.adam_v : Tensor(p.value.shape()));
  }
  write_u64le(os, store.step);
  if (!os) throw IoError("save_checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MFCK", 4) != 0)
    throw IoError("load_checkpoint: bad magic in " + path);
  const uint32_t version = read_u32le(is);
  if (version != kCheckpointVersion)
    throw IoError("load_checkpoint: unsupported version " + std::to_string(version));
  const uint32_t count = read_u32le(is);
  for (uint32_t e = 0; e < count; ++e) {
    const uint16_t name_len = read_u16le(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int rank = is.get();
    if (!is || rank < 0 || rank > 8)
      throw IoError("load_checkpoint: corrupt entry header in " + path);
    std::vector<int> dims(static_cast<size_t>(rank));
    for (int i = 0; i < rank; ++i) dims[static_cast<size_t>(i)] = static_cast<int>(read_u32le(is));
    Tensor t(dims);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = read_f64le(is);
    if (!is) throw IoError("load_checkpoint: truncated values in " + path);

    std::string base = name;
    int slot = 0;  // 0=value, 1=m, 2=v
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".m") == 0) {
      base = name.substr(0, name.size() - 2);
      slot = 1;
    } else if (name.size() > 2 && name.compare(name.size() - 2, 2, ".v") == 0) {
      base = name.substr(0, name.size() - 2);
      slot = 2;
    }
    if (!store.contains(base))
      throw IoError("load_checkpoint: checkpoint entry '" + name +
                    "' has no matching model parameter");
    Param& p = store.at(base);
    if (!t.same_shape(p.value))
      throw ShapeError("load_checkpoint: shape mismatch for '" + name + "': file " +
                       t.shape_str() + " vs model " + p.value.shape_str());
    if (slot == 0)
      p.value = std::move(t);
    else if (slot == 1)
      p.adam_m = std::move(t);
    else
      p.adam_v = std::move(t);
  }
  store.step = read_u64le(is);
  if (!is) throw IoError("load_checkpoint: missing step counter in " + path);
}

}  // namespace avse::nn
