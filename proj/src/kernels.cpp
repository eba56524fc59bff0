// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace avse::kernels {

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<int64_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + static_cast<int64_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + static_cast<int64_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<int64_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (int l = 0; l < k; ++l) {
      const double av = a[static_cast<int64_t>(l) * m + i];
      const double* bl = b + static_cast<int64_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * k;
    double* ci = c + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<int64_t>(j) * k;
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

namespace {

// 3x3 taps accumulated row-wise: the middle row always contributes, the rows
// above/below only where they exist. Interior columns run branch-free.
inline void accum_3x3_rows(double* dst, const double* row_t, const double* row_m,
                           const double* row_b, const double* k, int w) {
  // k points at 9 taps; row_t/row_b may be null at the image border.
  for (int j = 1; j < w - 1; ++j) {
    double s = k[3] * row_m[j - 1] + k[4] * row_m[j] + k[5] * row_m[j + 1];
    if (row_t) s += k[0] * row_t[j - 1] + k[1] * row_t[j] + k[2] * row_t[j + 1];
    if (row_b) s += k[6] * row_b[j - 1] + k[7] * row_b[j] + k[8] * row_b[j + 1];
    dst[j] += s;
  }
  {  // j == 0
    double s = k[4] * row_m[0];
    if (w > 1) s += k[5] * row_m[1];
    if (row_t) {
      s += k[1] * row_t[0];
      if (w > 1) s += k[2] * row_t[1];
    }
    if (row_b) {
      s += k[7] * row_b[0];
      if (w > 1) s += k[8] * row_b[1];
    }
    dst[0] += s;
  }
  if (w > 1) {  // j == w-1
    const int j = w - 1;
    double s = k[3] * row_m[j - 1] + k[4] * row_m[j];
    if (row_t) s += k[0] * row_t[j - 1] + k[1] * row_t[j];
    if (row_b) s += k[6] * row_b[j - 1] + k[7] * row_b[j];
    dst[j] += s;
  }
}

inline void conv2d_forward_one(const double* x, const double* kern,
                               const double* bias, double* y, int cin, int h,
                               int w, int bi, int co) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  std::fill(y, y + hw, bias[co]);
  for (int ci = 0; ci < cin; ++ci) {
    const double* xc = x + (static_cast<int64_t>(bi) * cin + ci) * hw;
    const double* kc = kern + (static_cast<int64_t>(co) * cin + ci) * 9;
    for (int i = 0; i < h; ++i) {
      const double* row_m = xc + static_cast<int64_t>(i) * w;
      const double* row_t = i > 0 ? row_m - w : nullptr;
      const double* row_b = i < h - 1 ? row_m + w : nullptr;
      accum_3x3_rows(y + static_cast<int64_t>(i) * w, row_t, row_m, row_b, kc, w);
    }
  }
}

inline void conv2d_backward_input_one(const double* gy, const double* kern,
                                      double* gx, int cin, int h, int w,
                                      int cout, int bi, int ci) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  std::fill(gx, gx + hw, 0.0);
  for (int co = 0; co < cout; ++co) {
    const double* gc = gy + (static_cast<int64_t>(bi) * cout + co) * hw;
    const double* kc = kern + (static_cast<int64_t>(co) * cin + ci) * 9;
    // Input gradient is correlation with the flipped kernel.
    const double kf[9] = {kc[8], kc[7], kc[6], kc[5], kc[4], kc[3], kc[2], kc[1], kc[0]};
    for (int i = 0; i < h; ++i) {
      const double* row_m = gc + static_cast<int64_t>(i) * w;
      const double* row_t = i > 0 ? row_m - w : nullptr;
      const double* row_b = i < h - 1 ? row_m + w : nullptr;
      accum_3x3_rows(gx + static_cast<int64_t>(i) * w, row_t, row_m, row_b, kf, w);
    }
  }
}

inline void conv2d_backward_params_one(const double* x, const double* gy,
                                       double* gk, double* gbias, int b,
                                       int cin, int h, int w, int cout,
                                       int co) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  double bs = 0.0;
  for (int bi = 0; bi < b; ++bi) {
    const double* gc = gy + (static_cast<int64_t>(bi) * cout + co) * hw;
    for (int64_t p = 0; p < hw; ++p) bs += gc[p];
    for (int ci = 0; ci < cin; ++ci) {
      const double* xc = x + (static_cast<int64_t>(bi) * cin + ci) * hw;
      double* kc = gk + (static_cast<int64_t>(co) * cin + ci) * 9;
      // Each tap is a plain dot product over the shifted valid window.
      for (int u = 0; u < 3; ++u) {
        const int p0 = std::max(0, 1 - u);
        const int p1 = std::min(h, h + 1 - u);
        for (int v = 0; v < 3; ++v) {
          const int q0 = std::max(0, 1 - v);
          const int q1 = std::min(w, w + 1 - v);
          double s = 0.0;
          for (int p = p0; p < p1; ++p) {
            const double* grow = gc + static_cast<int64_t>(p) * w;
            const double* xrow = xc + static_cast<int64_t>(p + u - 1) * w + (v - 1);
            for (int q = q0; q < q1; ++q) s += grow[q] * xrow[q];
          }
          kc[u * 3 + v] += s;
        }
      }
    }
  }
  gbias[co] += bs;
}

inline void maxpool2_forward_one(const double* x, double* y, int64_t* argmax,
                                 int h, int w, int64_t xoff, int64_t yoff) {
  const int oh = h / 2, ow = w / 2;
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      int64_t best_idx = xoff + static_cast<int64_t>(2 * i) * w + 2 * j;
      double best = x[best_idx];
      const int64_t cand[3] = {
          xoff + static_cast<int64_t>(2 * i) * w + 2 * j + 1,
          xoff + static_cast<int64_t>(2 * i + 1) * w + 2 * j,
          xoff + static_cast<int64_t>(2 * i + 1) * w + 2 * j + 1};
      for (int64_t idx : cand) {
        if (x[idx] > best) {  // strict: ties keep the first occurrence
          best = x[idx];
          best_idx = idx;
        }
      }
      y[yoff + static_cast<int64_t>(i) * ow + j] = best;
      argmax[yoff + static_cast<int64_t>(i) * ow + j] = best_idx;
    }
  }
}

}  // namespace

void conv2d_forward(const double* x, const double* kern, const double* bias,
                    double* y, int b, int cin, int h, int w, int cout) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int bi = 0; bi < b; ++bi)
    for (int co = 0; co < cout; ++co)
      conv2d_forward_one(x, kern, bias,
                         y + (static_cast<int64_t>(bi) * cout + co) * hw, cin,
                         h, w, bi, co);
}

void conv2d_backward_input(const double* gy, const double* kern, double* gx,
                           int b, int cin, int h, int w, int cout) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int bi = 0; bi < b; ++bi)
    for (int ci = 0; ci < cin; ++ci)
      conv2d_backward_input_one(gy, kern,
                                gx + (static_cast<int64_t>(bi) * cin + ci) * hw,
                                cin, h, w, cout, bi, ci);
}

void conv2d_backward_params(const double* x, const double* gy, double* gk,
                            double* gbias, int b, int cin, int h, int w,
                            int cout) {
  for (int co = 0; co < cout; ++co)
    conv2d_backward_params_one(x, gy, gk, gbias, b, cin, h, w, cout, co);
}

void maxpool2_forward(const double* x, double* y, int64_t* argmax, int b, int c,
                      int h, int w) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(h / 2) * (w / 2);
  for (int64_t bc = 0; bc < static_cast<int64_t>(b) * c; ++bc)
    maxpool2_forward_one(x, y, argmax, h, w, bc * hw, bc * ohw);
}

void maxpool2_backward(const double* gy, const int64_t* argmax, double* gx,
                       int b, int c, int h, int w) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(h / 2) * (w / 2);
  for (int64_t bc = 0; bc < static_cast<int64_t>(b) * c; ++bc) {
    std::fill(gx + bc * hw, gx + (bc + 1) * hw, 0.0);
    for (int64_t o = bc * ohw; o < (bc + 1) * ohw; ++o) gx[argmax[o]] += gy[o];
  }
}

}  // namespace serial

// Parallel variants. Each OpenMP loop iteration owns a disjoint output slice
// and runs the exact serial inner loops, so results match `serial` bit for
// bit regardless of thread count.

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
  const int64_t work = static_cast<int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > 16384)
  for (int i = 0; i < m; ++i)
    serial::matmul(a + static_cast<int64_t>(i) * k, b,
                   c + static_cast<int64_t>(i) * n, 1, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
  const int64_t work = static_cast<int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > 16384)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<int64_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (int l = 0; l < k; ++l) {
      const double av = a[static_cast<int64_t>(l) * m + i];
      const double* bl = b + static_cast<int64_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
  const int64_t work = static_cast<int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > 16384)
  for (int i = 0; i < m; ++i)
    serial::matmul_nt(a + static_cast<int64_t>(i) * k, b,
                      c + static_cast<int64_t>(i) * n, 1, k, n, accumulate);
}

void conv2d_forward(const double* x, const double* kern, const double* bias,
                    double* y, int b, int cin, int h, int w, int cout) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t slices = static_cast<int64_t>(b) * cout;
#pragma omp parallel for schedule(static) if (slices * hw * cin > 4096)
  for (int64_t s = 0; s < slices; ++s) {
    const int bi = static_cast<int>(s / cout);
    const int co = static_cast<int>(s % cout);
    serial::conv2d_forward_one(x, kern, bias, y + s * hw, cin, h, w, bi, co);
  }
}

void conv2d_backward_input(const double* gy, const double* kern, double* gx,
                           int b, int cin, int h, int w, int cout) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t slices = static_cast<int64_t>(b) * cin;
#pragma omp parallel for schedule(static) if (slices * hw * cout > 4096)
  for (int64_t s = 0; s < slices; ++s) {
    const int bi = static_cast<int>(s / cin);
    const int ci = static_cast<int>(s % cin);
    serial::conv2d_backward_input_one(gy, kern, gx + s * hw, cin, h, w, cout,
                                      bi, ci);
  }
}

void conv2d_backward_params(const double* x, const double* gy, double* gk,
                            double* gbias, int b, int cin, int h, int w,
                            int cout) {
  // Each iteration owns one output channel's weight and bias slice.
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(b) * cout * h * w > 4096)
  for (int co = 0; co < cout; ++co)
    serial::conv2d_backward_params_one(x, gy, gk, gbias, b, cin, h, w, cout, co);
}

void maxpool2_forward(const double* x, double* y, int64_t* argmax, int b, int c,
                      int h, int w) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(h / 2) * (w / 2);
  const int64_t slices = static_cast<int64_t>(b) * c;
#pragma omp parallel for schedule(static) if (slices * hw > 8192)
  for (int64_t bc = 0; bc < slices; ++bc)
    serial::maxpool2_forward_one(x, y, argmax, h, w, bc * hw, bc * ohw);
}

void maxpool2_backward(const double* gy, const int64_t* argmax, double* gx,
                       int b, int c, int h, int w) {
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(h / 2) * (w / 2);
  const int64_t slices = static_cast<int64_t>(b) * c;
#pragma omp parallel for schedule(static) if (slices * hw > 8192)
  for (int64_t bc = 0; bc < slices; ++bc) {
    std::fill(gx + bc * hw, gx + (bc + 1) * hw, 0.0);
    for (int64_t o = bc * ohw; o < (bc + 1) * ohw; ++o) gx[argmax[o]] += gy[o];
  }
}

}  // namespace avse::kernels
