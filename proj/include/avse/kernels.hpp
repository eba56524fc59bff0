// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

namespace avse::kernels {

// Dense and convolution compute kernels. The functions in the `serial`
// namespace are the reference implementations; the top-level functions are
// OpenMP-parallel over disjoint output slices with the same inner-loop order,
// so their results are bit-identical to the reference for any thread count.
// tests/test_kernels.cpp asserts the equivalence, tools/bench_kernels.cpp
// compares throughput.

namespace serial {

// c[m,n] = a[m,k] * b[k,n]; accumulates into c when `accumulate`.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);
// c[m,n] = a^T * b with a stored [k,m].
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
// c[m,n] = a * b^T with b stored [n,k].
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

// 3x3 same-padded cross-correlation.
// x[b,cin,h,w], kern[cout,cin,3,3], bias[cout] -> y[b,cout,h,w]
void conv2d_forward(const double* x, const double* kern, const double* bias,
                    double* y, int b, int cin, int h, int w, int cout);
// gx is overwritten.
void conv2d_backward_input(const double* gy, const double* kern, double* gx,
                           int b, int cin, int h, int w, int cout);
// gk and gbias are accumulated into.
void conv2d_backward_params(const double* x, const double* gy, double* gk,
                            double* gbias, int b, int cin, int h, int w, int cout);

// Non-overlapping 2x2 max pooling, stride 2, odd trailing row/col dropped.
// argmax records the flat input index of the winner (first occurrence in
// row-major scan of the window).
void maxpool2_forward(const double* x, double* y, int64_t* argmax, int b, int c,
                      int h, int w);
// gx is overwritten (zeros plus scattered gradients).
void maxpool2_backward(const double* gy, const int64_t* argmax, double* gx,
                       int b, int c, int h, int w);

}  // namespace serial

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void conv2d_forward(const double* x, const double* kern, const double* bias,
                    double* y, int b, int cin, int h, int w, int cout);
void conv2d_backward_input(const double* gy, const double* kern, double* gx,
                           int b, int cin, int h, int w, int cout);
void conv2d_backward_params(const double* x, const double* gy, double* gk,
                            double* gbias, int b, int cin, int h, int w, int cout);
void maxpool2_forward(const double* x, double* y, int64_t* argmax, int b, int c,
                      int h, int w);
void maxpool2_backward(const double* gy, const int64_t* argmax, double* gx,
                       int b, int c, int h, int w);

}  // namespace avse::kernels
