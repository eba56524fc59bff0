// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <vector>

#include "avse/kernels.hpp"
#include "avse/rng.hpp"

using namespace avse;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("matmul variants match the serial reference bit for bit") {
  const int m = 37, k = 29, n = 41;
  const auto a = random_vec(static_cast<size_t>(m) * k, 1);
  const auto b = random_vec(static_cast<size_t>(k) * n, 2);
  std::vector<double> ref(static_cast<size_t>(m) * n), par(ref.size());

  kernels::serial::matmul(a.data(), b.data(), ref.data(), m, k, n);
  kernels::matmul(a.data(), b.data(), par.data(), m, k, n);
  CHECK(bit_equal(ref, par));

  // accumulate path
  auto ref2 = ref, par2 = par;
  kernels::serial::matmul(a.data(), b.data(), ref2.data(), m, k, n, true);
  kernels::matmul(a.data(), b.data(), par2.data(), m, k, n, true);
  CHECK(bit_equal(ref2, par2));
}

TEST_CASE("matmul_tn and matmul_nt match the serial reference bit for bit") {
  const int m = 23, k = 31, n = 17;
  const auto at = random_vec(static_cast<size_t>(k) * m, 3);  // stored [k,m]
  const auto b = random_vec(static_cast<size_t>(k) * n, 4);
  std::vector<double> ref(static_cast<size_t>(m) * n), par(ref.size());
  kernels::serial::matmul_tn(at.data(), b.data(), ref.data(), m, k, n);
  kernels::matmul_tn(at.data(), b.data(), par.data(), m, k, n);
  CHECK(bit_equal(ref, par));

  const auto a = random_vec(static_cast<size_t>(m) * k, 5);
  const auto bt = random_vec(static_cast<size_t>(n) * k, 6);  // stored [n,k]
  kernels::serial::matmul_nt(a.data(), bt.data(), ref.data(), m, k, n);
  kernels::matmul_nt(a.data(), bt.data(), par.data(), m, k, n);
  CHECK(bit_equal(ref, par));
}

TEST_CASE("conv2d forward/backward match the serial reference bit for bit") {
  const int b = 3, cin = 4, h = 9, w = 11, cout = 5;
  const auto x = random_vec(static_cast<size_t>(b) * cin * h * w, 7);
  const auto kern = random_vec(static_cast<size_t>(cout) * cin * 9, 8);
  const auto bias = random_vec(static_cast<size_t>(cout), 9);
  const auto gy = random_vec(static_cast<size_t>(b) * cout * h * w, 10);

  std::vector<double> y_ref(gy.size()), y_par(gy.size());
  kernels::serial::conv2d_forward(x.data(), kern.data(), bias.data(), y_ref.data(), b, cin,
                                  h, w, cout);
  kernels::conv2d_forward(x.data(), kern.data(), bias.data(), y_par.data(), b, cin, h, w,
                          cout);
  CHECK(bit_equal(y_ref, y_par));

  std::vector<double> gx_ref(x.size()), gx_par(x.size());
  kernels::serial::conv2d_backward_input(gy.data(), kern.data(), gx_ref.data(), b, cin, h,
                                         w, cout);
  kernels::conv2d_backward_input(gy.data(), kern.data(), gx_par.data(), b, cin, h, w, cout);
  CHECK(bit_equal(gx_ref, gx_par));

  std::vector<double> gk_ref(kern.size(), 0.0), gk_par(kern.size(), 0.0);
  std::vector<double> gb_ref(bias.size(), 0.0), gb_par(bias.size(), 0.0);
  kernels::serial::conv2d_backward_params(x.data(), gy.data(), gk_ref.data(), gb_ref.data(),
                                          b, cin, h, w, cout);
  kernels::conv2d_backward_params(x.data(), gy.data(), gk_par.data(), gb_par.data(), b, cin,
                                  h, w, cout);
  CHECK(bit_equal(gk_ref, gk_par));
  CHECK(bit_equal(gb_ref, gb_par));
}

TEST_CASE("maxpool2 matches the serial reference bit for bit") {
  const int b = 4, c = 3, h = 10, w = 14;
  const auto x = random_vec(static_cast<size_t>(b) * c * h * w, 11);
  const size_t out_n = static_cast<size_t>(b) * c * (h / 2) * (w / 2);
  const auto gy = random_vec(out_n, 12);

  std::vector<double> y_ref(out_n), y_par(out_n);
  std::vector<int64_t> am_ref(out_n), am_par(out_n);
  kernels::serial::maxpool2_forward(x.data(), y_ref.data(), am_ref.data(), b, c, h, w);
  kernels::maxpool2_forward(x.data(), y_par.data(), am_par.data(), b, c, h, w);
  CHECK(bit_equal(y_ref, y_par));
  CHECK(am_ref == am_par);

  std::vector<double> gx_ref(x.size()), gx_par(x.size());
  kernels::serial::maxpool2_backward(gy.data(), am_ref.data(), gx_ref.data(), b, c, h, w);
  kernels::maxpool2_backward(gy.data(), am_par.data(), gx_par.data(), b, c, h, w);
  CHECK(bit_equal(gx_ref, gx_par));
}

#ifdef _OPENMP
TEST_CASE("results do not depend on the thread count") {
  const int m = 64, k = 64, n = 64;
  const auto a = random_vec(static_cast<size_t>(m) * k, 13);
  const auto b = random_vec(static_cast<size_t>(k) * n, 14);
  std::vector<double> c1(static_cast<size_t>(m) * n), c2(c1.size());

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
  omp_set_num_threads(saved > 1 ? saved : 2);
  kernels::matmul(a.data(), b.data(), c2.data(), m, k, n);
  omp_set_num_threads(saved);
  CHECK(bit_equal(c1, c2));
}
#endif
