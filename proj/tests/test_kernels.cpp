#include "doctest.h"
#include "oracles.hpp"

#include "ecomp/kernels.hpp"

#include <omp.h>

#include <cmath>

using namespace ecomp;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto &v : x)
    v = d(rng);
  return x;
}

// Runs f with a fixed OpenMP team size.
template <class F>
auto with_threads(int n, F &&f) {
  const int old = omp_get_max_threads();
  omp_set_num_threads(n);
  auto r = f();
  omp_set_num_threads(old);
  return r;
}

} // namespace

TEST_CASE("fir_centered matches a direct convolution with edge replication") {
  const auto x = randn(1500, 1);
  const auto taps = randn(31, 2);
  std::vector<double> out(x.size());
  kernels::fir_centered(x, taps, out, Exec::serial);
  const long d = 15;
  const long n = static_cast<long>(x.size());
  for (long k = 0; k < n; k += 37) {
    double ref = 0.0;
    for (long j = 0; j < 31; ++j) {
      const long idx = std::clamp(k + d - j, 0L, n - 1);
      ref += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(idx)];
    }
    CHECK(out[static_cast<std::size_t>(k)] == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("serial and OpenMP kernels give identical results") {
  std::mt19937_64 rng(9);
  const auto x = randn(5000, 3);
  const auto taps = randn(41, 4);
  std::vector<double> a(x.size()), b(x.size());
  kernels::fir_centered(x, taps, a, Exec::serial);
  kernels::fir_centered(x, taps, b, Exec::parallel);
  CHECK(a == b);

  const auto pts = oracle::uniform_matrix(700, 4, rng);
  const Matrix ga = kernels::gram_matrix(pts, 0.4, Exec::serial);
  const Matrix gb = kernels::gram_matrix(pts, 0.4, Exec::parallel);
  CHECK(ga == gb);
  CHECK(ga(3, 5) == doctest::Approx(std::exp(-oracle::sqdist(pts, 3, 5) / (2 * 0.16))).epsilon(1e-14));
  CHECK(ga(7, 7) == 1.0);

  const auto centers = oracle::uniform_matrix(60, 4, rng);
  const auto coef = randn(60, 5);
  std::vector<double> da(pts.rows()), db(pts.rows());
  kernels::rbf_decision(pts, centers, coef, 0.7, 0.3, da, Exec::serial);
  kernels::rbf_decision(pts, centers, coef, 0.7, 0.3, db, Exec::parallel);
  CHECK(da == db);
  double ref = -0.3;
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    ref += coef[static_cast<std::size_t>(i)] *
           std::exp(-(pts.row(11) - centers.row(i)).squaredNorm() / (2 * 0.49));
  CHECK(da[11] == doctest::Approx(ref).epsilon(1e-13));

  std::vector<double> ma(pts.rows(), INFINITY), mb(pts.rows(), INFINITY);
  kernels::min_sqdist_update(pts, 17, ma, Exec::serial);
  kernels::min_sqdist_update(pts, 17, mb, Exec::parallel);
  kernels::min_sqdist_update(pts, 300, ma, Exec::serial);
  kernels::min_sqdist_update(pts, 300, mb, Exec::parallel);
  CHECK(ma == mb);
  CHECK(ma[17] == 0.0);
  CHECK(ma[2] == std::min(oracle::sqdist(pts, 2, 17), oracle::sqdist(pts, 2, 300)));

  CHECK(kernels::farthest_pair(pts, Exec::serial) == kernels::farthest_pair(pts, Exec::parallel));

  const auto normals = oracle::uniform_matrix(25, 4, rng, -1.0, 1.0);
  const auto offs = randn(25, 6);
  std::vector<double> ha(pts.rows()), hb(pts.rows());
  kernels::halfspace_max_violation(pts, normals, offs, ha, Exec::serial);
  kernels::halfspace_max_violation(pts, normals, offs, hb, Exec::parallel);
  CHECK(ha == hb);
}

TEST_CASE("farthest_pair agrees with brute force and breaks ties low") {
  std::mt19937_64 rng(2);
  const auto pts = oracle::uniform_matrix(90, 2, rng);
  double best = -1.0;
  std::pair<std::size_t, std::size_t> ref;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j)
      if (oracle::sqdist(pts, i, j) > best) {
        best = oracle::sqdist(pts, i, j);
        ref = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
  CHECK(kernels::farthest_pair(pts, Exec::serial) == ref);

  Matrix sq(4, 2);
  sq << 0, 0, 1, 0, 0, 1, 1, 1;
  // (0,3) and (1,2) are both diagonals.
  CHECK(kernels::farthest_pair(sq, Exec::parallel) == std::pair<std::size_t, std::size_t>{0, 3});
}

TEST_CASE("OpenMP results do not depend on the thread count") {
  std::mt19937_64 rng(12);
  const auto pts = oracle::uniform_matrix(2500, 5, rng);
  const auto coef = randn(2500, 1);
  auto decide = [&] {
    std::vector<double> out(pts.rows());
    kernels::rbf_decision(pts, pts.topRows(300), std::span<const double>(coef).first(300), 0.5,
                          0.0, out, Exec::parallel);
    return out;
  };
  CHECK(with_threads(1, decide) == with_threads(4, decide));

  auto normal = [&] {
    return kernels::accumulate_normal_equations(
        2500, 5,
        [&](std::size_t b, std::size_t e, Eigen::MatrixXd &jac, Eigen::VectorXd &res) {
          for (std::size_t r = b; r < e; ++r) {
            jac.row(static_cast<Eigen::Index>(r - b)) = pts.row(static_cast<Eigen::Index>(r));
            res(static_cast<Eigen::Index>(r - b)) = coef[r];
          }
        },
        Exec::parallel);
  };
  const auto n1 = with_threads(1, normal);
  const auto n4 = with_threads(4, normal);
  CHECK(n1.a == n4.a);
  CHECK(n1.g == n4.g);
  CHECK(n1.sse == n4.sse);
}

TEST_CASE("accumulate_normal_equations equals J^T J and J^T r") {
  std::mt19937_64 rng(5);
  const auto j = oracle::uniform_matrix(1300, 6, rng, -1.0, 1.0);
  const auto r = randn(1300, 8);
  auto fill = [&](std::size_t b, std::size_t e, Eigen::MatrixXd &jac, Eigen::VectorXd &res) {
    for (std::size_t k = b; k < e; ++k) {
      jac.row(static_cast<Eigen::Index>(k - b)) = j.row(static_cast<Eigen::Index>(k));
      res(static_cast<Eigen::Index>(k - b)) = r[k];
    }
  };
  const Eigen::MatrixXd jd = j;
  const Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), 1300);
  const Eigen::MatrixXd a_ref = jd.transpose() * jd;
  const Eigen::VectorXd g_ref = jd.transpose() * rv;
  for (auto exec : {Exec::serial, Exec::parallel}) {
    const auto ne = kernels::accumulate_normal_equations(1300, 6, fill, exec);
    CHECK((Eigen::MatrixXd(ne.a) - a_ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ne.g - g_ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ne.sse == doctest::Approx(rv.squaredNorm()).epsilon(1e-12));
  }
}
