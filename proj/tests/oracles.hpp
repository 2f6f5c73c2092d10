#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library except for plain data types.

#include "ecomp/common.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using ecomp::Matrix;

/// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("ecomp_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
};

/// Amplitude of the f-Hz component of x by direct DFT correlation.
inline double tone_amplitude(const std::vector<double> &x, double f, double fs) {
  double re = 0.0, im = 0.0;
  const double w = 2.0 * std::numbers::pi * f / fs;
  for (std::size_t k = 0; k < x.size(); ++k) {
    re += x[k] * std::cos(w * static_cast<double>(k));
    im -= x[k] * std::sin(w * static_cast<double>(k));
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(x.size());
}

inline double sqdist(const Matrix &p, Eigen::Index a, Eigen::Index b) {
  return (p.row(a) - p.row(b)).squaredNorm();
}

/// Every n-subset maximizing the minimum pairwise distance (exhaustive).
inline std::vector<std::vector<std::size_t>> maximin_subsets(const Matrix &p, std::size_t n) {
  const auto rows = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<std::size_t>> best;
  double best_val = -1.0;
  std::vector<bool> pick(rows, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < rows; ++i)
      if (pick[i])
        s.push_back(i);
    double m = INFINITY;
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b)
        m = std::min(m, sqdist(p, static_cast<Eigen::Index>(s[a]), static_cast<Eigen::Index>(s[b])));
    if (m > best_val + 1e-12) {
      best_val = m;
      best.clear();
    }
    if (std::abs(m - best_val) <= 1e-12)
      best.push_back(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

/// Euclidean projection onto {a : sum a = 1, 0 <= a <= cap} by bisection.
inline Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd &v, double cap) {
  double lo = v.minCoeff() - cap - 1.0;
  double hi = v.maxCoeff() + 1.0;
  auto mass = [&](double tau) { return (v.array() - tau).max(0.0).min(cap).sum(); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).min(cap).matrix();
}

/// Accelerated projected gradient on min 1/2 a^T K a over the capped simplex.
inline Eigen::VectorXd ocsvm_qp(const Eigen::MatrixXd &k, double nu, int iters = 400000) {
  const auto l = k.rows();
  const double cap = 1.0 / (nu * static_cast<double>(l));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  Eigen::VectorXd a = project_capped_simplex(Eigen::VectorXd::Constant(l, 1.0 / l), cap);
  Eigen::VectorXd y = a, prev = a;
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    a = project_capped_simplex(y - step * (k * y), cap);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = a + ((t - 1.0) / tn) * (a - prev);
    if ((a - prev).lpNorm<Eigen::Infinity>() < 1e-15 && it > 100)
      break;
    prev = a;
    t = tn;
  }
  return a;
}

/// 2-D hull vertices by edge-support enumeration: (i, j) is a hull edge when no
/// point lies strictly to its right. Assumes general position.
inline std::set<std::size_t> hull_vertices_2d(const Matrix &p) {
  std::set<std::size_t> out;
  const auto n = p.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j)
        continue;
      bool support = true;
      for (Eigen::Index k = 0; k < n && support; ++k) {
        if (k == i || k == j)
          continue;
        const double cross = (p(j, 0) - p(i, 0)) * (p(k, 1) - p(i, 1)) -
                             (p(j, 1) - p(i, 1)) * (p(k, 0) - p(i, 0));
        if (cross < 0.0)
          support = false;
      }
      if (support) {
        out.insert(static_cast<std::size_t>(i));
        out.insert(static_cast<std::size_t>(j));
      }
    }
  return out;
}

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd &)> &f,
                                   Eigen::VectorXd x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = x(i);
    x(i) = x0 + h;
    const double fp = f(x);
    x(i) = x0 - h;
    const double fm = f(x);
    x(i) = x0;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|b|_inf, floor).
inline double rel_error(const Eigen::VectorXd &a, const Eigen::VectorXd &b, double floor = 1e-6) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), floor);
}

inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng,
                             double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = u(rng);
  return m;
}

} // namespace oracle
