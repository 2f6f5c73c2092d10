#include "ecomp/kernels.hpp"

#include <cmath>
#include <limits>

namespace ecomp::kernels {

namespace {

inline double fir_at(std::span<const double> x, std::span<const double> taps, std::ptrdiff_t k) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  double acc = 0.0;
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(taps.size()); ++j) {
    std::ptrdiff_t idx = k + half - j;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, n - 1);
    acc += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(idx)];
  }
  return acc;
}

inline double sqdist(const Matrix &a, Eigen::Index i, const Matrix &b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

inline double max_violation(const Matrix &points, Eigen::Index p, const Matrix &normals,
                            std::span<const double> offsets) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < normals.rows(); ++f)
    worst = std::max(worst, normals.row(f).dot(points.row(p)) - offsets[static_cast<std::size_t>(f)]);
  return worst;
}

struct PairBest {
  double d = -1.0;
  std::size_t i = 0;
  std::size_t j = 0;

  bool better_than(const PairBest &o) const {
    if (d != o.d)
      return d > o.d;
    return std::pair(i, j) < std::pair(o.i, o.j);
  }
};

} // namespace

// --------------------------------------------------------------------------
namespace serial {

void fir_centered(std::span<const double> x, std::span<const double> taps, std::span<double> out) {
  for (std::size_t k = 0; k < x.size(); ++k)
    out[k] = fir_at(x, taps, static_cast<std::ptrdiff_t>(k));
}

Matrix gram_matrix(const Matrix &x, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Matrix k(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      k(i, j) = std::exp(-sqdist(x, i, x, j) * inv);
  return k;
}

void rbf_decision(const Matrix &points, const Matrix &centers, std::span<const double> coef,
                  double sigma, double offset, std::span<double> out) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      s += coef[static_cast<std::size_t>(c)] * std::exp(-sqdist(points, p, centers, c) * inv);
    out[static_cast<std::size_t>(p)] = s - offset;
  }
}

void min_sqdist_update(const Matrix &points, std::size_t new_index, std::span<double> min_sq) {
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const double d = sqdist(points, p, points, static_cast<Eigen::Index>(new_index));
    auto &m = min_sq[static_cast<std::size_t>(p)];
    m = std::min(m, d);
  }
}

std::pair<std::size_t, std::size_t> farthest_pair(const Matrix &points) {
  PairBest best;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      PairBest cand{sqdist(points, i, points, j), static_cast<std::size_t>(i),
                    static_cast<std::size_t>(j)};
      if (cand.better_than(best))
        best = cand;
    }
  return {best.i, best.j};
}

void halfspace_max_violation(const Matrix &points, const Matrix &normals,
                             std::span<const double> offsets, std::span<double> out) {
  for (Eigen::Index p = 0; p < points.rows(); ++p)
    out[static_cast<std::size_t>(p)] = max_violation(points, p, normals, offsets);
}

} // namespace serial

// --------------------------------------------------------------------------
namespace omp {

void fir_centered(std::span<const double> x, std::span<const double> taps, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k)
    out[static_cast<std::size_t>(k)] = fir_at(x, taps, k);
}

Matrix gram_matrix(const Matrix &x, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      k(i, j) = std::exp(-sqdist(x, i, x, j) * inv);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      k(i, j) = k(j, i);
  return k;
}

void rbf_decision(const Matrix &points, const Matrix &centers, std::span<const double> coef,
                  double sigma, double offset, std::span<double> out) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      s += coef[static_cast<std::size_t>(c)] * std::exp(-sqdist(points, p, centers, c) * inv);
    out[static_cast<std::size_t>(p)] = s - offset;
  }
}

void min_sqdist_update(const Matrix &points, std::size_t new_index, std::span<double> min_sq) {
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const double d = sqdist(points, p, points, static_cast<Eigen::Index>(new_index));
    auto &m = min_sq[static_cast<std::size_t>(p)];
    m = std::min(m, d);
  }
}

std::pair<std::size_t, std::size_t> farthest_pair(const Matrix &points) {
  const Eigen::Index n = points.rows();
  std::vector<PairBest> per_row(static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)));
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    PairBest best;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      PairBest cand{sqdist(points, i, points, j), static_cast<std::size_t>(i),
                    static_cast<std::size_t>(j)};
      if (cand.better_than(best))
        best = cand;
    }
    per_row[static_cast<std::size_t>(i)] = best;
  }
  PairBest best;
  for (const auto &b : per_row)
    if (b.d >= 0.0 && b.better_than(best))
      best = b;
  return {best.i, best.j};
}

void halfspace_max_violation(const Matrix &points, const Matrix &normals,
                             std::span<const double> offsets, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < points.rows(); ++p)
    out[static_cast<std::size_t>(p)] = max_violation(points, p, normals, offsets);
}

} // namespace omp

} // namespace ecomp::kernels
