#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; the dispatching
// overloads in `kernels` pick one from an Exec tag. The OpenMP versions split
// work into fixed-size chunks and reduce partials in chunk order, so results do
// not depend on the thread count.

#include "ecomp/common.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ecomp::kernels {

inline constexpr std::size_t kChunk = 512;

namespace serial {
void fir_centered(std::span<const double> x, std::span<const double> taps, std::span<double> out);
Matrix gram_matrix(const Matrix &x, double sigma);
void rbf_decision(const Matrix &points, const Matrix &centers, std::span<const double> coef,
                  double sigma, double offset, std::span<double> out);
void min_sqdist_update(const Matrix &points, std::size_t new_index, std::span<double> min_sq);
std::pair<std::size_t, std::size_t> farthest_pair(const Matrix &points);
void halfspace_max_violation(const Matrix &points, const Matrix &normals,
                             std::span<const double> offsets, std::span<double> out);
} // namespace serial

namespace omp {
void fir_centered(std::span<const double> x, std::span<const double> taps, std::span<double> out);
Matrix gram_matrix(const Matrix &x, double sigma);
void rbf_decision(const Matrix &points, const Matrix &centers, std::span<const double> coef,
                  double sigma, double offset, std::span<double> out);
void min_sqdist_update(const Matrix &points, std::size_t new_index, std::span<double> min_sq);
std::pair<std::size_t, std::size_t> farthest_pair(const Matrix &points);
void halfspace_max_violation(const Matrix &points, const Matrix &normals,
                             std::span<const double> offsets, std::span<double> out);
} // namespace omp

/// out[k] = sum_j taps[j] * x[k + D - j], D = (taps - 1) / 2, with x extended by
/// edge replication. taps.size() must be odd.
inline void fir_centered(std::span<const double> x, std::span<const double> taps,
                         std::span<double> out, Exec exec) {
  exec == Exec::serial ? serial::fir_centered(x, taps, out) : omp::fir_centered(x, taps, out);
}

/// K(i, j) = exp(-|x_i - x_j|^2 / (2 sigma^2)).
inline Matrix gram_matrix(const Matrix &x, double sigma, Exec exec) {
  return exec == Exec::serial ? serial::gram_matrix(x, sigma) : omp::gram_matrix(x, sigma);
}

/// out[p] = sum_i coef[i] * K(points_p, centers_i) - offset.
inline void rbf_decision(const Matrix &points, const Matrix &centers, std::span<const double> coef,
                         double sigma, double offset, std::span<double> out, Exec exec) {
  exec == Exec::serial ? serial::rbf_decision(points, centers, coef, sigma, offset, out)
                       : omp::rbf_decision(points, centers, coef, sigma, offset, out);
}

/// min_sq[p] = min(min_sq[p], |points_p - points_new|^2).
inline void min_sqdist_update(const Matrix &points, std::size_t new_index,
                              std::span<double> min_sq, Exec exec) {
  exec == Exec::serial ? serial::min_sqdist_update(points, new_index, min_sq)
                       : omp::min_sqdist_update(points, new_index, min_sq);
}

/// Pair (i < j) with the largest distance; ties go to the lexicographically
/// smallest pair.
inline std::pair<std::size_t, std::size_t> farthest_pair(const Matrix &points, Exec exec) {
  return exec == Exec::serial ? serial::farthest_pair(points) : omp::farthest_pair(points);
}

/// out[p] = max_f (normals_f . points_p - offsets_f).
inline void halfspace_max_violation(const Matrix &points, const Matrix &normals,
                                    std::span<const double> offsets, std::span<double> out,
                                    Exec exec) {
  exec == Exec::serial ? serial::halfspace_max_violation(points, normals, offsets, out)
                       : omp::halfspace_max_violation(points, normals, offsets, out);
}

/// Gauss-Newton normal equations A = J^T J, g = J^T r, sse = r^T r.
struct NormalEquations {
  Matrix a;
  Vector g;
  double sse = 0.0;

  explicit NormalEquations(Eigen::Index params = 0)
      : a(Matrix::Zero(params, params)), g(Vector::Zero(params)) {}

  NormalEquations &operator+=(const NormalEquations &o) {
    a += o.a;
    g += o.g;
    sse += o.sse;
    return *this;
  }
};

/// Accumulates normal equations over `rows` residual rows with `params`
/// parameters. `fill(begin, end, jac, res)` writes rows [begin, end) of the
/// Jacobian into `jac` (resized to (end - begin) x params) and the residuals
/// into `res`.
template <class Fill>
NormalEquations accumulate_normal_equations(std::size_t rows, Eigen::Index params, Fill &&fill,
                                            Exec exec) {
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  if (exec == Exec::serial) {
    NormalEquations total(params);
    Eigen::MatrixXd jac(1, params);
    Eigen::VectorXd res(1);
    for (std::size_t r = 0; r < rows; ++r) {
      fill(r, r + 1, jac, res);
      for (Eigen::Index i = 0; i < params; ++i) {
        total.g(i) += jac(0, i) * res(0);
        for (Eigen::Index j = 0; j < params; ++j)
          total.a(i, j) += jac(0, i) * jac(0, j);
      }
      total.sse += res(0) * res(0);
    }
    return total;
  }

  std::vector<NormalEquations> partial(chunks, NormalEquations(params));
#pragma omp parallel
  {
    Eigen::MatrixXd jac;
    Eigen::VectorXd res;
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
      const std::size_t b = static_cast<std::size_t>(c) * kChunk;
      const std::size_t e = std::min(rows, b + kChunk);
      jac.resize(static_cast<Eigen::Index>(e - b), params);
      res.resize(static_cast<Eigen::Index>(e - b));
      fill(b, e, jac, res);
      auto &p = partial[static_cast<std::size_t>(c)];
      p.a.noalias() = jac.transpose() * jac;
      p.g.noalias() = jac.transpose() * res;
      p.sse = res.squaredNorm();
    }
  }
  NormalEquations total(params);
  for (const auto &p : partial)
    total += p;
  return total;
}

} // namespace ecomp::kernels
