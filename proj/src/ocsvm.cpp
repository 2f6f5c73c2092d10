#include "ecomp/envelope.hpp"

#include "ecomp/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ecomp {

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma) {
  if (x.size() != y.size())
    throw Error("kernel.dimension", fmt::format("kernel inputs differ in size ({} vs {})", x.size(),
                                                y.size()));
  if (!(sigma > 0.0))
    throw Error("kernel.sigma", "kernel width must be positive");
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    sq += d * d;
  }
  return std::exp(-sq / (2.0 * sigma * sigma));
}

OcsvmDual solve_ocsvm_dual(const Matrix &q, double nu, double tol, std::size_t max_iter) {
  const auto l = static_cast<std::size_t>(q.rows());
  if (l < 1 || q.cols() != q.rows())
    throw Error("ocsvm.shape", "Gram matrix must be square and non-empty");
  if (!(nu > 0.0 && nu <= 1.0))
    throw Error("ocsvm.nu", fmt::format("nu = {} outside (0, 1]", nu));
  if (nu * static_cast<double>(l) < 1.0 - 1e-12)
    throw Error("ocsvm.infeasible",
                fmt::format("nu * l = {} < 1: box [0, 1/(nu l)] cannot hold the multipliers",
                            nu * static_cast<double>(l)));
  if (max_iter == 0)
    max_iter = std::max<std::size_t>(10'000'000, 100 * l);

  const double c = 1.0 / (nu * static_cast<double>(l));
  OcsvmDual out;
  auto &a = out.alpha;
  a.assign(l, 0.0);
  {
    double left = 1.0;
    for (std::size_t i = 0; i < l && left > 0.0; ++i) {
      a[i] = std::min(c, left);
      left -= a[i];
    }
  }

  std::vector<double> g(l, 0.0);
  for (std::size_t i = 0; i < l; ++i)
    if (a[i] != 0.0)
      for (std::size_t t = 0; t < l; ++t)
        g[t] += a[i] * q(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));

  constexpr double tau = 1e-12;
  std::size_t iter = 0;
  double gap = 0.0;
  while (true) {
    // i: most violating index that may grow; j: second-order pick among those that may shrink.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = l;
    for (std::size_t t = 0; t < l; ++t)
      if (a[t] < c && -g[t] > gmax) {
        gmax = -g[t];
        i = t;
      }
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t j = l;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < l; ++t) {
      if (!(a[t] > 0.0))
        continue;
      gmin = std::min(gmin, -g[t]);
      const double b = gmax + g[t];
      if (i < l && b > 0.0) {
        double curv = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +
                      q(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) -
                      2.0 * q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        if (curv <= 0.0)
          curv = tau;
        const double obj = -(b * b) / curv;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    gap = (i < l && gmin < std::numeric_limits<double>::infinity()) ? gmax - gmin : 0.0;
    if (gap < tol || i == l || j == l) {
      out.converged = true;
      break;
    }
    if (iter >= max_iter)
      break;
    ++iter;

    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    double curv = q(ii, ii) + q(jj, jj) - 2.0 * q(ii, jj);
    if (curv <= 0.0)
      curv = tau;
    double delta = (g[j] - g[i]) / curv;
    // Feasible range for a_i += delta, a_j -= delta.
    const double hi = std::min(c - a[i], a[j]);
    const double lo = std::max(-a[i], a[j] - c);
    delta = std::clamp(delta, lo, hi);
    if (delta == 0.0)
      break;

    double ai = a[i] + delta;
    double aj = a[j] - delta;
    if (delta == hi) {
      if (hi == c - a[i])
        ai = c;
      if (hi == a[j])
        aj = 0.0;
    }
    const double di = ai - a[i];
    const double dj = aj - a[j];
    a[i] = ai;
    a[j] = aj;
    for (std::size_t t = 0; t < l; ++t) {
      const auto tt = static_cast<Eigen::Index>(t);
      g[t] += q(tt, ii) * di + q(tt, jj) * dj;
    }
  }
  out.iterations = iter;
  out.kkt_residual = std::max(gap, 0.0);

  // Bias: mean gradient over free multipliers, else the midpoint of the bracket.
  double sum = 0.0;
  std::size_t free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < l; ++t) {
    if (a[t] >= c)
      lb = std::max(lb, g[t]);
    else if (a[t] <= 0.0)
      ub = std::min(ub, g[t]);
    else {
      sum += g[t];
      ++free;
    }
  }
  if (free > 0)
    out.bias = sum / static_cast<double>(free);
  else if (std::isfinite(ub) && std::isfinite(lb))
    out.bias = 0.5 * (ub + lb);
  else
    out.bias = std::isfinite(ub) ? ub : lb;

  double obj = 0.0;
  for (std::size_t t = 0; t < l; ++t)
    obj += a[t] * g[t];
  out.objective = 0.5 * obj;
  return out;
}

OcsvmModel train_ocsvm(const Matrix &x, double nu, double sigma, double tol, std::size_t max_iter) {
  if (x.rows() < 2)
    throw Error("ocsvm.size", "need at least two training points");
  if (!(sigma > 0.0))
    throw Error("kernel.sigma", "kernel width must be positive");
  OcsvmModel m;
  m.scaling = ScalingInfo::fit(x);
  const Matrix xs = apply_scaling(x, m.scaling);
  const Matrix k = kernels::gram_matrix(xs, sigma, Exec::parallel);
  const auto dual = solve_ocsvm_dual(k, nu, tol, max_iter);
  if (!dual.converged)
    throw Error("ocsvm.no_convergence",
                fmt::format("SMO stopped after {} iterations with KKT residual {}", dual.iterations,
                            dual.kkt_residual));

  m.sigma = sigma;
  m.nu = nu;
  m.bias = dual.bias;
  m.training_size = static_cast<std::size_t>(x.rows());
  m.kkt_residual = dual.kkt_residual;
  for (std::size_t i = 0; i < dual.alpha.size(); ++i)
    if (dual.alpha[i] > 0.0) {
      m.sv_index.push_back(i);
      m.alphas.push_back(dual.alpha[i]);
    }
  m.support_vectors.resize(static_cast<Eigen::Index>(m.sv_index.size()), xs.cols());
  for (std::size_t s = 0; s < m.sv_index.size(); ++s)
    m.support_vectors.row(static_cast<Eigen::Index>(s)) = xs.row(static_cast<Eigen::Index>(m.sv_index[s]));
  return m;
}

double ocsvm_score_scaled(const OcsvmModel &model, std::span<const double> xs) {
  if (xs.size() != static_cast<std::size_t>(model.support_vectors.cols()))
    throw Error("ocsvm.dimension",
                fmt::format("point has {} coordinates, model expects {}", xs.size(),
                            model.support_vectors.cols()));
  double s = 0.0;
  for (Eigen::Index r = 0; r < model.support_vectors.rows(); ++r)
    s += model.alphas[static_cast<std::size_t>(r)] *
         gaussian_kernel(xs, {model.support_vectors.row(r).data(), xs.size()}, model.sigma);
  return s - (model.bias - model.bias_offset);
}

double ocsvm_score(const OcsvmModel &model, std::span<const double> x) {
  if (x.size() != model.dimension())
    throw Error("ocsvm.dimension", fmt::format("point has {} coordinates, model expects {}",
                                               x.size(), model.dimension()));
  std::vector<double> xs(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    xs[k] = model.scaling.scale(k, x[k]);
  return ocsvm_score_scaled(model, xs);
}

std::vector<double> ocsvm_score_batch(const OcsvmModel &model, const Matrix &x, Exec exec) {
  if (static_cast<std::size_t>(x.cols()) != model.dimension())
    throw Error("ocsvm.dimension", "point dimension does not match the model");
  const Matrix xs = apply_scaling(x, model.scaling);
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  kernels::rbf_decision(xs, model.support_vectors, model.alphas, model.sigma,
                        model.bias - model.bias_offset, out, exec);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t select_confusion_cell(std::vector<ConfusionCell> &cells,
                                  const std::vector<char> &inside_hull,
                                  const std::vector<std::vector<char>> &accepted) {
  const double total = static_cast<double>(inside_hull.size());
  std::size_t best = cells.size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto &cell = cells[c];
    if (!cell.valid)
      continue;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t p = 0; p < inside_hull.size(); ++p) {
      if (!inside_hull[p] && accepted[c][p])
        ++fp;
      if (inside_hull[p] && !accepted[c][p])
        ++fn;
    }
    cell.fpr = total > 0 ? static_cast<double>(fp) / total : 0.0;
    cell.fnr = total > 0 ? static_cast<double>(fn) / total : 0.0;
    if (best == cells.size()) {
      best = c;
      continue;
    }
    const auto &b = cells[best];
    const double cs = cell.fpr + cell.fnr;
    const double bs = b.fpr + b.fnr;
    if (cs < bs || (cs == bs && (cell.sigma < b.sigma || (cell.sigma == b.sigma && cell.nu > b.nu))))
      best = c;
  }
  if (best == cells.size())
    throw Error("tune.failed", "no grid cell produced a valid OCSVM");
  return best;
}

TuneResult tune_ocsvm(const Matrix &x, const std::vector<double> &nu_grid,
                      const std::vector<double> &sigma_grid, const HullModel &reference,
                      const TuneOptions &opts) {
  if (nu_grid.empty() || sigma_grid.empty())
    throw Error("tune.grid", "nu and sigma grids must be non-empty");
  if (reference.dim != static_cast<std::size_t>(x.cols()))
    throw Error("tune.reference", "reference hull dimension does not match the data");

  const auto d = x.cols();
  Matrix probes(static_cast<Eigen::Index>(opts.probe_count), d);
  std::mt19937_64 rng(opts.seed);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double lo = x.col(c).minCoeff();
    const double hi = x.col(c).maxCoeff();
    const double pad = opts.probe_margin * (hi - lo);
    std::uniform_real_distribution<double> u(lo - pad, hi + pad);
    for (Eigen::Index p = 0; p < probes.rows(); ++p)
      probes(p, c) = u(rng);
  }
  // Column-major draw order above keeps probes independent of the grid.

  TuneResult result;
  const auto inside = hull_contains_batch(reference, probes);
  for (char v : inside)
    (v ? result.probes_inside : result.probes_outside)++;

  std::vector<std::vector<char>> accepted;
  for (double sigma : sigma_grid)
    for (double nu : nu_grid) {
      ConfusionCell cell;
      cell.nu = nu;
      cell.sigma = sigma;
      std::vector<char> acc(static_cast<std::size_t>(probes.rows()), 0);
      try {
        const auto model = train_ocsvm(x, nu, sigma, opts.tol);
        const auto scores = ocsvm_score_batch(model, probes);
        for (std::size_t p = 0; p < scores.size(); ++p)
          acc[p] = static_cast<char>(scores[p] > 0.0);
        cell.support_vectors = model.alphas.size();
        cell.valid = true;
      } catch (const Error &) {
        cell.valid = false;
      }
      result.table.push_back(cell);
      accepted.push_back(std::move(acc));
    }
  const auto best = select_confusion_cell(result.table, inside, accepted);
  result.nu = result.table[best].nu;
  result.sigma = result.table[best].sigma;
  return result;
}

// ---------------------------------------------------------------------------

void GateConfig::validate() const {
  if (!(gamma > 0.0))
    throw Error("gate.gamma", "gate steepness must be positive");
}

GateVariant parse_gate_variant(std::string_view name) {
  if (name == "sigmoid" || name == "corrected-sigmoid" || name == "corrected_sigmoid")
    return GateVariant::corrected_sigmoid;
  if (name == "literal" || name == "literal_sigmoid")
    return GateVariant::literal_sigmoid;
  if (name == "hard")
    return GateVariant::hard;
  throw Error("gate.variant", fmt::format("unknown gate variant '{}'", name));
}

std::string_view to_string(GateVariant v) {
  switch (v) {
  case GateVariant::corrected_sigmoid:
    return "sigmoid";
  case GateVariant::literal_sigmoid:
    return "literal";
  case GateVariant::hard:
    return "hard";
  }
  return "sigmoid";
}

double gate_multiplier(double f_oc, const GateConfig &config) {
  if (f_oc > 0.0)
    return 1.0;
  switch (config.variant) {
  case GateVariant::corrected_sigmoid:
    return 2.0 / (1.0 + std::exp(-config.gamma * f_oc));
  case GateVariant::literal_sigmoid:
    return 1.0 / (1.0 + std::exp(config.gamma * f_oc));
  case GateVariant::hard:
    return 0.0;
  }
  return 0.0;
}

double gate(double raw, double f_oc, const GateConfig &config) {
  return raw * gate_multiplier(f_oc, config);
}

} // namespace ecomp
