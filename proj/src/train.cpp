#include "ecomp/netdyn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ecomp {

void TrainOptions::validate() const {
  if (!(stop_band > 0.0))
    throw Error("train.options", "stop_band must be positive");
  if (stop_patience < 1)
    throw Error("train.options", "stop_patience must be at least 1");
  if (!(lambda_up > 1.0) || !(lambda_down < 1.0) || !(lambda_down > 0.0))
    throw Error("train.options", "lambda factors must satisfy up > 1 and 0 < down < 1");
  if (!(lambda0 > 0.0) || !(lambda_max > lambda0))
    throw Error("train.options", "lambda0 must be positive and below lambda_max");
  if (restarts < 1)
    throw Error("train.options", "at least one restart is required");
}

const char *to_string(TrainStatus s) {
  switch (s) {
  case TrainStatus::converged:
    return "converged";
  case TrainStatus::max_epochs:
    return "max_epochs";
  case TrainStatus::stalled:
    return "stalled";
  }
  return "unknown";
}

namespace {

struct ScaledData {
  Matrix x;
  Vector y;
};

ScaledData scale_data(const MlpModel &m, const Matrix &x, const Vector &y) {
  ScaledData d;
  d.x = apply_scaling(x, m.input_scaling);
  d.y.resize(y.size());
  for (Eigen::Index r = 0; r < y.size(); ++r)
    d.y(r) = m.output_scaling.scale(0, y(r));
  return d;
}

double scaled_sse(const MlpModel &m, const ScaledData &d, Exec exec) {
  const auto rows = static_cast<std::size_t>(d.x.rows());
  const std::size_t chunks = (rows + kernels::kChunk - 1) / kernels::kChunk;
  std::vector<double> partial(chunks, 0.0);
  auto run = [&](std::size_t c) {
    const std::size_t b = c * kernels::kChunk;
    const std::size_t e = std::min(rows, b + kernels::kChunk);
    double s = 0.0;
    for (std::size_t r = b; r < e; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const double res = d.y(ri) - mlp_scaled_eval(m, d.x.row(ri).data());
      s += res * res;
    }
    partial[c] = s;
  };
  if (exec == Exec::serial) {
    for (std::size_t c = 0; c < chunks; ++c)
      run(c);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c)
      run(static_cast<std::size_t>(c));
  }
  double total = 0.0;
  for (double p : partial)
    total += p;
  return total;
}

kernels::NormalEquations lm_normal_equations(const MlpModel &m, const ScaledData &d, Exec exec) {
  const Eigen::Index p = m.param_count();
  auto fill = [&](std::size_t b, std::size_t e, Eigen::MatrixXd &jac, Eigen::VectorXd &res) {
    std::vector<double> row(static_cast<std::size_t>(p));
    for (std::size_t r = b; r < e; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto li = static_cast<Eigen::Index>(r - b);
      const double out = mlp_scaled_eval(m, d.x.row(ri).data(), row.data());
      for (Eigen::Index j = 0; j < p; ++j)
        jac(li, j) = row[static_cast<std::size_t>(j)];
      res(li) = d.y(ri) - out;
    }
  };
  return kernels::accumulate_normal_equations(static_cast<std::size_t>(d.x.rows()), p, fill, exec);
}

/// Solves (A + lambda I) delta = g; returns false when the system is not usable.
bool damped_step(const Matrix &a, const Vector &g, double lambda, Vector &delta) {
  Eigen::MatrixXd damped = a;
  damped.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    return false;
  delta = ldlt.solve(g);
  return delta.allFinite();
}

/// Generic damped Gauss-Newton loop shared by both training modes.
/// `assemble(model)` returns normal equations at the model; `loss(model)`
/// the mean squared error used for acceptance and stopping.
template <class Assemble, class Loss>
TrainResult damped_gauss_newton(MlpModel model, const TrainOptions &opts, Assemble &&assemble,
                                Loss &&loss_of) {
  TrainResult out;
  double loss = loss_of(model);
  out.loss_trace.push_back(loss);
  double lambda = opts.lambda0;
  std::size_t still = 0;
  out.status = TrainStatus::max_epochs;
  Vector delta;

  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    const auto ne = assemble(model, out);
    const Vector theta = model.params();
    bool accepted = false;
    double new_loss = loss;
    MlpModel trial = model;
    while (lambda <= opts.lambda_max) {
      if (damped_step(ne.a, ne.g, lambda, delta)) {
        trial.set_params(theta + delta);
        new_loss = loss_of(trial);
        if (std::isfinite(new_loss) && new_loss <= loss) {
          accepted = true;
          lambda = std::max(lambda * opts.lambda_down, 1e-20);
          break;
        }
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted) {
      out.status = TrainStatus::stalled;
      break;
    }
    model = std::move(trial);
    const double change = std::abs(loss - new_loss);
    loss = new_loss;
    out.loss_trace.push_back(loss);
    out.epochs = epoch;
    still = change <= opts.stop_band ? still + 1 : 0;
    if (still >= opts.stop_patience) {
      out.status = TrainStatus::converged;
      break;
    }
  }
  out.model = std::move(model);
  return out;
}

} // namespace

TrainResult train_lm(const MlpModel &init, const Matrix &x, const Vector &y,
                     const TrainOptions &opts) {
  opts.validate();
  init.validate();
  if (x.rows() != y.size() || x.rows() < 1)
    throw Error("train.data", "regressor and target row counts differ or are zero");
  if (x.cols() != init.n_in)
    throw Error("train.data", "regressor width does not match the network");
  if (!x.allFinite() || !y.allFinite())
    throw Error("train.data", "training data must be finite");

  const ScaledData data = scale_data(init, x, y);
  const double n = static_cast<double>(x.rows());

  TrainResult best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> traces;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    MlpModel start = init;
    if (r > 0) {
      start = MlpModel::random(init.n_in, init.n_hidden, opts.seed + r);
      start.input_scaling = init.input_scaling;
      start.output_scaling = init.output_scaling;
    }
    auto res = damped_gauss_newton(
        std::move(start), opts,
        [&](const MlpModel &m, TrainResult &) { return lm_normal_equations(m, data, opts.exec); },
        [&](const MlpModel &m) { return scaled_sse(m, data, opts.exec) / n; });
    traces.push_back(res.loss_trace);
    const double final_loss = res.loss_trace.back();
    if (final_loss < best_loss) {
      best_loss = final_loss;
      best = std::move(res);
      best.best_restart = r;
    }
  }
  best.restart_traces = std::move(traces);
  return best;
}

// ---------------------------------------------------------------------------
// Free-run (parallel) training

namespace {

struct CycleGradient {
  double sse = 0.0;
  std::size_t residuals = 0;
  kernels::NormalEquations normal;
  bool exploded = false;
  bool saturated = false;
};

CycleGradient cycle_gradient(const NarxModel &model, const TimeSeries &ts, double sens_bound,
                             bool want_jacobian) {
  const auto &net = model.net;
  const auto &spec = model.spec;
  const Eigen::Index p = net.param_count();
  const auto fb = static_cast<std::size_t>(NarxSpec::feedback_index);
  const double g_out = net.output_scaling.gain(0);
  const double g_fb = net.input_scaling.gain(fb);
  const auto &e = ts[spec.error];
  const auto n = ts.length();

  CycleGradient cg;
  cg.normal = kernels::NormalEquations(want_jacobian ? p : 0);
  Vector s = Vector::Zero(p);
  Vector jrow(p);
  double din[NarxSpec::width];
  double reg[NarxSpec::width];
  double xs[NarxSpec::width];

  const Eigen::Index block = static_cast<Eigen::Index>(kernels::kChunk);
  Eigen::MatrixXd rows(want_jacobian ? block : 0, p);
  Eigen::VectorXd res(want_jacobian ? block : 0);
  Eigen::Index filled = 0;
  auto flush = [&] {
    if (filled == 0)
      return;
    const auto r = rows.topRows(filled);
    cg.normal.a.noalias() += r.transpose() * r;
    cg.normal.g.noalias() += r.transpose() * res.head(filled);
    filled = 0;
  };

  double e_prev = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    spec.fill(ts, k, e_prev, reg);
    for (std::size_t i = 0; i < NarxSpec::width; ++i)
      xs[i] = net.input_scaling.scale(i, reg[i]);
    const double ys = mlp_scaled_eval(net, xs, want_jacobian ? jrow.data() : nullptr,
                                      want_jacobian ? din : nullptr);
    double e_hat = net.output_scaling.unscale(0, ys);
    if (want_jacobian)
      s = (jrow + (din[fb] * g_fb) * s) / g_out;
    if (!std::isfinite(e_hat) || std::abs(e_hat) > model.feedback_bound) {
      e_hat = std::isnan(e_hat) ? 0.0 : std::clamp(e_hat, -model.feedback_bound, model.feedback_bound);
      cg.saturated = true;
      if (want_jacobian)
        s.setZero();
    }
    const double r_s = g_out * (e[k] - e_hat);
    cg.sse += r_s * r_s;
    ++cg.residuals;
    if (want_jacobian) {
      if (s.norm() > sens_bound)
        cg.exploded = true;
      rows.row(filled) = g_out * s.transpose();
      res(filled) = r_s;
      if (++filled == block)
        flush();
    }
    e_prev = e_hat;
  }
  if (want_jacobian)
    flush();
  cg.normal.sse = cg.sse;
  return cg;
}

void require_error_cycles(const NarxModel &model, const Dataset &cycles) {
  if (cycles.cycles.empty())
    throw Error("train.data", "no training cycles");
  for (std::size_t c = 0; c < cycles.cycles.size(); ++c) {
    const auto &ts = cycles.cycles[c];
    if (ts.length() < 2)
      throw Error("train.data", fmt::format("cycle {} has fewer than two samples", c));
    if (!ts.has(model.spec.error))
      throw Error("narx.missing_channel", fmt::format("cycle {} has no error channel", c));
  }
  if (model.net.n_in != NarxSpec::width)
    throw Error("mlp.shape", "NARX network must have five inputs");
}

} // namespace

FreeRunGradient free_run_gradient(const NarxModel &model, const Dataset &cycles,
                                  double sensitivity_bound, Exec exec) {
  require_error_cycles(model, cycles);
  const auto count = cycles.cycles.size();
  std::vector<CycleGradient> per(count);
  if (exec == Exec::serial) {
    for (std::size_t c = 0; c < count; ++c)
      per[c] = cycle_gradient(model, cycles.cycles[c], sensitivity_bound, true);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(count); ++c)
      per[static_cast<std::size_t>(c)] =
          cycle_gradient(model, cycles.cycles[static_cast<std::size_t>(c)], sensitivity_bound, true);
  }
  FreeRunGradient out;
  out.normal = kernels::NormalEquations(model.net.param_count());
  for (const auto &cg : per) {
    out.normal += cg.normal;
    out.sse += cg.sse;
    out.residuals += cg.residuals;
    out.exploded |= cg.exploded;
    out.saturated |= cg.saturated;
  }
  out.normal.sse = out.sse;
  out.gradient = -2.0 * out.normal.g;
  return out;
}

double free_run_sse(const NarxModel &model, const Dataset &cycles) {
  require_error_cycles(model, cycles);
  double sse = 0.0;
  for (const auto &ts : cycles.cycles)
    sse += cycle_gradient(model, ts, std::numeric_limits<double>::infinity(), false).sse;
  return sse;
}

TrainResult train_rtrl(const NarxModel &init, const Dataset &cycles, const TrainOptions &opts) {
  opts.validate();
  init.net.validate();
  require_error_cycles(init, cycles);
  std::size_t residuals = 0;
  for (const auto &ts : cycles.cycles)
    residuals += ts.length() - 1;
  const double n = static_cast<double>(residuals);

  NarxModel probe = init;
  auto res = damped_gauss_newton(
      init.net, opts,
      [&](const MlpModel &m, TrainResult &tr) {
        probe.net = m;
        auto g = free_run_gradient(probe, cycles, opts.sensitivity_bound, opts.exec);
        tr.flagged |= g.exploded || g.saturated;
        return std::move(g.normal);
      },
      [&](const MlpModel &m) {
        probe.net = m;
        return free_run_sse(probe, cycles) / n;
      });
  res.restart_traces = {res.loss_trace};
  return res;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> space_filling_rows(const Matrix &x, std::size_t n, std::size_t pool_cap) {
  const auto rows = static_cast<std::size_t>(x.rows());
  if (rows <= pool_cap)
    return space_filling_subset(x, std::min(n, rows));
  const std::size_t stride = (rows + pool_cap - 1) / pool_cap;
  std::vector<std::size_t> pool;
  for (std::size_t r = 0; r < rows; r += stride)
    pool.push_back(r);
  Matrix px(static_cast<Eigen::Index>(pool.size()), x.cols());
  for (std::size_t k = 0; k < pool.size(); ++k)
    px.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(pool[k]));
  auto picked = space_filling_subset(px, std::min(n, pool.size()));
  for (auto &p : picked)
    p = pool[p];
  return picked;
}

GridSearchResult grid_search_neurons(const Dataset &train, const Dataset &validation,
                                     std::size_t subset_size,
                                     const std::vector<Eigen::Index> &candidates,
                                     const TrainOptions &opts, const NarxSpec &spec) {
  if (candidates.empty())
    throw Error("grid.candidates", "no candidate hidden sizes");
  const auto all = build_regressors(train, spec);
  const auto rows = space_filling_rows(all.x, subset_size);
  Matrix sx(static_cast<Eigen::Index>(rows.size()), all.x.cols());
  Vector sy(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sx.row(static_cast<Eigen::Index>(k)) = all.x.row(static_cast<Eigen::Index>(rows[k]));
    sy(static_cast<Eigen::Index>(k)) = all.y(static_cast<Eigen::Index>(rows[k]));
  }
  const double bound = 10.0 * all.y.cwiseAbs().maxCoeff();

  GridSearchResult result;
  for (const auto hidden : candidates) {
    CandidateScore score;
    score.hidden = hidden;
    try {
      MlpModel net = MlpModel::random(NarxSpec::width, hidden, opts.seed);
      net.fit_scaling(all.x, {all.y.data(), static_cast<std::size_t>(all.y.size())});
      auto trained = train_lm(net, sx, sy, opts);
      NarxModel model{trained.model, spec, bound, {}};
      double sse = 0.0;
      std::size_t count = 0;
      for (const auto &ts : validation.cycles) {
        const auto run = narx_simulate_parallel(model, ts);
        const auto &e = ts[spec.error];
        for (std::size_t k = 1; k < ts.length(); ++k) {
          sse += (e[k] - run.e[k]) * (e[k] - run.e[k]);
          ++count;
        }
      }
      score.rmse = count ? std::sqrt(sse / static_cast<double>(count))
                         : std::numeric_limits<double>::quiet_NaN();
      score.valid = std::isfinite(score.rmse);
      if (!score.valid)
        score.message = "non-finite validation error";
    } catch (const Error &e) {
      score.valid = false;
      score.message = e.what();
    }
    result.scores.push_back(score);
  }

  const CandidateScore *best = nullptr;
  for (const auto &s : result.scores) {
    if (!s.valid)
      continue;
    if (!best || s.rmse < best->rmse || (s.rmse == best->rmse && s.hidden < best->hidden))
      best = &s;
  }
  if (!best)
    throw Error("grid.failed", "every candidate failed to train");
  result.best_hidden = best->hidden;
  return result;
}

} // namespace ecomp
