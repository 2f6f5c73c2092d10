#include "ecomp/netdyn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace ecomp {

void NarxSpec::fill(const TimeSeries &ts, std::size_t k, double e_prev, double *out) const {
  const auto &i = ts[current];
  out[0] = i[k];
  out[1] = i[k - 1];
  out[2] = ts[temperature][k];
  out[3] = ts[soc][k];
  out[4] = e_prev;
}

namespace {

void require_channels(const TimeSeries &ts, const NarxSpec &spec, bool need_error) {
  for (const auto *name : {&spec.current, &spec.temperature, &spec.soc})
    if (!ts.has(*name))
      throw Error("narx.missing_channel", fmt::format("missing regressor channel '{}'", *name));
  if (need_error && !ts.has(spec.error))
    throw Error("narx.missing_channel", fmt::format("missing error channel '{}'", spec.error));
  if (ts.length() < 2)
    throw Error("narx.length", "series needs at least two samples");
}

} // namespace

RegressorSet build_regressors(const TimeSeries &ts, const NarxSpec &spec) {
  require_channels(ts, spec, true);
  const auto n = ts.length();
  const auto &e = ts[spec.error];
  RegressorSet set;
  set.x.resize(static_cast<Eigen::Index>(n - 1), NarxSpec::width);
  set.y.resize(static_cast<Eigen::Index>(n - 1));
  for (std::size_t k = 1; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k - 1);
    spec.fill(ts, k, e[k - 1], set.x.row(r).data());
    set.y(r) = e[k];
  }
  return set;
}

RegressorSet build_regressors(const Dataset &data, const NarxSpec &spec) {
  Eigen::Index rows = 0;
  for (const auto &c : data.cycles)
    rows += static_cast<Eigen::Index>(c.length()) - 1;
  RegressorSet all;
  all.x.resize(rows, NarxSpec::width);
  all.y.resize(rows);
  Eigen::Index at = 0;
  for (const auto &c : data.cycles) {
    auto part = build_regressors(c, spec);
    all.x.middleRows(at, part.x.rows()) = part.x;
    all.y.segment(at, part.y.size()) = part.y;
    at += part.x.rows();
  }
  return all;
}

std::vector<double> narx_predict_series_parallel(const MlpModel &model, const NarxSpec &spec,
                                                 const TimeSeries &ts) {
  const auto set = build_regressors(ts, spec);
  const Vector pred = mlp_forward_batch(model, set.x);
  return {pred.data(), pred.data() + pred.size()};
}

FreeRun narx_simulate_parallel(const StepFunction &f, const NarxSpec &spec, const TimeSeries &u,
                               double e0, double bound) {
  require_channels(u, spec, false);
  FreeRun run;
  run.e.resize(u.length());
  run.e[0] = e0;
  std::array<double, NarxSpec::width> reg{};
  for (std::size_t k = 1; k < u.length(); ++k) {
    spec.fill(u, k, run.e[k - 1], reg.data());
    double v = f(reg);
    if (!std::isfinite(v) || std::abs(v) > bound) {
      v = std::isnan(v) ? 0.0 : std::clamp(v, -bound, bound);
      run.diverged = true;
    }
    run.e[k] = v;
  }
  return run;
}

FreeRun narx_simulate_parallel(const NarxModel &model, const TimeSeries &u, double e0) {
  const auto &net = model.net;
  return narx_simulate_parallel(
      [&net](std::span<const double> x) { return mlp_forward(net, x); }, model.spec, u, e0,
      model.feedback_bound);
}

} // namespace ecomp
