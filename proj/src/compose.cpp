#include "ecomp/compose.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace ecomp {

std::size_t Envelope::regressor_width() const {
  if (ocsvm)
    return ocsvm->dimension();
  if (hull)
    return NarxSpec::width;
  return 0;
}

double Envelope::score(std::span<const double> regressor) const {
  if (ocsvm)
    return ocsvm_score(*ocsvm, regressor);
  if (hull) {
    std::vector<double> proj(hull_columns.size());
    for (std::size_t k = 0; k < hull_columns.size(); ++k)
      proj[k] = regressor[static_cast<std::size_t>(hull_columns[k])];
    return hull_contains(*hull, proj) ? 1.0 : -1.0;
  }
  return 1.0;
}

void HybridModel::validate() const {
  narx.net.validate();
  gate.validate();
  if (narx.net.n_in != NarxSpec::width)
    throw Error("hybrid.schema", "NARX network must take the five-element regressor");
  if (envelope.ocsvm && envelope.ocsvm->dimension() != static_cast<std::size_t>(NarxSpec::width))
    throw Error("hybrid.schema", fmt::format("OCSVM expects {} inputs, regressor has {}",
                                             envelope.ocsvm->dimension(), NarxSpec::width));
  if (envelope.hull) {
    if (envelope.hull->dim != envelope.hull_columns.size())
      throw Error("hybrid.schema", "hull dimension does not match its regressor projection");
    for (auto c : envelope.hull_columns)
      if (c < 0 || c >= NarxSpec::width)
        throw Error("hybrid.schema", "hull projection column out of range");
  }
}

TimeSeries compute_error_channel(const TimeSeries &measured, std::span<const double> am_voltage) {
  const auto &v = measured[channel::voltage];
  if (v.size() != am_voltage.size())
    throw Error("compose.length", fmt::format("measured voltage has {} samples, model output {}",
                                              v.size(), am_voltage.size()));
  std::vector<double> e(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    e[k] = v[k] - am_voltage[k];
  TimeSeries out = measured;
  out.set(channel::error, std::move(e));
  return out;
}

HybridTrace hybrid_simulate(const HybridModel &h, std::span<const double> current,
                            std::span<const double> temp_c, double soc0, double dt) {
  h.validate();
  if (current.size() != temp_c.size())
    throw Error("compose.length", "current and temperature lengths differ");
  const auto n = current.size();
  HybridTrace tr;
  tr.y.resize(n);
  tr.y_am.resize(n);
  tr.e_dd.resize(n);
  tr.e_raw.resize(n);
  tr.f_oc.assign(n, std::numeric_limits<double>::quiet_NaN());
  tr.soc.resize(n);
  if (n == 0)
    return tr;

  EquivCircuitStepper am(h.am, soc0, dt);
  const double bound = h.narx.feedback_bound;
  std::array<double, NarxSpec::width> reg{};
  for (std::size_t k = 0; k < n; ++k) {
    tr.y_am[k] = am.step(current[k], temp_c[k]);
    tr.soc[k] = am.soc();
    if (k == 0) {
      tr.e_dd[0] = 0.0;
      tr.e_raw[0] = 0.0;
      tr.y[0] = tr.y_am[0];
      continue;
    }
    reg = {current[k], current[k - 1], temp_c[k], tr.soc[k], tr.e_dd[k - 1]};
    double raw = mlp_forward(h.narx.net, reg);
    if (!std::isfinite(raw) || std::abs(raw) > bound) {
      raw = std::isnan(raw) ? 0.0 : std::clamp(raw, -bound, bound);
      tr.diverged = true;
    }
    tr.e_raw[k] = raw;
    double e = raw;
    if (!h.envelope.empty()) {
      tr.f_oc[k] = h.envelope.score(reg);
      e = gate(raw, tr.f_oc[k], h.gate);
    }
    tr.e_dd[k] = e;
    tr.y[k] = tr.y_am[k] + e;
  }
  tr.clamped = am.clamped();
  return tr;
}

MetricsReport evaluate(std::span<const double> y_hat, std::span<const double> y,
                       const HullModel *hull, const Matrix *regressors) {
  if (y_hat.size() != y.size() || y.empty())
    throw Error("metrics.length", "prediction and measurement must have equal non-zero length");
  MetricsReport m;
  double sse = 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = y_hat[k] - y[k];
    sse += d * d;
    worst = std::max(worst, std::abs(d));
  }
  m.rmse = std::sqrt(sse / static_cast<double>(y.size()));
  m.max_abs_error = worst;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (span > 0.0) {
    m.normalized_max_error = worst / span;
  } else {
    m.normalized_max_error = std::numeric_limits<double>::quiet_NaN();
    m.span_degenerate = true;
  }
  m.inside_fraction = std::numeric_limits<double>::quiet_NaN();
  if (hull && regressors && regressors->rows() > 0) {
    const auto inside = hull_contains_batch(*hull, *regressors);
    const auto count = std::count(inside.begin(), inside.end(), 1);
    m.inside_fraction = static_cast<double>(count) / static_cast<double>(inside.size());
  }
  return m;
}

namespace {

std::string num(double v) {
  if (std::isnan(v))
    return "nan";
  return fmt::format("{:.10g}", v);
}

} // namespace

std::string format_report_csv(const std::vector<ReportRow> &rows) {
  std::string out = "variant,cycle,rmse,max_err,max_err_norm,inside_frac\n";
  for (const auto &r : rows)
    out += fmt::format("{},{},{},{},{},{}\n", r.variant, r.cycle, num(r.metrics.rmse),
                       num(r.metrics.max_abs_error), num(r.metrics.normalized_max_error),
                       num(r.metrics.inside_fraction));
  return out;
}

void write_report_csv(const std::filesystem::path &path, const std::vector<ReportRow> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("report.io", fmt::format("{}: cannot open for writing", path.string()));
  out << format_report_csv(rows);
}

} // namespace ecomp
