#pragma once

// Hybrid model: analytical prediction plus a boundary-gated NARX error
// compensator, and the validation metrics used to compare variants.

#include "ecomp/envelope.hpp"
#include "ecomp/netdyn.hpp"
#include "ecomp/plant.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ecomp {

/// Boundary used to gate the compensator. The OCSVM scores the full NARX
/// regressor; the hull sees the regressor columns listed in `hull_columns`
/// and scores +1 inside, -1 outside.
struct Envelope {
  std::optional<OcsvmModel> ocsvm;
  std::optional<HullModel> hull;
  std::vector<Eigen::Index> hull_columns{0, 2, 3};

  bool empty() const noexcept { return !ocsvm && !hull; }
  /// Input dimension the envelope expects from the regressor (0 when empty).
  std::size_t regressor_width() const;
  double score(std::span<const double> regressor) const;
};

struct HybridModel {
  EquivCircuitParams am;
  NarxModel narx;
  Envelope envelope;
  GateConfig gate;

  void validate() const;
};

/// e(k) = measured v(k) - am(k), appended as channel "e".
TimeSeries compute_error_channel(const TimeSeries &measured, std::span<const double> am_voltage);

struct HybridTrace {
  std::vector<double> y;
  std::vector<double> y_am;
  /// Gated compensation actually added.
  std::vector<double> e_dd;
  /// Raw network output before gating.
  std::vector<double> e_raw;
  /// Envelope score per step (NaN without envelope, and at k = 0).
  std::vector<double> f_oc;
  std::vector<double> soc;
  bool diverged = false;
  bool clamped = false;
};

/// Runs the analytical model and the gated free-run compensator side by side.
/// e_dd(0) = 0; for k >= 1 the regressor carries the fed-back gated e_dd(k-1).
HybridTrace hybrid_simulate(const HybridModel &h, std::span<const double> current,
                            std::span<const double> temp_c, double soc0, double dt);

struct MetricsReport {
  double rmse = 0.0;
  double max_abs_error = 0.0;
  /// max_abs_error / (max(y) - min(y)); NaN when the span is zero.
  double normalized_max_error = 0.0;
  bool span_degenerate = false;
  /// Fraction of regressor rows inside the hull (NaN when not computed).
  double inside_fraction = 0.0;
};

MetricsReport evaluate(std::span<const double> y_hat, std::span<const double> y,
                       const HullModel *hull = nullptr, const Matrix *regressors = nullptr);

struct ReportRow {
  std::string variant;
  std::string cycle;
  MetricsReport metrics;
};

/// CSV with columns variant,cycle,rmse,max_err,max_err_norm,inside_frac.
std::string format_report_csv(const std::vector<ReportRow> &rows);
void write_report_csv(const std::filesystem::path &path, const std::vector<ReportRow> &rows);

} // namespace ecomp
