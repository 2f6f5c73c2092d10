#pragma once

// Experiment harness: polynomial regression study, synthetic battery study,
// drive-cycle generation and SVG rendering of the results.

#include "ecomp/compose.hpp"
#include "ecomp/envelope.hpp"
#include "ecomp/netdyn.hpp"
#include "ecomp/plant.hpp"
#include "ecomp/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ecomp {

// ---------------------------------------------------------------------------
// Polynomial targets

/// Random sum of sine-modulated monomials on [0, 1]^2.
///
/// Each exponent is an integer drawn uniformly from {0, ..., 2 * avg_exponent},
/// so its mean is avg_exponent. Coefficients are uniform in
/// [-coef_scale, coef_scale]; omega and phi are uniform on their ranges.
struct PolySpec {
  std::size_t n_terms = 30;
  int avg_exponent = 5;
  bool sine = true;
  double omega_min = 2.0 * std::numbers::pi;
  double omega_max = 4.0 * std::numbers::pi;
  double phase_min = 0.0;
  double phase_max = 2.0 * std::numbers::pi;
  double coef_scale = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PolyTerm {
  double c = 1.0;
  int p1 = 0;
  int p2 = 0;
  double omega = 0.0;
  double phi = 0.0;
};

/// f(x1, x2) = sum c x1^p1 x2^p2 sin(omega (x1 + x2) + phi); without sine the
/// factor is 1.
struct Polynomial {
  std::vector<PolyTerm> terms;
  bool sine = true;

  double operator()(double x1, double x2) const;
};

Polynomial gen_polynomial(const PolySpec &spec);

/// n points of the 2-D Halton sequence (bases 2, 3), shifted modulo 1 by a
/// seeded random offset.
Matrix halton_cover(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Polynomial study

struct PolyExperimentConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t train_points = 20;
  /// Training inputs are uniform on [train_lo, train_hi]^2; the test cover
  /// spans all of [0, 1]^2.
  double train_lo = 0.15;
  double train_hi = 0.85;
  std::size_t test_points = 20000;
  double snr_db = 40.0;
  Eigen::Index hidden = 10;
  PolySpec poly;
  TrainOptions train;
  std::vector<double> nu_grid{0.05, 0.1, 0.2, 0.3, 0.5};
  std::vector<double> sigma_grid{0.2, 0.35, 0.5, 0.75, 1.0};
  std::size_t probe_count = 2000;
  /// Widens the tuned OCSVM so the network may extrapolate slightly.
  double bias_offset = 0.05;
  GateConfig gate{2.0, GateVariant::hard};

  void validate() const;
};

using TargetFunction = std::function<double(double, double)>;
/// Builds the regression target for one seed. Defaults to gen_polynomial.
using TargetFactory = std::function<TargetFunction(std::uint64_t seed)>;

struct PolySeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string message;
  double rmse_fnn = 0.0;
  double rmse_ocsvm = 0.0;
  double rmse_hull = 0.0;
  double nu = 0.0;
  double sigma = 0.0;
  /// Hull area as a fraction of the unit square.
  double hull_area = 0.0;
};

struct PolyReport {
  std::vector<PolySeedResult> seeds;
  double mean_fnn = 0.0;
  double mean_ocsvm = 0.0;
  double mean_hull = 0.0;
  std::size_t failed = 0;
};

PolyReport run_poly_experiment(const PolyExperimentConfig &config,
                               const TargetFactory &target = {});

/// CSV with columns seed,fnn,fnn_ocsvm,fnn_hull,nu,sigma,hull_area,status and a final
/// "mean" row.
std::string format_poly_csv(const PolyReport &report);

// ---------------------------------------------------------------------------
// Drive cycles

/// Band-limited random current pulses and a slow temperature drift.
struct DriveProfile {
  double duration_s = 600.0;
  /// Pulse amplitude half-range as a C-rate.
  double current_scale_c = 0.5;
  /// Mean current as a C-rate (positive charges).
  double current_offset_c = 0.0;
  double pulse_mean_s = 8.0;
  /// Probability that a pulse is a rest at the offset current.
  double rest_probability = 0.3;
  double bandwidth_hz = 0.5;
  double temp_c = 25.0;
  double temp_drift_c = 2.0;
  double temp_period_s = 1800.0;
  double soc0 = 0.5;

  void validate() const;
};

struct DriveCycle {
  std::vector<double> current;
  std::vector<double> temp_c;
  double soc0 = 0.5;
};

/// Currents are clipped to +-2C of `capacity_ah`.
DriveCycle generate_drive_cycle(const DriveProfile &profile, double capacity_ah,
                                double sample_rate_hz, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Battery study

struct EdgeRanking {
  std::string name;
  std::size_t index = 0;
  double inside_fraction = 0.0;
};

/// Fraction of samples of each cycle whose (current, temperature, soc) lies in
/// `hull`; returns the k lowest, ties broken by cycle name.
std::vector<EdgeRanking> select_edge_cycles(const Dataset &data, const HullModel &hull,
                                            std::size_t k);

struct BatteryConfig {
  PlantConfig plant = PlantConfig::defaults();
  EquivCircuitParams am = EquivCircuitParams::defaults();
  double sample_rate_hz = 100.0;
  double target_rate_hz = 20.0;
  double cutoff_hz = 10.0;

  DriveProfile train_profile;
  std::size_t train_cycles = 6;
  /// Training cycles vary soc0 and temperature by up to these amounts.
  double train_soc_spread = 0.1;
  double train_temp_spread = 1.0;
  /// Every n-th training cycle is an excursion with double current scale
  /// (0 disables).
  std::size_t excursion_every = 0;
  std::size_t validation_cycles = 2;

  std::size_t edge_candidates = 5;
  std::size_t edge_count = 5;
  /// Largest shift applied to the edge candidates (reached by the last one).
  double edge_current_scale_c = 0.8;
  double edge_temp_shift_c = 5.0;
  double edge_soc_shift = 0.1;

  std::vector<Eigen::Index> hidden_candidates{3, 5, 8};
  std::size_t grid_subset = 1500;
  TrainOptions lm;
  TrainOptions rtrl;
  /// Cap on series-parallel rows used for the final LM fit (uniform stride).
  std::size_t lm_rows = 20000;

  std::size_t ocsvm_points = 400;
  std::vector<double> nu_grid{0.01, 0.02, 0.05};
  std::vector<double> sigma_grid{0.3, 0.6, 1.0};
  std::size_t probe_count = 1000;
  double bias_offset = 0.0;
  GateConfig gate;
  std::uint64_t seed = 1;

  static BatteryConfig defaults();
  void validate() const;
};

/// One validation cycle after simulation of every variant. Channels:
/// i_a, temp_c, soc, y, y_am, y_ecm, y_ocsvm, y_hull, e_ecm, e_ocsvm, e_hull, f_oc.
struct CycleTrace {
  std::string name;
  TimeSeries series;
};

struct BatteryReport {
  std::vector<ReportRow> rows;
  std::vector<CycleTrace> traces;
  std::vector<EdgeRanking> edges;
  GridSearchResult grid;
  NarxModel narx;
  OcsvmModel ocsvm;
  HullModel hull;
  TuneResult tuning;
  std::string lm_status;
  std::string rtrl_status;
  /// (current, temperature, soc) of the training data, thinned for plotting.
  Matrix train_projection;
};

/// Downsampled cycles with the error channel, as used by the battery study.
struct BatteryData {
  Dataset train;
  Dataset validation;
  /// All graded edge candidates (selection happens later).
  Dataset edge;
  std::vector<double> validation_soc0;
  std::vector<double> edge_soc0;
};

BatteryData generate_battery_data(const BatteryConfig &config);

BatteryReport run_battery_experiment(const BatteryConfig &config);

/// Writes report.csv, edges.csv, grid.csv, train_projection.csv,
/// traces/<cycle>.csv and the trained models.
void write_battery_outputs(const BatteryReport &report, const std::filesystem::path &dir);

// ---------------------------------------------------------------------------
// Plots

/// Writes scatter.svg (training projection and validation cycles, when
/// `train_projection` is non-empty) and trace_<cycle>.svg per trace. Returns the
/// written paths in that order.
std::vector<std::filesystem::path> emit_plots(const std::vector<ReportRow> &report,
                                              const std::vector<CycleTrace> &traces,
                                              const Matrix &train_projection,
                                              const std::filesystem::path &dir);

std::string render_trace_svg(const CycleTrace &trace);
std::string render_scatter_svg(const Matrix &train_projection,
                               const std::vector<CycleTrace> &traces);

} // namespace ecomp
