#pragma once

// Boundary models of the training-data distribution and the gate that limits
// the error model outside them.

#include "ecomp/common.hpp"
#include "ecomp/signal.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecomp {

/// exp(-|x - y|^2 / (2 sigma^2)).
double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma);

// ---------------------------------------------------------------------------
// One-class SVM

struct OcsvmDual {
  /// Multipliers for every training point (zeros included).
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;
  /// max_{alpha<C}(-G) - min_{alpha>0}(-G) at exit.
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Pairwise (SMO) solver for
///   min 1/2 a^T K a   s.t.  sum a = 1,  0 <= a_i <= 1/(nu l).
/// Working pairs use second-order selection. The bias is the mean gradient over
/// free multipliers.
OcsvmDual solve_ocsvm_dual(const Matrix &gram, double nu, double tol, std::size_t max_iter = 0);

struct OcsvmModel {
  /// Support vectors in scaled coordinates.
  Matrix support_vectors;
  std::vector<double> alphas;
  /// Row index in the training matrix of each support vector.
  std::vector<std::size_t> sv_index;
  double bias = 0.0;
  double sigma = 1.0;
  double nu = 0.5;
  /// Additive widening of the boundary; positive values enlarge the inside region.
  double bias_offset = 0.0;
  ScalingInfo scaling;
  std::size_t training_size = 0;
  double kkt_residual = 0.0;

  std::size_t dimension() const noexcept { return scaling.size(); }
};

/// Trains on min-max scaled copies of X; the scaling is stored in the model.
/// Throws Error("ocsvm.infeasible") when nu * l < 1 and
/// Error("ocsvm.no_convergence") when the iteration cap is hit.
OcsvmModel train_ocsvm(const Matrix &x, double nu, double sigma, double tol = 1e-6,
                       std::size_t max_iter = 0);

/// f(x) = sum a_i K(x, sv_i) - (b - bias_offset), x in raw coordinates.
double ocsvm_score(const OcsvmModel &model, std::span<const double> x);
double ocsvm_score_scaled(const OcsvmModel &model, std::span<const double> xs);
std::vector<double> ocsvm_score_batch(const OcsvmModel &model, const Matrix &x,
                                      Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Convex hull

struct HullModel {
  std::size_t dim = 0;
  /// Indices (into the input matrix) of the hull vertices. Counter-clockwise in 2-D.
  std::vector<std::size_t> vertex_index;
  Matrix vertices;
  /// Facet half-spaces n . x <= c with unit outward normals (d <= 3).
  Matrix normals;
  std::vector<double> offsets;
  /// Point set for LP membership (d > 3).
  Matrix points;

  bool uses_lp() const noexcept { return normals.rows() == 0; }
};

HullModel quickhull_2d(const Matrix &points);
HullModel hull_3d(const Matrix &points);
/// Hull described by its point set only; membership is decided by LP.
HullModel hull_lp(const Matrix &points);
/// quickhull_2d / hull_3d for d = 2 / 3, LP form otherwise.
HullModel build_hull(const Matrix &points);

/// Facet test for facet hulls, LP feasibility otherwise. Boundary counts as inside.
bool hull_contains(const HullModel &hull, std::span<const double> x, double tol = 1e-9);
std::vector<char> hull_contains_batch(const HullModel &hull, const Matrix &x, double tol = 1e-9,
                                      Exec exec = Exec::parallel);

/// Feasibility of sum l_i p_i = x, sum l_i = 1, l >= 0 (phase-1 simplex,
/// Bland's rule). Coordinates are normalized by the point-set extent.
bool lp_contains(const Matrix &points, std::span<const double> x, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Hyperparameter tuning against the hull

struct ConfusionCell {
  double nu = 0.0;
  double sigma = 0.0;
  /// Probes outside the hull but accepted, as a fraction of all probes.
  double fpr = 0.0;
  /// Probes inside the hull but rejected, as a fraction of all probes.
  double fnr = 0.0;
  std::size_t support_vectors = 0;
  bool valid = false;
};

struct TuneOptions {
  std::size_t probe_count = 2000;
  std::uint64_t seed = 0;
  /// Probe box = bounding box widened by this fraction of its span per side.
  double probe_margin = 0.5;
  double tol = 1e-6;
};

struct TuneResult {
  double nu = 0.0;
  double sigma = 0.0;
  std::vector<ConfusionCell> table;
  std::size_t probes_inside = 0;
  std::size_t probes_outside = 0;
};

/// Picks the (nu, sigma) cell minimizing FPR + FNR; ties go to smaller sigma,
/// then larger nu.
TuneResult tune_ocsvm(const Matrix &x, const std::vector<double> &nu_grid,
                      const std::vector<double> &sigma_grid, const HullModel &reference,
                      const TuneOptions &opts = {});

/// Same selection on precomputed probe labels and classifier decisions.
/// `accepted[c][p]` is the decision of cell c on probe p.
std::size_t select_confusion_cell(std::vector<ConfusionCell> &cells,
                                  const std::vector<char> &inside_hull,
                                  const std::vector<std::vector<char>> &accepted);

// ---------------------------------------------------------------------------
// Gating

enum class GateVariant { corrected_sigmoid, literal_sigmoid, hard };

struct GateConfig {
  double gamma = 2.0;
  GateVariant variant = GateVariant::corrected_sigmoid;

  void validate() const;
};

GateVariant parse_gate_variant(std::string_view name);
std::string_view to_string(GateVariant v);

/// Multiplier applied to the error-model output for boundary score f_oc.
///   f_oc > 0: 1 for every variant.
///   corrected_sigmoid: 2 / (1 + exp(-gamma f_oc)),
///   literal_sigmoid:   1 / (1 + exp(gamma f_oc)),
///   hard:              0.
double gate_multiplier(double f_oc, const GateConfig &config);
double gate(double raw, double f_oc, const GateConfig &config);

} // namespace ecomp
