#pragma once

// Feedforward regression network, NARX wrapper and its two training modes:
// series-parallel Levenberg-Marquardt and parallel (free-run) training with
// forward sensitivities.

#include "ecomp/common.hpp"
#include "ecomp/kernels.hpp"
#include "ecomp/signal.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ecomp {

/// n_in -> n_hidden (tanh) -> 1 (linear) network with min-max input and
/// output scaling.
///
/// Parameter vector order: W1 row-major (hidden x in), b1, w2, b2.
struct MlpModel {
  Eigen::Index n_in = 0;
  Eigen::Index n_hidden = 0;
  Eigen::MatrixXd w1;
  Vector b1;
  Vector w2;
  double b2 = 0.0;
  ScalingInfo input_scaling;
  ScalingInfo output_scaling;

  static MlpModel zeros(Eigen::Index n_in, Eigen::Index n_hidden);
  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpModel random(Eigen::Index n_in, Eigen::Index n_hidden, std::uint64_t seed);

  Eigen::Index param_count() const noexcept { return n_hidden * n_in + 2 * n_hidden + 1; }
  Vector params() const;
  void set_params(const Vector &theta);

  /// Fits input/output scalings to the given data.
  void fit_scaling(const Matrix &x, std::span<const double> y);
  void validate() const;
};

double mlp_forward(const MlpModel &model, std::span<const double> x);

struct MlpGradient {
  double value = 0.0;
  /// d output / d parameters, in parameter-vector order.
  Vector d_params;
  /// d output / d inputs.
  Vector d_inputs;
};

/// Analytic gradient of the (descaled) output.
MlpGradient mlp_jacobian(const MlpModel &model, std::span<const double> x);

/// Evaluates the network on already-scaled inputs. Returns the scaled output;
/// optionally writes d(out)/d(theta) into `jac_row` and d(out)/d(scaled input)
/// into `d_in`.
double mlp_scaled_eval(const MlpModel &model, const double *xs, double *jac_row = nullptr,
                       double *d_in = nullptr);

Vector mlp_forward_batch(const MlpModel &model, const Matrix &x, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// NARX

/// Regressor [i(k), i(k-1), T(k), soc(k), e(k-1)] -> e(k).
struct NarxSpec {
  std::string current = channel::current;
  std::string temperature = channel::temperature;
  std::string soc = channel::soc;
  std::string error = channel::error;

  static constexpr Eigen::Index width = 5;
  static constexpr Eigen::Index feedback_index = 4;
  static constexpr std::size_t output_lag = 1;

  /// Regressor for step k >= 1 with the supplied previous error.
  void fill(const TimeSeries &ts, std::size_t k, double e_prev, double *out) const;
};

struct TrainingMeta {
  std::string method;
  std::size_t epochs = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

struct NarxModel {
  MlpModel net;
  NarxSpec spec;
  /// Free-run saturation bound on |e_hat|.
  double feedback_bound = std::numeric_limits<double>::infinity();
  TrainingMeta meta;
};

struct RegressorSet {
  Matrix x;
  Vector y;
};

/// Series-parallel regressors for steps 1..len-1 (measured e(k-1) fed back).
RegressorSet build_regressors(const TimeSeries &ts, const NarxSpec &spec);
RegressorSet build_regressors(const Dataset &data, const NarxSpec &spec);

/// One-step predictions e_hat(k), k = 1..len-1, from measured e(k-1).
std::vector<double> narx_predict_series_parallel(const MlpModel &model, const NarxSpec &spec,
                                                 const TimeSeries &ts);

using StepFunction = std::function<double(std::span<const double>)>;

struct FreeRun {
  std::vector<double> e;
  /// |e_hat| hit the saturation bound at least once.
  bool diverged = false;
};

/// Parallel (free-run) simulation: e_hat(0) = e0, then e_hat(k) = f(regressor
/// with e_hat(k-1)). Output length equals input length.
FreeRun narx_simulate_parallel(const StepFunction &f, const NarxSpec &spec, const TimeSeries &u,
                               double e0 = 0.0,
                               double bound = std::numeric_limits<double>::infinity());
FreeRun narx_simulate_parallel(const NarxModel &model, const TimeSeries &u, double e0 = 0.0);

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  std::size_t max_epochs = 200;
  double stop_band = 1e-8;
  std::size_t stop_patience = 10;
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  /// Damping escalation limit; exceeding it ends training with the best model.
  double lambda_max = 1e10;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  /// Forward-sensitivity norm above which a free-run epoch is flagged.
  double sensitivity_bound = 1e8;
  Exec exec = Exec::parallel;

  void validate() const;
};

enum class TrainStatus { converged, max_epochs, stalled };
const char *to_string(TrainStatus s);

struct TrainResult {
  MlpModel model;
  /// Training MSE (scaled targets) before the first epoch and after each
  /// accepted epoch of the kept restart.
  std::vector<double> loss_trace;
  std::vector<std::vector<double>> restart_traces;
  std::size_t best_restart = 0;
  TrainStatus status = TrainStatus::max_epochs;
  std::size_t epochs = 0;
  /// Set when free-run training hit the sensitivity or saturation guard.
  bool flagged = false;
};

/// Series-parallel Levenberg-Marquardt on the model's scaled space. Restart 0
/// starts from `init`; further restarts reinitialize with seed + r.
TrainResult train_lm(const MlpModel &init, const Matrix &x, const Vector &y,
                     const TrainOptions &opts);

struct FreeRunGradient {
  /// Sum of squared scaled free-run residuals over all cycles, steps k >= 1.
  double sse = 0.0;
  std::size_t residuals = 0;
  /// d sse / d theta.
  Vector gradient;
  kernels::NormalEquations normal;
  bool exploded = false;
  bool saturated = false;
};

/// Free-run residuals and their forward-sensitivity derivatives,
/// S(k) = df/dtheta + df/de(k-1) * S(k-1), S(0) = 0, reset per cycle.
FreeRunGradient free_run_gradient(const NarxModel &model, const Dataset &cycles,
                                  double sensitivity_bound = 1e8, Exec exec = Exec::parallel);

/// Free-run SSE only (same definition as free_run_gradient).
double free_run_sse(const NarxModel &model, const Dataset &cycles);

/// Damped Gauss-Newton on the free-run loss using forward sensitivities.
/// Starts from `init` (usually series-parallel pretrained).
TrainResult train_rtrl(const NarxModel &init, const Dataset &cycles, const TrainOptions &opts);

struct CandidateScore {
  Eigen::Index hidden = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
  std::string message;
};

struct GridSearchResult {
  Eigen::Index best_hidden = 0;
  std::vector<CandidateScore> scores;
};

/// Trains one series-parallel network per candidate on a space-filling subset
/// of the training regressors and scores its free-run RMSE on `validation`.
/// Ties go to the smaller network; failed candidates are marked invalid.
GridSearchResult grid_search_neurons(const Dataset &train, const Dataset &validation,
                                     std::size_t subset_size,
                                     const std::vector<Eigen::Index> &candidates,
                                     const TrainOptions &opts, const NarxSpec &spec = {});

/// Picks `n` rows spread over the regressor space. Pools larger than
/// `pool_cap` are thinned by a uniform stride first.
std::vector<std::size_t> space_filling_rows(const Matrix &x, std::size_t n,
                                            std::size_t pool_cap = 4000);

} // namespace ecomp
