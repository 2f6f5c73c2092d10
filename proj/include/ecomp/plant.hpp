#pragma once

// Equivalent-circuit battery model (R0 + two RC pairs) and a richer synthetic
// plant used as ground truth.
//
// Sign convention: current is positive while charging. State of charge rises
// with positive current; the terminal voltage is
//   v = OCV(soc) - i_dis * R0 - v_c1 - v_c2,   i_dis = -i,
// where each RC voltage is driven by i_dis.

#include "ecomp/common.hpp"
#include "ecomp/signal.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ecomp {

inline constexpr double kKelvinOffset = 273.15;

/// R = R_ref * exp(Ea/k * (1/T - 1/T_ref)). Temperatures in kelvin.
double arrhenius_resistance(double r_ref, double t_ref_k, double ea_over_k, double t_k);

/// Rectilinear table over (soc, temperature [degC], current [A]) with
/// trilinear interpolation. Queries outside the axes clamp to the boundary.
struct Grid3 {
  std::vector<double> soc_axis{0.5};
  std::vector<double> temp_axis{25.0};
  std::vector<double> current_axis{0.0};
  /// Index (s * n_temp + t) * n_current + c.
  std::vector<double> values{0.0};

  static Grid3 constant(double v);

  double lookup(double soc, double temp_c, double current, bool *clamped = nullptr) const;
  void validate(const char *what) const;
};

struct ArrheniusTerm {
  double t_ref_k = 298.15;
  double ea_over_k = 0.0;
};

/// A model parameter as a function of the operating point. With an Arrhenius
/// term the table is read at the reference temperature and scaled analytically.
struct ParameterMap {
  Grid3 table;
  std::optional<ArrheniusTerm> arrhenius;

  static ParameterMap constant(double v, std::optional<ArrheniusTerm> arr = std::nullopt);

  double eval(double soc, double temp_c, double current, bool *clamped = nullptr) const;
};

struct OcvTable {
  std::vector<double> soc;
  std::vector<double> volts;

  void validate() const;
};

double ocv_lookup(const OcvTable &table, double soc);

struct EquivCircuitParams {
  ParameterMap r0;
  ParameterMap r1;
  ParameterMap c1;
  ParameterMap r2;
  ParameterMap c2;
  OcvTable ocv;
  double capacity_ah = 4.0;

  /// Artifact default: 4 Ah cell, R0 20 mOhm, tau1 = 10 s, tau2 = 300 s.
  static EquivCircuitParams defaults();

  /// Positivity of all maps, OCV monotonicity and tau1 < tau2 over the grid knots.
  void validate() const;
};

double ocv_lookup(const EquivCircuitParams &params, double soc);

/// soc(k) = clamp(soc0 + sum_{j<=k} i(j) dt / (3600 C), 0, 1).
std::vector<double> coulomb_count(std::span<const double> current, double dt, double capacity_ah,
                                  double soc0);

/// Step-wise evaluation of the equivalent circuit. The RC states at step k are
/// advanced from step k-1 with the current held over the interval (exact
/// zero-order hold); parameters are read at the operating point of step k-1.
class EquivCircuitStepper {
public:
  EquivCircuitStepper(const EquivCircuitParams &params, double soc0, double dt);

  /// Consumes one input sample and returns the terminal voltage for it.
  double step(double current, double temp_c);

  double soc() const noexcept { return soc_; }
  double vc1() const noexcept { return vc1_; }
  double vc2() const noexcept { return vc2_; }
  bool clamped() const noexcept { return clamped_; }

private:
  const EquivCircuitParams *params_;
  double dt_;
  double soc0_;
  double charge_ = 0.0;
  double soc_;
  double vc1_ = 0.0;
  double vc2_ = 0.0;
  double prev_current_ = 0.0;
  double prev_temp_ = 25.0;
  bool first_ = true;
  bool clamped_ = false;
};

struct AmTrace {
  std::vector<double> voltage;
  std::vector<double> soc;
  std::vector<double> vc1;
  std::vector<double> vc2;
  /// Some operating point fell outside a parameter map and was clamped.
  bool clamped = false;
};

AmTrace simulate_am(const EquivCircuitParams &params, std::span<const double> current,
                    std::span<const double> temp_c, double soc0, double dt);

struct ExtraRc {
  ParameterMap r;
  ParameterMap c;
};

struct PlantConfig {
  EquivCircuitParams base;
  std::optional<ExtraRc> extra_rc;
  /// Hysteresis state relaxes toward +mag while charging and -mag while
  /// discharging with rate `hysteresis_rate` [1/s].
  double hysteresis_mag = 0.0;
  double hysteresis_rate = 0.01;
  double sensor_noise_snr_db = kNoNoise;
  std::uint64_t seed = 0;

  /// Artifact default: base with R0 raised by a quarter, tau3 = 1200 s extra RC,
  /// 15 mV hysteresis, 50 dB voltage sensor noise.
  static PlantConfig defaults();

  void validate() const;
};

/// Ground-truth plant. Returns channels i_a, temp_c, soc, v at rate 1/dt.
TimeSeries simulate_plant(const PlantConfig &config, std::span<const double> current,
                          std::span<const double> temp_c, double soc0, double dt);

} // namespace ecomp
