#include "ecomp/plant.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ecomp {

double arrhenius_resistance(double r_ref, double t_ref_k, double ea_over_k, double t_k) {
  if (!(t_k > 0.0) || !(t_ref_k > 0.0))
    throw Error("plant.temperature",
                fmt::format("absolute temperatures must be positive (T={}, T_ref={})", t_k, t_ref_k));
  return r_ref * std::exp(ea_over_k * (1.0 / t_k - 1.0 / t_ref_k));
}

// ---------------------------------------------------------------------------
// Grid3

namespace {

/// Bracketing index and weight of `v` on `axis`, clamped to the axis range.
struct Bracket {
  std::size_t i0;
  std::size_t i1;
  double w;
};

Bracket bracket(const std::vector<double> &axis, double v, bool &clamped) {
  if (axis.size() == 1)
    return {0, 0, 0.0};
  if (v <= axis.front()) {
    clamped |= v < axis.front();
    return {0, 0, 0.0};
  }
  if (v >= axis.back()) {
    clamped |= v > axis.back();
    return {axis.size() - 1, axis.size() - 1, 0.0};
  }
  const auto it = std::upper_bound(axis.begin(), axis.end(), v);
  const auto i1 = static_cast<std::size_t>(it - axis.begin());
  const auto i0 = i1 - 1;
  return {i0, i1, (v - axis[i0]) / (axis[i1] - axis[i0])};
}

void check_axis(const std::vector<double> &axis, const char *what, const char *axis_name) {
  if (axis.empty())
    throw Error("plant.params", fmt::format("{}: empty {} axis", what, axis_name));
  for (std::size_t k = 1; k < axis.size(); ++k)
    if (!(axis[k] > axis[k - 1]))
      throw Error("plant.params", fmt::format("{}: {} axis not strictly increasing", what, axis_name));
}

} // namespace

Grid3 Grid3::constant(double v) {
  Grid3 g;
  g.values = {v};
  return g;
}

double Grid3::lookup(double soc, double temp_c, double current, bool *clamped) const {
  bool clip = false;
  const auto bs = bracket(soc_axis, soc, clip);
  const auto bt = bracket(temp_axis, temp_c, clip);
  const auto bc = bracket(current_axis, current, clip);
  if (clamped)
    *clamped |= clip;

  const std::size_t nt = temp_axis.size();
  const std::size_t nc = current_axis.size();
  auto at = [&](std::size_t s, std::size_t t, std::size_t c) { return values[(s * nt + t) * nc + c]; };

  double acc = 0.0;
  for (int ds = 0; ds < 2; ++ds) {
    const double ws = ds ? bs.w : 1.0 - bs.w;
    if (ws == 0.0)
      continue;
    const std::size_t s = ds ? bs.i1 : bs.i0;
    for (int dt = 0; dt < 2; ++dt) {
      const double wt = dt ? bt.w : 1.0 - bt.w;
      if (wt == 0.0)
        continue;
      const std::size_t t = dt ? bt.i1 : bt.i0;
      for (int dc = 0; dc < 2; ++dc) {
        const double wc = dc ? bc.w : 1.0 - bc.w;
        if (wc == 0.0)
          continue;
        const std::size_t c = dc ? bc.i1 : bc.i0;
        acc += ws * wt * wc * at(s, t, c);
      }
    }
  }
  return acc;
}

void Grid3::validate(const char *what) const {
  check_axis(soc_axis, what, "soc");
  check_axis(temp_axis, what, "temperature");
  check_axis(current_axis, what, "current");
  if (values.size() != soc_axis.size() * temp_axis.size() * current_axis.size())
    throw Error("plant.params", fmt::format("{}: table size does not match axes", what));
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error("plant.params", fmt::format("{}: values must be finite and positive", what));
}

ParameterMap ParameterMap::constant(double v, std::optional<ArrheniusTerm> arr) {
  return {Grid3::constant(v), arr};
}

double ParameterMap::eval(double soc, double temp_c, double current, bool *clamped) const {
  if (!arrhenius)
    return table.lookup(soc, temp_c, current, clamped);
  const double ref_c = arrhenius->t_ref_k - kKelvinOffset;
  const double r_ref = table.lookup(soc, ref_c, current, clamped);
  return arrhenius_resistance(r_ref, arrhenius->t_ref_k, arrhenius->ea_over_k,
                              temp_c + kKelvinOffset);
}

// ---------------------------------------------------------------------------
// OCV

void OcvTable::validate() const {
  if (soc.size() < 2 || soc.size() != volts.size())
    throw Error("plant.ocv", "OCV table needs at least two (soc, voltage) pairs");
  for (std::size_t k = 0; k < soc.size(); ++k) {
    if (soc[k] < 0.0 || soc[k] > 1.0)
      throw Error("plant.ocv", "OCV soc keys must lie in [0, 1]");
    if (k > 0 && !(soc[k] > soc[k - 1]))
      throw Error("plant.ocv", "OCV soc keys must be strictly increasing");
    if (k > 0 && volts[k] < volts[k - 1])
      throw Error("plant.ocv", "OCV voltages must be non-decreasing");
  }
}

double ocv_lookup(const OcvTable &table, double soc) {
  if (!(soc >= 0.0 && soc <= 1.0))
    throw Error("plant.soc", fmt::format("soc {} outside [0, 1]", soc));
  const auto &x = table.soc;
  const auto &y = table.volts;
  if (soc <= x.front())
    return y.front();
  if (soc >= x.back())
    return y.back();
  const auto i1 = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), soc) - x.begin());
  const auto i0 = i1 - 1;
  if (soc == x[i0])
    return y[i0];
  const double w = (soc - x[i0]) / (x[i1] - x[i0]);
  return y[i0] + w * (y[i1] - y[i0]);
}

double ocv_lookup(const EquivCircuitParams &params, double soc) { return ocv_lookup(params.ocv, soc); }

// ---------------------------------------------------------------------------

EquivCircuitParams EquivCircuitParams::defaults() {
  EquivCircuitParams p;
  const ArrheniusTerm warm{298.15, 2500.0};
  const ArrheniusTerm diffusion{298.15, 2000.0};

  // Resistances rise toward empty; values at 25 degC.
  Grid3 r0;
  r0.soc_axis = {0.0, 0.2, 0.5, 0.8, 1.0};
  r0.values = {0.026, 0.022, 0.020, 0.020, 0.021};
  p.r0 = {r0, warm};

  Grid3 r1 = r0;
  r1.values = {0.013, 0.011, 0.010, 0.010, 0.0105};
  p.r1 = {r1, warm};
  p.c1 = ParameterMap::constant(1000.0);

  Grid3 r2 = r0;
  r2.values = {0.0195, 0.0165, 0.015, 0.015, 0.0158};
  p.r2 = {r2, diffusion};
  p.c2 = ParameterMap::constant(20000.0);

  p.ocv.soc = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  p.ocv.volts = {3.00, 3.45, 3.55, 3.62, 3.68, 3.75, 3.83, 3.92, 4.00, 4.08, 4.18};
  p.capacity_ah = 4.0;
  return p;
}

void EquivCircuitParams::validate() const {
  r0.table.validate("r0");
  r1.table.validate("r1");
  c1.table.validate("c1");
  r2.table.validate("r2");
  c2.table.validate("c2");
  ocv.validate();
  if (!(capacity_ah > 0.0))
    throw Error("plant.params", "capacity must be positive");

  // tau1 < tau2 on the union of knots, at a cold, reference and warm temperature.
  std::vector<double> socs, currents, temps{-20.0, 25.0, 50.0};
  for (const auto *m : {&r1, &c1, &r2, &c2}) {
    socs.insert(socs.end(), m->table.soc_axis.begin(), m->table.soc_axis.end());
    currents.insert(currents.end(), m->table.current_axis.begin(), m->table.current_axis.end());
    temps.insert(temps.end(), m->table.temp_axis.begin(), m->table.temp_axis.end());
  }
  for (double s : socs)
    for (double t : temps)
      for (double i : currents) {
        const double tau1 = r1.eval(s, t, i) * c1.eval(s, t, i);
        const double tau2 = r2.eval(s, t, i) * c2.eval(s, t, i);
        if (!(tau1 < tau2))
          throw Error("plant.params",
                      fmt::format("tau1 = {} s must be below tau2 = {} s (soc {}, T {}, i {})", tau1,
                                  tau2, s, t, i));
      }
}

std::vector<double> coulomb_count(std::span<const double> current, double dt, double capacity_ah,
                                  double soc0) {
  if (!(dt > 0.0) || !(capacity_ah > 0.0))
    throw Error("plant.precondition", "dt and capacity must be positive");
  std::vector<double> soc(current.size());
  const double per_amp = dt / (3600.0 * capacity_ah);
  double charge = 0.0;
  for (std::size_t k = 0; k < current.size(); ++k) {
    charge += current[k] * per_amp;
    soc[k] = std::clamp(soc0 + charge, 0.0, 1.0);
  }
  return soc;
}

// ---------------------------------------------------------------------------

EquivCircuitStepper::EquivCircuitStepper(const EquivCircuitParams &params, double soc0, double dt)
    : params_(&params), dt_(dt), soc0_(soc0), soc_(soc0) {
  if (!(dt > 0.0))
    throw Error("plant.precondition", "dt must be positive");
  if (!(soc0 >= 0.0 && soc0 <= 1.0))
    throw Error("plant.soc", fmt::format("initial soc {} outside [0, 1]", soc0));
}

double EquivCircuitStepper::step(double current, double temp_c) {
  const auto &p = *params_;
  if (!first_) {
    const double s = soc_;
    const double i_prev = prev_current_;
    const double t_prev = prev_temp_;
    const double r1 = p.r1.eval(s, t_prev, i_prev, &clamped_);
    const double r2 = p.r2.eval(s, t_prev, i_prev, &clamped_);
    const double a1 = std::exp(-dt_ / (r1 * p.c1.eval(s, t_prev, i_prev, &clamped_)));
    const double a2 = std::exp(-dt_ / (r2 * p.c2.eval(s, t_prev, i_prev, &clamped_)));
    const double i_dis = -i_prev;
    vc1_ = vc1_ * a1 + r1 * i_dis * (1.0 - a1);
    vc2_ = vc2_ * a2 + r2 * i_dis * (1.0 - a2);
  }
  first_ = false;
  charge_ += current * dt_ / (3600.0 * p.capacity_ah);
  soc_ = std::clamp(soc0_ + charge_, 0.0, 1.0);
  prev_current_ = current;
  prev_temp_ = temp_c;

  const double r0 = p.r0.eval(soc_, temp_c, current, &clamped_);
  return ocv_lookup(p.ocv, soc_) + current * r0 - vc1_ - vc2_;
}

AmTrace simulate_am(const EquivCircuitParams &params, std::span<const double> current,
                    std::span<const double> temp_c, double soc0, double dt) {
  if (current.size() != temp_c.size())
    throw Error("plant.precondition", "current and temperature lengths differ");
  EquivCircuitStepper am(params, soc0, dt);
  AmTrace tr;
  const auto n = current.size();
  tr.voltage.resize(n);
  tr.soc.resize(n);
  tr.vc1.resize(n);
  tr.vc2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    tr.voltage[k] = am.step(current[k], temp_c[k]);
    tr.soc[k] = am.soc();
    tr.vc1[k] = am.vc1();
    tr.vc2[k] = am.vc2();
  }
  tr.clamped = am.clamped();
  return tr;
}

// ---------------------------------------------------------------------------

PlantConfig PlantConfig::defaults() {
  PlantConfig c;
  c.base = EquivCircuitParams::defaults();
  for (auto &v : c.base.r0.table.values)
    v *= 1.25;
  c.extra_rc = ExtraRc{ParameterMap::constant(0.020, ArrheniusTerm{298.15, 3000.0}),
                       ParameterMap::constant(60000.0)};
  c.hysteresis_mag = 0.015;
  c.hysteresis_rate = 0.01;
  c.sensor_noise_snr_db = 50.0;
  c.seed = 1;
  return c;
}

void PlantConfig::validate() const {
  base.validate();
  if (!(hysteresis_mag >= 0.0))
    throw Error("plant.params", "hysteresis magnitude must be non-negative");
  if (!(hysteresis_rate > 0.0))
    throw Error("plant.params", "hysteresis rate must be positive");
  if (extra_rc) {
    extra_rc->r.table.validate("extra_rc.r");
    extra_rc->c.table.validate("extra_rc.c");
  }
}

TimeSeries simulate_plant(const PlantConfig &config, std::span<const double> current,
                          std::span<const double> temp_c, double soc0, double dt) {
  auto am = simulate_am(config.base, current, temp_c, soc0, dt);
  const auto n = current.size();
  std::vector<double> v = std::move(am.voltage);

  if (config.extra_rc) {
    double v3 = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const double s = am.soc[k - 1];
      const double r = config.extra_rc->r.eval(s, temp_c[k - 1], current[k - 1]);
      const double a = std::exp(-dt / (r * config.extra_rc->c.eval(s, temp_c[k - 1], current[k - 1])));
      v3 = v3 * a + r * (-current[k - 1]) * (1.0 - a);
      v[k] -= v3;
    }
  }

  if (config.hysteresis_mag > 0.0) {
    const double b = std::exp(-config.hysteresis_rate * dt);
    double h = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const double i = current[k - 1];
      const double target = i > 0.0 ? config.hysteresis_mag : i < 0.0 ? -config.hysteresis_mag : h;
      h = h * b + target * (1.0 - b);
      v[k] += h;
    }
  }

  add_awgn_inplace(v, config.sensor_noise_snr_db, config.seed);

  TimeSeries ts(1.0 / dt);
  ts.set(channel::current, {current.begin(), current.end()});
  ts.set(channel::temperature, {temp_c.begin(), temp_c.end()});
  ts.set(channel::soc, std::move(am.soc));
  ts.set(channel::voltage, std::move(v));
  return ts;
}

} // namespace ecomp
