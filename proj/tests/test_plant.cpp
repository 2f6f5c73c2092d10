#include "doctest.h"
#include "oracles.hpp"

#include "ecomp/plant.hpp"

#include <cmath>

using namespace ecomp;

namespace {

EquivCircuitParams flat_params() {
  EquivCircuitParams p;
  p.r0 = ParameterMap::constant(0.02);
  p.r1 = ParameterMap::constant(0.01);
  p.c1 = ParameterMap::constant(1000.0);
  p.r2 = ParameterMap::constant(0.015);
  p.c2 = ParameterMap::constant(20000.0);
  p.ocv.soc = {0.0, 1.0};
  p.ocv.volts = {3.0, 4.2};
  p.capacity_ah = 4.0;
  return p;
}

// Best single-exponential A (1 - exp(-t / tau)) fit by golden-section search
// over tau with A in closed form.
double fit_time_constant(const std::vector<double> &t, const std::vector<double> &r) {
  auto sse = [&](double tau) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double b = 1.0 - std::exp(-t[k] / tau);
      num += b * r[k];
      den += b * b;
    }
    const double a = num / den;
    double s = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double d = r[k] - a * (1.0 - std::exp(-t[k] / tau));
      s += d * d;
    }
    return s;
  };
  double lo = 1.0, hi = 1e5;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 300; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    (sse(a) < sse(b) ? hi : lo) = (sse(a) < sse(b) ? b : a);
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("arrhenius_resistance") {
  CHECK(arrhenius_resistance(0.02, 298.15, 3000.0, 298.15) == 0.02);
  CHECK(arrhenius_resistance(0.02, 298.15, 0.0, 250.0) == 0.02);
  CHECK(arrhenius_resistance(1.0, 298.15, 1000.0, 278.15) ==
        doctest::Approx(std::exp(1000.0 * (1.0 / 278.15 - 1.0 / 298.15))).epsilon(1e-15));
  CHECK_THROWS_AS(arrhenius_resistance(1.0, 298.15, 1000.0, 0.0), Error);
  CHECK_THROWS_AS(arrhenius_resistance(1.0, -1.0, 1000.0, 280.0), Error);
}

TEST_CASE("ocv_lookup interpolates and rejects out-of-range soc") {
  const auto p = flat_params();
  CHECK(ocv_lookup(p, 0.5) == doctest::Approx(3.6).epsilon(1e-15));
  CHECK(ocv_lookup(p, 1.0) == 4.2);

  const auto d = EquivCircuitParams::defaults();
  CHECK(ocv_lookup(d, 0.3) == d.ocv.volts[3]);
  // 0.37 lies between knots 0.3 and 0.4.
  const double w = (0.37 - 0.3) / (0.4 - 0.3);
  CHECK(ocv_lookup(d, 0.37) == doctest::Approx((1 - w) * d.ocv.volts[3] + w * d.ocv.volts[4]).epsilon(1e-14));
  CHECK_THROWS_AS(ocv_lookup(d, -0.01), Error);
  CHECK_THROWS_AS(ocv_lookup(d, 1.01), Error);
}

TEST_CASE("coulomb_count") {
  const std::vector<double> zero(20, 0.0);
  for (double s : coulomb_count(zero, 1.0, 4.0, 0.3))
    CHECK(s == 0.3);

  const std::vector<double> one_c(3600, 4.0);
  CHECK(coulomb_count(one_c, 1.0, 4.0, 0.0).back() == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> prof{1.0, -2.0, 0.5, 3.0, -1.0, -1.0, 0.0, 2.5, -0.5, 1.0};
  const auto soc = coulomb_count(prof, 0.1, 0.001, 0.5);
  double acc = 0.0;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    acc += prof[k] * 0.1 / 3.6;
    CHECK(std::abs(soc[k] - std::clamp(0.5 + acc, 0.0, 1.0)) < 1e-12);
  }
}

TEST_CASE("simulate_am with zero current returns OCV(soc0) exactly") {
  for (const auto &p : {flat_params(), EquivCircuitParams::defaults()}) {
    const std::vector<double> i(500, 0.0), t(500, 25.0);
    const auto tr = simulate_am(p, i, t, 0.42, 0.01);
    for (double v : tr.voltage)
      CHECK(v == ocv_lookup(p, 0.42));
  }
}

TEST_CASE("single RC step response matches the closed form") {
  auto p = flat_params();
  p.r2 = ParameterMap::constant(0.0);
  const double dt = 0.1, i_dis = 8.0;
  const std::size_t n = 2000;
  const std::vector<double> i(n, -i_dis), t(n, 25.0);
  const auto tr = simulate_am(p, i, t, 0.8, dt);
  const double tau = 0.01 * 1000.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ref = 0.01 * i_dis * (1.0 - std::exp(-static_cast<double>(k) * dt / tau));
    CHECK(std::abs(tr.vc1[k] - ref) < 1e-9);
    CHECK(tr.vc2[k] == 0.0);
  }
}

TEST_CASE("constant discharge soc follows the cumulative sum") {
  const auto p = EquivCircuitParams::defaults();
  const std::vector<double> i(100, -6.0), t(100, 20.0);
  const auto tr = simulate_am(p, i, t, 0.7, 1.0);
  CHECK(tr.soc.back() == doctest::Approx(0.7 - 600.0 / (3600.0 * 4.0)).epsilon(1e-12));
  CHECK(tr.soc == coulomb_count(i, 1.0, 4.0, 0.7));
}

TEST_CASE("ZOH discretization is exact for constant maps") {
  const auto p = flat_params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::vector<double> i, t;
  for (int k = 0; k < 200; ++k) {
    const double v = u(rng);
    for (int r = 0; r < 10; ++r)
      i.push_back(v);
  }
  t.assign(i.size(), 25.0);
  std::vector<double> i2, t2;
  for (double v : i) {
    i2.push_back(v);
    i2.push_back(v);
  }
  t2.assign(i2.size(), 25.0);
  // RC states are linear in the held current, so the half-step run lands on
  // the same state at every even index.
  const auto a = simulate_am(p, i, t, 0.5, 0.2);
  const auto b = simulate_am(p, i2, t2, 0.5, 0.1);
  for (std::size_t k = 0; k < i.size(); ++k) {
    CHECK(std::abs(a.vc1[k] - b.vc1[2 * k]) < 1e-12);
    CHECK(std::abs(a.vc2[k] - b.vc2[2 * k]) < 1e-12);
  }
}

TEST_CASE("RC states stay bounded by max|i| R") {
  const auto p = flat_params();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> i(5000), t(5000, 25.0);
  for (auto &v : i)
    v = u(rng);
  const auto tr = simulate_am(p, i, t, 0.5, 0.5);
  for (std::size_t k = 0; k < i.size(); ++k) {
    CHECK(std::abs(tr.vc1[k]) <= 10.0 * 0.01 + 1e-15);
    CHECK(std::abs(tr.vc2[k]) <= 10.0 * 0.015 + 1e-15);
  }
}

TEST_CASE("voltage is continuous in soc0") {
  const auto p = EquivCircuitParams::defaults();
  const std::vector<double> i(300, -3.0), t(300, 15.0);
  const auto a = simulate_am(p, i, t, 0.5, 0.1);
  const auto b = simulate_am(p, i, t, 0.5 + 1e-9, 0.1);
  for (std::size_t k = 0; k < i.size(); ++k)
    CHECK(std::abs(a.voltage[k] - b.voltage[k]) < 1e-7);
}

TEST_CASE("parameter maps clamp and flag out-of-range queries") {
  auto p = EquivCircuitParams::defaults();
  Grid3 g;
  g.temp_axis = {0.0, 40.0};
  g.values = {0.03, 0.01};
  p.r0 = {g, std::nullopt};
  bool clamped = false;
  CHECK(p.r0.eval(0.5, 20.0, 0.0, &clamped) == doctest::Approx(0.02));
  CHECK_FALSE(clamped);
  CHECK(p.r0.eval(0.5, 60.0, 0.0, &clamped) == 0.01);
  CHECK(clamped);
  const std::vector<double> i(10, -1.0), t(10, -20.0);
  CHECK(simulate_am(p, i, t, 0.5, 1.0).clamped);
}

TEST_CASE("EquivCircuitParams::validate") {
  CHECK_NOTHROW(EquivCircuitParams::defaults().validate());
  auto p = flat_params();
  p.c1 = ParameterMap::constant(1e6);
  CHECK_THROWS_AS(p.validate(), Error);
  p = flat_params();
  p.r0 = ParameterMap::constant(-1.0);
  CHECK_THROWS_AS(p.validate(), Error);
  p = flat_params();
  p.ocv.volts = {4.2, 3.0};
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("degenerate plant equals the analytical model") {
  PlantConfig c;
  c.base = EquivCircuitParams::defaults();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::vector<double> i(1000), t(1000);
  for (std::size_t k = 0; k < i.size(); ++k) {
    i[k] = u(rng);
    t[k] = 20.0 + 0.01 * static_cast<double>(k);
  }
  const auto ts = simulate_plant(c, i, t, 0.6, 0.1);
  const auto am = simulate_am(c.base, i, t, 0.6, 0.1);
  CHECK(ts[channel::voltage] == am.voltage);
  CHECK(ts[channel::soc] == am.soc);
  CHECK(ts.sample_rate_hz() == doctest::Approx(10.0));
}

TEST_CASE("hysteresis gap relaxes to -h under discharge") {
  PlantConfig c;
  c.base = EquivCircuitParams::defaults();
  c.hysteresis_mag = 0.015;
  c.hysteresis_rate = 0.05;
  const std::size_t n = 3000;
  const std::vector<double> i(n, -1.0), t(n, 25.0);
  const auto ts = simulate_plant(c, i, t, 0.9, 1.0);
  const auto am = simulate_am(c.base, i, t, 0.9, 1.0);
  for (std::size_t k : {10u, 100u, 1000u}) {
    const double ref = -0.015 * (1.0 - std::exp(-0.05 * static_cast<double>(k)));
    CHECK(ts[channel::voltage][k] - am.voltage[k] == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(std::abs(ts[channel::voltage][n - 1] - am.voltage[n - 1] + 0.015) < 1e-12);
}

TEST_CASE("extra RC residual is a single exponential with tau3") {
  auto c = PlantConfig::defaults();
  c.hysteresis_mag = 0.0;
  c.sensor_noise_snr_db = kNoNoise;
  const double dt = 1.0;
  const std::size_t n = 6000;
  const std::vector<double> i(n, -2.0), t(n, 25.0);
  const auto ts = simulate_plant(c, i, t, 0.9, dt);
  const auto am = simulate_am(c.base, i, t, 0.9, dt);
  std::vector<double> tt(n), r(n);
  for (std::size_t k = 0; k < n; ++k) {
    tt[k] = static_cast<double>(k) * dt;
    r[k] = am.voltage[k] - ts[channel::voltage][k];
  }
  const double tau3 = c.extra_rc->r.eval(0.5, 25.0, 0.0) * c.extra_rc->c.eval(0.5, 25.0, 0.0);
  CHECK(tau3 > 1000.0);
  CHECK(fit_time_constant(tt, r) == doctest::Approx(tau3).epsilon(1e-4));
}

TEST_CASE("simulate_plant is deterministic given the seed") {
  const auto c = PlantConfig::defaults();
  const std::vector<double> i(400, -3.0), t(400, 25.0);
  const auto a = simulate_plant(c, i, t, 0.5, 0.01);
  const auto b = simulate_plant(c, i, t, 0.5, 0.01);
  CHECK(a[channel::voltage] == b[channel::voltage]);
  auto c2 = c;
  c2.seed = c.seed + 1;
  CHECK(simulate_plant(c2, i, t, 0.5, 0.01)[channel::voltage] != a[channel::voltage]);
  CHECK_THROWS_AS(simulate_plant(c, i, std::vector<double>(3, 25.0), 0.5, 0.01), Error);
}
