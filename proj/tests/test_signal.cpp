#include "doctest.h"
#include "oracles.hpp"

#include "ecomp/signal.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

using namespace ecomp;

namespace {

void write_text(const std::filesystem::path &p, const std::string &s) {
  std::ofstream(p) << s;
}

TimeSeries sine_series(double f, double fs, std::size_t n, double amp = 1.0, double offset = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = offset + amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(k) / fs);
  TimeSeries ts(fs);
  ts.set("x", x);
  return ts;
}

} // namespace

TEST_CASE("load_csv parses a three row file") {
  oracle::TempDir dir("csv");
  const auto p = dir.path / "a.csv";
  write_text(p, "t,i_a,temp_c,soc,v\n0,1,25,0.5,3.7\n0.01,2,25,0.5,3.6\n0.02,-1,26,0.49,3.8\n");
  const auto ts = load_csv(p, {}, 100.0);
  CHECK(ts.length() == 3);
  CHECK(ts.sample_rate_hz() == 100.0);
  CHECK(ts[channel::current] == std::vector<double>{1, 2, -1});
  CHECK(ts[channel::soc][2] == doctest::Approx(0.49));
  CHECK_FALSE(ts.has(channel::error));
}

TEST_CASE("load_csv reports schema and parse errors with location") {
  oracle::TempDir dir("csv");
  const auto missing = dir.path / "m.csv";
  write_text(missing, "t,i_a,temp_c,v\n0,1,25,3.7\n");
  try {
    load_csv(missing, {}, 100.0);
    FAIL("expected schema error");
  } catch (const Error &e) {
    CHECK(e.code() == "csv.schema");
    CHECK(std::string(e.what()).find("soc") != std::string::npos);
  }

  const auto nan = dir.path / "n.csv";
  write_text(nan, "t,i_a,temp_c,soc,v\n0,1,25,0.5,3.7\n0.01,NaN,25,0.5,3.7\n");
  try {
    load_csv(nan, {}, 100.0);
    FAIL("expected parse error");
  } catch (const Error &e) {
    CHECK(e.code() == "csv.parse");
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  const auto empty = dir.path / "e.csv";
  write_text(empty, "");
  CHECK_THROWS_AS(load_csv(empty, {}, 100.0), Error);
}

TEST_CASE("write_csv then load_csv round-trips exactly") {
  oracle::TempDir dir("csv");
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  TimeSeries ts(100.0);
  std::vector<double> i(50), t(50), s(50), v(50), e(50);
  for (std::size_t k = 0; k < 50; ++k) {
    i[k] = n(rng);
    t[k] = 25 + n(rng);
    s[k] = 0.5 + 0.01 * n(rng);
    v[k] = 3.7 + 0.1 * n(rng);
    e[k] = 1e-3 * n(rng);
  }
  ts.set(channel::current, i);
  ts.set(channel::temperature, t);
  ts.set(channel::soc, s);
  ts.set(channel::voltage, v);
  ts.set(channel::error, e);
  write_csv(dir.path / "r.csv", ts);
  const auto back = load_csv(dir.path / "r.csv", {}, 100.0);
  for (const auto &c : ts.channels())
    CHECK(back[c.name] == c.values);
}

TEST_CASE("TimeSeries rejects broken invariants") {
  TimeSeries ts(10.0);
  ts.set("a", {1.0, 2.0});
  CHECK_THROWS_AS(ts.set("b", {1.0}), Error);
  ts.set(channel::soc, {0.5, 1.5});
  CHECK_THROWS_AS(ts.validate(), Error);
  ts.set(channel::soc, {0.5, NAN});
  CHECK_THROWS_AS(ts.validate(), Error);
  ts.set(channel::soc, {0.5, 0.6});
  CHECK_NOTHROW(ts.validate());
}

TEST_CASE("antialias_downsample passes DC and has the expected length") {
  const auto ts = sine_series(1.0, 100.0, 1000, 0.0, 3.25);
  const auto out = antialias_downsample(ts);
  CHECK(out.sample_rate_hz() == 20.0);
  CHECK(std::abs(static_cast<long>(out.length()) - 200) <= 1);
  for (double v : out["x"])
    CHECK(std::abs(v - 3.25) < 1e-9);
}

TEST_CASE("antialias_downsample attenuates a 15 Hz tone by 40 dB") {
  const double fs = 100.0;
  const auto ts = sine_series(15.0, fs, 8000);
  const auto out = antialias_downsample(ts, 10.0, 20.0);
  // 15 Hz folds to 5 Hz at 20 Hz. Skip the edges where replication leaks.
  const auto &y = out["x"];
  std::vector<double> mid(y.begin() + 200, y.begin() + 200 + 1200);
  const double a_in = oracle::tone_amplitude(ts["x"], 15.0, fs);
  const double a_out = oracle::tone_amplitude(mid, 5.0, 20.0);
  const double att_db = 20.0 * std::log10(a_in / a_out);
  CHECK(att_db >= 40.0);
}

TEST_CASE("antialias_downsample keeps a passband tone") {
  const auto ts = sine_series(2.0, 100.0, 8000);
  const auto out = antialias_downsample(ts);
  const auto &y = out["x"];
  std::vector<double> mid(y.begin() + 200, y.begin() + 1400);
  CHECK(oracle::tone_amplitude(mid, 2.0, 20.0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("antialias_downsample preserves the mean of long signals") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(4.0, 1.0);
  std::vector<double> x(20000);
  for (auto &v : x)
    v = n(rng);
  TimeSeries ts(100.0);
  ts.set("x", x);
  const auto out = antialias_downsample(ts);
  const double mi = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const auto &y = out["x"];
  const double mo = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  // Decimation keeps one sample in five, so allow its sampling variance.
  CHECK(std::abs(mo - mi) < 0.05);
  const auto flat = antialias_downsample(sine_series(1.0, 100.0, 20000, 0.0, -2.0));
  const auto &f = flat["x"];
  const double mf = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
  CHECK(std::abs(mf + 2.0) < 1e-6 * 3.0);
}

TEST_CASE("antialias_downsample rejects rate violations") {
  const auto ts = sine_series(1.0, 30.0, 100);
  CHECK_THROWS_AS(antialias_downsample(ts, 10.0, 20.0), Error);
  CHECK_THROWS_AS(antialias_downsample(sine_series(1.0, 100.0, 100), 15.0, 20.0), Error);
  CHECK_THROWS_AS(antialias_downsample(sine_series(1.0, 110.0, 100), 10.0, 20.0), Error);
}

TEST_CASE("design_lowpass has unit DC gain and odd symmetric taps") {
  const auto taps = design_lowpass(10.0, 100.0, 5.0);
  CHECK(taps.size() % 2 == 1);
  CHECK(std::accumulate(taps.begin(), taps.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 0; j < taps.size(); ++j)
    CHECK(taps[j] == doctest::Approx(taps[taps.size() - 1 - j]).epsilon(1e-14));
}

TEST_CASE("add_awgn hits 40 dB on a long sine") {
  const auto ts = sine_series(1.0, 1000.0, 1000000);
  const auto noisy = add_awgn(ts, 40.0, {"x"}, 5);
  const auto &x = ts["x"];
  const auto &y = noisy["x"];
  double ps = 0.0, pn = 0.0, mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    ps += (x[k] - mean) * (x[k] - mean);
    pn += (y[k] - x[k]) * (y[k] - x[k]);
  }
  const double snr = 10.0 * std::log10(ps / pn);
  CHECK(std::abs(snr - 40.0) <= 0.2);
}

TEST_CASE("add_awgn seeds, infinite SNR and zero power") {
  const auto ts = sine_series(1.0, 100.0, 500);
  CHECK(add_awgn(ts, kNoNoise, {"x"}, 1)["x"] == ts["x"]);
  CHECK(add_awgn(ts, 30.0, {"x"}, 1)["x"] == add_awgn(ts, 30.0, {"x"}, 1)["x"]);
  CHECK(add_awgn(ts, 30.0, {"x"}, 1)["x"] != add_awgn(ts, 30.0, {"x"}, 2)["x"]);
  TimeSeries z(100.0);
  z.set("z", std::vector<double>(100, 0.0));
  try {
    add_awgn(z, 40.0, {"z"}, 1);
    FAIL("expected zero power error");
  } catch (const Error &e) {
    CHECK(e.code() == "noise.zero_power");
  }
}

TEST_CASE("normalize maps columns onto [-1, 1] and flags constants") {
  Matrix m(3, 2);
  m << 0, 3, 5, 3, 10, 3;
  const auto n = normalize(m);
  CHECK(n.data(0, 0) == -1.0);
  CHECK(n.data(1, 0) == 0.0);
  CHECK(n.data(2, 0) == 1.0);
  CHECK(n.data.col(1) == m.col(1));
  CHECK(n.scaling.degenerate[1]);
  CHECK_FALSE(n.scaling.degenerate[0]);
  CHECK(n.scaling.any_degenerate());
}

TEST_CASE("denormalize inverts normalize") {
  std::mt19937_64 rng(7);
  const auto m = oracle::uniform_matrix(40, 5, rng, -30.0, 70.0);
  const auto n = normalize(m);
  CHECK((denormalize(n.data, n.scaling) - m).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((apply_scaling(m, n.scaling) - n.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("space_filling_subset small cases") {
  Matrix line(3, 1);
  line << 0.0, 0.1, 1.0;
  auto s = space_filling_subset(line, 2);
  std::sort(s.begin(), s.end());
  CHECK(s == std::vector<std::size_t>{0, 2});
  const auto brute = oracle::maximin_subsets(line, 2);
  REQUIRE(brute.size() == 1);
  CHECK(brute[0] == s);

  Matrix sq(5, 2);
  sq << 0, 0, 1, 0, 0, 1, 1, 1, 0.5, 0.5;
  auto t = space_filling_subset(sq, 3);
  CHECK(std::find(t.begin(), t.end(), 4u) == t.end());
  std::sort(t.begin(), t.end());
  const auto best = oracle::maximin_subsets(sq, 3);
  CHECK(std::find(best.begin(), best.end(), t) != best.end());

  auto all = space_filling_subset(sq, 5);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});

  CHECK_THROWS_AS(space_filling_subset(sq, 1), Error);
  CHECK_THROWS_AS(space_filling_subset(sq, 6), Error);
}

TEST_CASE("space_filling_subset is permutation invariant and matches greedy brute force") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = oracle::uniform_matrix(12, 3, rng);
    const auto sel = space_filling_subset(p, 5);

    // Greedy maximin recomputed from scratch in normalized space.
    const auto norm = normalize(p).data;
    std::size_t a = 0, b = 1;
    double far = -1.0;
    for (Eigen::Index i = 0; i < norm.rows(); ++i)
      for (Eigen::Index j = i + 1; j < norm.rows(); ++j)
        if (oracle::sqdist(norm, i, j) > far) {
          far = oracle::sqdist(norm, i, j);
          a = static_cast<std::size_t>(i);
          b = static_cast<std::size_t>(j);
        }
    std::vector<std::size_t> ref{a, b};
    while (ref.size() < 5) {
      std::size_t pick = 0;
      double best = -1.0;
      for (Eigen::Index i = 0; i < norm.rows(); ++i) {
        double m = INFINITY;
        for (auto r : ref)
          m = std::min(m, oracle::sqdist(norm, i, static_cast<Eigen::Index>(r)));
        if (m > best) {
          best = m;
          pick = static_cast<std::size_t>(i);
        }
      }
      ref.push_back(pick);
    }
    CHECK(sel == ref);

    std::vector<Eigen::Index> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix q(12, 3);
    for (Eigen::Index r = 0; r < 12; ++r)
      q.row(r) = p.row(perm[static_cast<std::size_t>(r)]);
    const auto sel_q = space_filling_subset(q, 5);
    std::set<Eigen::Index> orig(sel.begin(), sel.end()), mapped;
    for (auto i : sel_q)
      mapped.insert(perm[i]);
    std::set<Eigen::Index> o2;
    for (auto i : orig)
      o2.insert(i);
    CHECK(mapped == o2);
  }
}

TEST_CASE("space_filling_subset serial and parallel agree") {
  std::mt19937_64 rng(4);
  const auto p = oracle::uniform_matrix(3000, 4, rng);
  CHECK(space_filling_subset(p, 40, 0, Exec::serial) == space_filling_subset(p, 40, 0, Exec::parallel));
}
