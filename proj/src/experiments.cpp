#include "ecomp/bench.hpp"
#include "ecomp/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace ecomp {

namespace {

// Independent stream per (base seed, purpose, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint32_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32), tag,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double rmse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::string num(double v) {
  if (std::isnan(v))
    return "nan";
  return fmt::format("{:.10g}", v);
}

Matrix select_rows(const Matrix &x, const std::vector<std::size_t> &rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

Matrix select_cols(const Matrix &x, const std::vector<Eigen::Index> &cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = x.col(cols[c]);
  return out;
}

std::vector<std::size_t> stride_rows(std::size_t rows, std::size_t cap) {
  const std::size_t stride = rows <= cap ? 1 : (rows + cap - 1) / cap;
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < rows; r += stride)
    out.push_back(r);
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Polynomial study

void PolyExperimentConfig::validate() const {
  if (seeds.empty())
    throw Error("config.invalid", "seeds must be non-empty");
  if (!(train_lo >= 0.0 && train_lo < train_hi && train_hi <= 1.0))
    throw Error("config.invalid", "training box must satisfy 0 <= train_lo < train_hi <= 1");
  if (train_points < 3 || test_points < 1 || hidden < 1)
    throw Error("config.invalid", "train_points >= 3, test_points >= 1 and hidden >= 1 required");
  if (nu_grid.empty() || sigma_grid.empty() || probe_count < 1)
    throw Error("config.invalid", "envelope grids and probe count must be non-empty");
  poly.validate();
  train.validate();
  gate.validate();
}

namespace {

PolySeedResult run_poly_seed(const PolyExperimentConfig &cfg, std::uint64_t seed,
                             const TargetFactory &factory) {
  PolySeedResult r;
  r.seed = seed;

  TargetFunction f;
  if (factory) {
    f = factory(seed);
  } else {
    PolySpec spec = cfg.poly;
    spec.seed = derive_seed(seed, 1, 0);
    f = gen_polynomial(spec);
  }

  const auto n = static_cast<Eigen::Index>(cfg.train_points);
  std::mt19937_64 rng(derive_seed(seed, 2, 0));
  std::uniform_real_distribution<double> u(cfg.train_lo, cfg.train_hi);
  Matrix x(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k, 0) = u(rng);
    x(k, 1) = u(rng);
  }
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k)
    y[static_cast<std::size_t>(k)] = f(x(k, 0), x(k, 1));

  // Noise on inputs and outputs.
  for (Eigen::Index c = 0; c < 2; ++c) {
    std::vector<double> tmp(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
      tmp[static_cast<std::size_t>(k)] = x(k, c);
    if (signal_power(tmp) > 0.0)
      add_awgn_inplace(tmp, cfg.snr_db, derive_seed(seed, 3, static_cast<std::uint64_t>(c)));
    for (Eigen::Index k = 0; k < n; ++k)
      x(k, c) = tmp[static_cast<std::size_t>(k)];
  }
  if (signal_power(y) > 0.0)
    add_awgn_inplace(y, cfg.snr_db, derive_seed(seed, 3, 2));

  Vector yv = Eigen::Map<const Vector>(y.data(), n);
  MlpModel net = MlpModel::random(2, cfg.hidden, derive_seed(seed, 4, 0));
  net.fit_scaling(x, y);
  TrainOptions topts = cfg.train;
  topts.seed = derive_seed(seed, 5, 0);
  const auto trained = train_lm(net, x, yv, topts);

  const auto hull = quickhull_2d(x);
  for (Eigen::Index v = 0; v < hull.vertices.rows(); ++v) {
    const auto w = (v + 1) % hull.vertices.rows();
    r.hull_area += 0.5 * (hull.vertices(v, 0) * hull.vertices(w, 1) -
                          hull.vertices(w, 0) * hull.vertices(v, 1));
  }
  TuneOptions tune;
  tune.probe_count = cfg.probe_count;
  tune.seed = derive_seed(seed, 6, 0);
  const auto tuned = tune_ocsvm(x, cfg.nu_grid, cfg.sigma_grid, hull, tune);
  auto ocsvm = train_ocsvm(x, tuned.nu, tuned.sigma, tune.tol);
  ocsvm.bias_offset = cfg.bias_offset;
  r.nu = tuned.nu;
  r.sigma = tuned.sigma;

  const Matrix test = halton_cover(cfg.test_points, derive_seed(seed, 7, 0));
  std::vector<double> truth(cfg.test_points);
  for (Eigen::Index k = 0; k < test.rows(); ++k)
    truth[static_cast<std::size_t>(k)] = f(test(k, 0), test(k, 1));

  const Vector pred = mlp_forward_batch(trained.model, test);
  const auto score = ocsvm_score_batch(ocsvm, test);
  const auto inside = hull_contains_batch(hull, test);
  std::vector<double> p_fnn(cfg.test_points), p_oc(cfg.test_points), p_hull(cfg.test_points);
  for (std::size_t k = 0; k < cfg.test_points; ++k) {
    const double raw = pred(static_cast<Eigen::Index>(k));
    p_fnn[k] = raw;
    p_oc[k] = gate(raw, score[k], cfg.gate);
    p_hull[k] = gate(raw, inside[k] ? 1.0 : -1.0, cfg.gate);
  }
  r.rmse_fnn = rmse(p_fnn, truth);
  r.rmse_ocsvm = rmse(p_oc, truth);
  r.rmse_hull = rmse(p_hull, truth);
  r.ok = std::isfinite(r.rmse_fnn) && std::isfinite(r.rmse_ocsvm) && std::isfinite(r.rmse_hull);
  if (!r.ok)
    r.message = "non-finite rmse";
  return r;
}

} // namespace

PolyReport run_poly_experiment(const PolyExperimentConfig &config, const TargetFactory &target) {
  config.validate();
  PolyReport rep;
  rep.seeds.resize(config.seeds.size());
  const auto count = static_cast<std::ptrdiff_t>(config.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    try {
      rep.seeds[idx] = run_poly_seed(config, config.seeds[idx], target);
    } catch (const Error &e) {
      rep.seeds[idx].seed = config.seeds[idx];
      rep.seeds[idx].ok = false;
      rep.seeds[idx].message = e.code();
    }
  }
  std::size_t ok = 0;
  for (const auto &s : rep.seeds) {
    if (!s.ok) {
      ++rep.failed;
      continue;
    }
    ++ok;
    rep.mean_fnn += s.rmse_fnn;
    rep.mean_ocsvm += s.rmse_ocsvm;
    rep.mean_hull += s.rmse_hull;
  }
  const double denom = ok ? static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
  rep.mean_fnn /= denom;
  rep.mean_ocsvm /= denom;
  rep.mean_hull /= denom;
  return rep;
}

std::string format_poly_csv(const PolyReport &report) {
  std::string out = "seed,fnn,fnn_ocsvm,fnn_hull,nu,sigma,hull_area,status\n";
  for (const auto &s : report.seeds) {
    if (s.ok)
      out += fmt::format("{},{},{},{},{},{},{},ok\n", s.seed, num(s.rmse_fnn), num(s.rmse_ocsvm),
                         num(s.rmse_hull), num(s.nu), num(s.sigma), num(s.hull_area));
    else
      out += fmt::format("{},nan,nan,nan,nan,nan,nan,failed:{}\n", s.seed, s.message);
  }
  out += fmt::format("mean,{},{},{},nan,nan,nan,failed={}\n", num(report.mean_fnn),
                     num(report.mean_ocsvm), num(report.mean_hull), report.failed);
  return out;
}

// ---------------------------------------------------------------------------
// Battery study

std::vector<EdgeRanking> select_edge_cycles(const Dataset &data, const HullModel &hull,
                                            std::size_t k) {
  if (data.cycles.empty())
    throw Error("edge.empty", "dataset has no cycles");
  if (hull.dim != 3)
    throw Error("edge.dimension", "edge selection needs a hull over (current, temperature, soc)");
  std::vector<EdgeRanking> all;
  for (std::size_t c = 0; c < data.cycles.size(); ++c) {
    const auto &ts = data.cycles[c];
    const auto &i = ts[channel::current];
    const auto &t = ts[channel::temperature];
    const auto &s = ts[channel::soc];
    Matrix p(static_cast<Eigen::Index>(i.size()), 3);
    for (std::size_t r = 0; r < i.size(); ++r) {
      p(static_cast<Eigen::Index>(r), 0) = i[r];
      p(static_cast<Eigen::Index>(r), 1) = t[r];
      p(static_cast<Eigen::Index>(r), 2) = s[r];
    }
    const auto inside = hull_contains_batch(hull, p);
    const auto n_in = std::count(inside.begin(), inside.end(), 1);
    const std::string name =
        c < data.cycle_names.size() ? data.cycle_names[c] : fmt::format("cycle_{}", c);
    all.push_back({name, c, static_cast<double>(n_in) / static_cast<double>(inside.size())});
  }
  std::sort(all.begin(), all.end(), [](const EdgeRanking &a, const EdgeRanking &b) {
    if (a.inside_fraction != b.inside_fraction)
      return a.inside_fraction < b.inside_fraction;
    return a.name < b.name;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

BatteryConfig BatteryConfig::defaults() {
  BatteryConfig c;
  c.lm.max_epochs = 60;
  c.lm.restarts = 2;
  c.rtrl.max_epochs = 30;
  c.rtrl.restarts = 1;
  // Mostly discharging, long enough for the slow RC and hysteresis to show.
  c.train_profile.duration_s = 1200.0;
  c.train_profile.current_offset_c = -0.25;
  return c;
}

void BatteryConfig::validate() const {
  plant.validate();
  am.validate();
  train_profile.validate();
  if (train_cycles < 1 || validation_cycles < 1)
    throw Error("config.invalid", "at least one training and one validation cycle required");
  if (edge_count < 1 || edge_candidates < edge_count)
    throw Error("config.invalid", "edge_candidates must be at least edge_count >= 1");
  if (hidden_candidates.empty())
    throw Error("config.invalid", "hidden_candidates must be non-empty");
  if (nu_grid.empty() || sigma_grid.empty() || ocsvm_points < 2 || probe_count < 1)
    throw Error("config.invalid", "envelope settings incomplete");
  if (!(target_rate_hz > 0.0) || !(sample_rate_hz >= target_rate_hz))
    throw Error("config.invalid", "target rate must be positive and not above the sample rate");
  lm.validate();
  rtrl.validate();
  gate.validate();
}

namespace {

struct CycleSource {
  std::string name;
  DriveProfile profile;
  std::uint64_t seed = 0;
};

TimeSeries make_cycle(const BatteryConfig &cfg, const CycleSource &src) {
  const double dt = 1.0 / cfg.sample_rate_hz;
  const auto dc =
      generate_drive_cycle(src.profile, cfg.plant.base.capacity_ah, cfg.sample_rate_hz, src.seed);
  PlantConfig plant = cfg.plant;
  plant.seed = derive_seed(cfg.plant.seed, 20, src.seed);
  const auto measured = simulate_plant(plant, dc.current, dc.temp_c, dc.soc0, dt);
  const auto am = simulate_am(cfg.am, dc.current, dc.temp_c, dc.soc0, dt);
  const auto with_e = compute_error_channel(measured, am.voltage);
  return antialias_downsample(with_e, cfg.cutoff_hz, cfg.target_rate_hz);
}

std::vector<CycleSource> training_sources(const BatteryConfig &cfg) {
  std::vector<CycleSource> out;
  std::mt19937_64 rng(derive_seed(cfg.seed, 10, 0));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t j = 0; j < cfg.train_cycles; ++j) {
    CycleSource s;
    s.name = fmt::format("train_{}", j);
    s.profile = cfg.train_profile;
    s.profile.soc0 = std::clamp(cfg.train_profile.soc0 + cfg.train_soc_spread * u(rng), 0.0, 1.0);
    s.profile.temp_c = cfg.train_profile.temp_c + cfg.train_temp_spread * u(rng);
    if (cfg.excursion_every > 0 && (j + 1) % cfg.excursion_every == 0)
      s.profile.current_scale_c *= 2.0;
    s.seed = derive_seed(cfg.seed, 11, j);
    out.push_back(s);
  }
  return out;
}

std::vector<CycleSource> validation_sources(const BatteryConfig &cfg) {
  std::vector<CycleSource> out;
  std::mt19937_64 rng(derive_seed(cfg.seed, 12, 0));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t j = 0; j < cfg.validation_cycles; ++j) {
    CycleSource s;
    s.name = fmt::format("val_{}", j);
    s.profile = cfg.train_profile;
    s.profile.soc0 =
        std::clamp(cfg.train_profile.soc0 + 0.5 * cfg.train_soc_spread * u(rng), 0.0, 1.0);
    s.profile.temp_c = cfg.train_profile.temp_c + 0.5 * cfg.train_temp_spread * u(rng);
    s.seed = derive_seed(cfg.seed, 13, j);
    out.push_back(s);
  }
  return out;
}

// Graded shifts away from the training distribution; the last candidate gets
// the full shift.
std::vector<CycleSource> edge_sources(const BatteryConfig &cfg) {
  std::vector<CycleSource> out;
  const auto n = cfg.edge_candidates;
  for (std::size_t j = 0; j < n; ++j) {
    const double frac = static_cast<double>(j + 1) / static_cast<double>(n);
    const double t_sign = j % 2 == 0 ? 1.0 : -1.0;
    const double s_sign = (j / 2) % 2 == 0 ? 1.0 : -1.0;
    CycleSource s;
    s.name = fmt::format("edge_{}", j);
    s.profile = cfg.train_profile;
    s.profile.current_scale_c = cfg.train_profile.current_scale_c +
                                (cfg.edge_current_scale_c - cfg.train_profile.current_scale_c) * frac;
    s.profile.temp_c = cfg.train_profile.temp_c + t_sign * cfg.edge_temp_shift_c * frac;
    s.profile.soc0 =
        std::clamp(cfg.train_profile.soc0 + s_sign * cfg.edge_soc_shift * frac, 0.0, 1.0);
    s.seed = derive_seed(cfg.seed, 14, j);
    out.push_back(s);
  }
  return out;
}

Matrix projection_of(const TimeSeries &ts) {
  const auto &i = ts[channel::current];
  const auto &t = ts[channel::temperature];
  const auto &s = ts[channel::soc];
  Matrix p(static_cast<Eigen::Index>(i.size()), 3);
  for (std::size_t r = 0; r < i.size(); ++r) {
    p(static_cast<Eigen::Index>(r), 0) = i[r];
    p(static_cast<Eigen::Index>(r), 1) = t[r];
    p(static_cast<Eigen::Index>(r), 2) = s[r];
  }
  return p;
}

MetricsReport mean_of(const std::vector<MetricsReport> &ms) {
  MetricsReport m;
  m.rmse = m.max_abs_error = m.normalized_max_error = m.inside_fraction = 0.0;
  for (const auto &x : ms) {
    m.rmse += x.rmse;
    m.max_abs_error += x.max_abs_error;
    m.normalized_max_error += x.normalized_max_error;
    m.inside_fraction += x.inside_fraction;
    m.span_degenerate |= x.span_degenerate;
  }
  const double n = static_cast<double>(ms.size());
  m.rmse /= n;
  m.max_abs_error /= n;
  m.normalized_max_error /= n;
  m.inside_fraction /= n;
  return m;
}

} // namespace

BatteryData generate_battery_data(const BatteryConfig &cfg) {
  cfg.validate();
  auto build = [&](const std::vector<CycleSource> &sources, const std::string &name) {
    Dataset d;
    d.name = name;
    std::vector<TimeSeries> cycles(sources.size());
    const auto count = static_cast<std::ptrdiff_t>(sources.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t j = 0; j < count; ++j)
      cycles[static_cast<std::size_t>(j)] = make_cycle(cfg, sources[static_cast<std::size_t>(j)]);
    for (std::size_t j = 0; j < sources.size(); ++j)
      d.add(sources[j].name, std::move(cycles[j]));
    return d;
  };
  const auto val_src = validation_sources(cfg);
  const auto edge_src = edge_sources(cfg);
  BatteryData out;
  out.train = build(training_sources(cfg), "train");
  out.validation = build(val_src, "validation");
  out.edge = build(edge_src, "edge");
  for (const auto &s : val_src)
    out.validation_soc0.push_back(s.profile.soc0);
  for (const auto &s : edge_src)
    out.edge_soc0.push_back(s.profile.soc0);
  return out;
}

BatteryReport run_battery_experiment(const BatteryConfig &cfg) {
  BatteryReport rep;
  const NarxSpec spec;
  const auto data = generate_battery_data(cfg);
  const Dataset &train = data.train;
  const Dataset &val = data.validation;
  const Dataset &edge = data.edge;

  // Network size, series-parallel fit, free-run refinement.
  TrainOptions lm = cfg.lm;
  lm.seed = derive_seed(cfg.seed, 30, 0);
  rep.grid = grid_search_neurons(train, val, cfg.grid_subset, cfg.hidden_candidates, lm, spec);
  if (rep.grid.best_hidden < 1)
    throw Error("battery.grid", "no hidden-layer candidate trained successfully");

  const auto all = build_regressors(train, spec);
  const auto rows = stride_rows(static_cast<std::size_t>(all.x.rows()), cfg.lm_rows);
  const Matrix lx = select_rows(all.x, rows);
  Vector ly(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    ly(static_cast<Eigen::Index>(k)) = all.y(static_cast<Eigen::Index>(rows[k]));
  MlpModel net = MlpModel::random(NarxSpec::width, rep.grid.best_hidden, lm.seed);
  net.fit_scaling(all.x, {all.y.data(), static_cast<std::size_t>(all.y.size())});
  const auto lm_res = train_lm(net, lx, ly, lm);
  rep.lm_status = to_string(lm_res.status);

  NarxModel narx{lm_res.model, spec, 10.0 * all.y.cwiseAbs().maxCoeff(), {}};
  TrainOptions rt = cfg.rtrl;
  rt.seed = derive_seed(cfg.seed, 31, 0);
  const auto rt_res = train_rtrl(narx, train, rt);
  rep.rtrl_status = to_string(rt_res.status);
  narx.net = rt_res.model;
  narx.meta.method = "lm+rtrl";
  narx.meta.epochs = lm_res.epochs + rt_res.epochs;
  narx.meta.final_loss = rt_res.loss_trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                   : rt_res.loss_trace.back();
  narx.meta.seed = cfg.seed;
  rep.narx = narx;

  // Envelopes: 3-D hull on (i, T, soc), OCSVM on the full regressor.
  const std::vector<Eigen::Index> hull_cols{0, 2, 3};
  rep.hull = hull_3d(select_cols(all.x, hull_cols));
  const auto sub = space_filling_rows(all.x, cfg.ocsvm_points);
  const Matrix ox = select_rows(all.x, sub);
  const auto reference = hull_lp(ox);
  TuneOptions tune;
  tune.probe_count = cfg.probe_count;
  tune.seed = derive_seed(cfg.seed, 32, 0);
  rep.tuning = tune_ocsvm(ox, cfg.nu_grid, cfg.sigma_grid, reference, tune);
  rep.ocsvm = train_ocsvm(ox, rep.tuning.nu, rep.tuning.sigma, tune.tol);
  rep.ocsvm.bias_offset = cfg.bias_offset;

  {
    const auto thin = stride_rows(static_cast<std::size_t>(all.x.rows()), 2000);
    rep.train_projection = select_cols(select_rows(all.x, thin), hull_cols);
  }

  rep.edges = select_edge_cycles(edge, rep.hull, cfg.edge_count);

  // Evaluation.
  HybridModel ecm{cfg.am, narx, {}, cfg.gate};
  HybridModel with_oc = ecm;
  with_oc.envelope.ocsvm = rep.ocsvm;
  HybridModel with_hull = ecm;
  with_hull.envelope.hull = rep.hull;
  with_hull.envelope.hull_columns = hull_cols;

  struct EvalCycle {
    std::string name;
    const TimeSeries *ts;
    double soc0;
    bool edge;
  };
  std::vector<EvalCycle> evals;
  for (std::size_t j = 0; j < val.cycles.size(); ++j)
    evals.push_back({val.cycle_names[j], &val.cycles[j], data.validation_soc0[j], false});
  for (const auto &e : rep.edges)
    evals.push_back({e.name, &edge.cycles[e.index], data.edge_soc0[e.index], true});

  const std::array<const char *, 4> variants{"AM", "ECM", "ECM&OCSVM", "ECM&Hull"};
  std::vector<std::array<MetricsReport, 4>> metrics(evals.size());
  rep.traces.resize(evals.size());
  const auto n_eval = static_cast<std::ptrdiff_t>(evals.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n_eval; ++c) {
    const auto &ev = evals[static_cast<std::size_t>(c)];
    const auto &ts = *ev.ts;
    const auto &i = ts[channel::current];
    const auto &t = ts[channel::temperature];
    const auto &y = ts[channel::voltage];
    const double dt = ts.dt();
    const auto a = hybrid_simulate(ecm, i, t, ev.soc0, dt);
    const auto b = hybrid_simulate(with_oc, i, t, ev.soc0, dt);
    const auto h = hybrid_simulate(with_hull, i, t, ev.soc0, dt);
    const Matrix proj = projection_of(ts);
    auto &m = metrics[static_cast<std::size_t>(c)];
    m[0] = evaluate(a.y_am, y, &rep.hull, &proj);
    m[1] = evaluate(a.y, y, &rep.hull, &proj);
    m[2] = evaluate(b.y, y, &rep.hull, &proj);
    m[3] = evaluate(h.y, y, &rep.hull, &proj);

    TimeSeries tr(ts.sample_rate_hz());
    tr.set(channel::current, i);
    tr.set(channel::temperature, t);
    tr.set(channel::soc, ts[channel::soc]);
    tr.set("y", y);
    tr.set("y_am", a.y_am);
    tr.set("y_ecm", a.y);
    tr.set("y_ocsvm", b.y);
    tr.set("y_hull", h.y);
    tr.set("e_ecm", a.e_dd);
    tr.set("e_ocsvm", b.e_dd);
    tr.set("e_hull", h.e_dd);
    auto f = b.f_oc;
    if (!f.empty())
      f[0] = 0.0;
    tr.set("f_oc", std::move(f));
    rep.traces[static_cast<std::size_t>(c)] = {ev.name, std::move(tr)};
  }

  for (std::size_t c = 0; c < evals.size(); ++c)
    for (std::size_t v = 0; v < variants.size(); ++v)
      rep.rows.push_back({variants[v], evals[c].name, metrics[c][v]});
  for (int group = 0; group < 2; ++group) {
    const bool edge_group = group == 1;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      std::vector<MetricsReport> ms;
      for (std::size_t c = 0; c < evals.size(); ++c)
        if (evals[c].edge == edge_group)
          ms.push_back(metrics[c][v]);
      if (!ms.empty())
        rep.rows.push_back({variants[v], edge_group ? "mean_edge" : "mean_val", mean_of(ms)});
    }
  }
  return rep;
}

void write_battery_outputs(const BatteryReport &report, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir / "traces");
  write_report_csv(dir / "report.csv", report.rows);

  std::string edges = "cycle,inside_frac\n";
  for (const auto &e : report.edges)
    edges += fmt::format("{},{}\n", e.name, num(e.inside_fraction));
  std::ofstream(dir / "edges.csv", std::ios::binary) << edges;

  std::string grid = "hidden,rmse,valid\n";
  for (const auto &s : report.grid.scores)
    grid += fmt::format("{},{},{}\n", s.hidden, num(s.rmse), s.valid ? 1 : 0);
  std::ofstream(dir / "grid.csv", std::ios::binary) << grid;

  std::string proj = "i_a,temp_c,soc\n";
  for (Eigen::Index r = 0; r < report.train_projection.rows(); ++r)
    proj += fmt::format("{},{},{}\n", report.train_projection(r, 0), report.train_projection(r, 1),
                        report.train_projection(r, 2));
  std::ofstream(dir / "train_projection.csv", std::ios::binary) << proj;

  for (const auto &t : report.traces)
    write_csv(dir / "traces" / (t.name + ".csv"), t.series);

  io::json tuning = io::json::array();
  for (const auto &c : report.tuning.table)
    tuning.push_back({{"nu", c.nu}, {"sigma", c.sigma}, {"fpr", c.fpr}, {"fnr", c.fnr},
                      {"support_vectors", c.support_vectors}, {"valid", c.valid}});
  io::write_json(dir / "summary.json",
                 {{"hidden", report.narx.net.n_hidden},
                  {"lm_status", report.lm_status},
                  {"rtrl_status", report.rtrl_status},
                  {"epochs", report.narx.meta.epochs},
                  {"nu", report.tuning.nu},
                  {"ocsvm_bias", report.ocsvm.bias},
                  {"support_vectors", report.ocsvm.alphas.size()},
                  {"sigma", report.tuning.sigma},
                  {"tuning", tuning},
                  {"hull_facets", report.hull.offsets.size()}});
  io::write_json(dir / "narx.json", io::to_json(report.narx));
  io::write_json(dir / "ocsvm.json", io::to_json(report.ocsvm));
  io::write_json(dir / "hull.json", io::to_json(report.hull));
}

} // namespace ecomp
