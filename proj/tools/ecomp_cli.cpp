// Command-line front end for data generation, training, simulation and the
// two experiment studies.

#include "ecomp/bench.hpp"
#include "ecomp/serialize.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ecomp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::string gate;
};

void add_common(CLI::App *app, Common &c, bool out_required = true) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "Random seed");
  auto *o = app->add_option("--out", c.out, "Output path");
  if (out_required)
    o->required();
  app->add_option("--variant", c.variant, "Model variant");
  app->add_option("--gate", c.gate, "Gate: hard, sigmoid or literal");
}

io::json load_config(const Common &c) {
  if (c.config.empty())
    return io::json::object();
  return io::read_json(c.config);
}

void apply_gate(const Common &c, GateConfig &g) {
  if (!c.gate.empty())
    g.variant = parse_gate_variant(c.gate);
}

void write_text(const fs::path &path, const std::string &text) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("io.open", fmt::format("{}: cannot open for writing", path.string()));
  out << text;
}

Dataset load_dir(const fs::path &dir, double rate, const CsvSchema &schema) {
  if (!fs::is_directory(dir))
    throw Error("io.open", fmt::format("{}: not a directory", dir.string()));
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw Error("io.empty", fmt::format("{}: no CSV files", dir.string()));
  Dataset d;
  d.name = dir.filename().string();
  for (const auto &f : files)
    d.add(f.stem().string(), load_csv(f, schema, rate));
  d.validate();
  return d;
}

Matrix pick_columns(const Matrix &x, const std::vector<Eigen::Index> &cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] < 0 || cols[c] >= x.cols())
      throw Error("cli.columns", fmt::format("column {} out of range", cols[c]));
    out.col(static_cast<Eigen::Index>(c)) = x.col(cols[c]);
  }
  return out;
}

void write_dataset(const Dataset &d, const fs::path &dir) {
  fs::create_directories(dir);
  for (std::size_t c = 0; c < d.cycles.size(); ++c)
    write_csv(dir / (d.cycle_names[c] + ".csv"), d.cycles[c]);
}

// soc0 such that the first coulomb-counted sample reproduces the stored soc.
double initial_soc(const TimeSeries &ts, double capacity_ah) {
  return std::clamp(ts[channel::soc][0] -
                        ts[channel::current][0] * ts.dt() / (3600.0 * capacity_ah),
                    0.0, 1.0);
}

std::vector<ReportRow> parse_report(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("io.open", fmt::format("{}: cannot open file", path.string()));
  std::string line;
  std::getline(in, line);
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(ss, cell, ',');)
      cells.push_back(cell);
    if (cells.size() != 6)
      throw Error("csv.parse", fmt::format("{}: malformed report row", path.string()));
    ReportRow r;
    r.variant = cells[0];
    r.cycle = cells[1];
    r.metrics.rmse = std::stod(cells[2]);
    r.metrics.max_abs_error = std::stod(cells[3]);
    r.metrics.normalized_max_error = std::stod(cells[4]);
    r.metrics.inside_fraction = std::stod(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

CsvSchema data_schema() { return CsvSchema{}; }

CsvSchema trace_schema() {
  CsvSchema s;
  s.required = {channel::current, channel::temperature, channel::soc};
  s.optional = {"y",     "y_am",    "y_ecm",  "y_ocsvm", "y_hull", "y_hat",
                "e_ecm", "e_ocsvm", "e_hull", "e_dd",    "f_oc"};
  return s;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Boundary-gated error compensation for analytical battery models"};
  app.require_subcommand(1);

  Common gen_o, fnn_o, oc_o, hull_o, sim_o, eval_o, poly_o, bat_o, plot_o;
  std::string data_dir, narx_path, ocsvm_path, hull_path, trace_path, cycle_path;
  double rate = 20.0;
  Eigen::Index hidden = 5;
  std::optional<double> nu, sigma;
  std::string columns = "0,2,3";
  std::vector<std::string> traces;

  auto *gen = app.add_subcommand("gen-data", "Generate synthetic battery cycles as CSV");
  add_common(gen, gen_o);

  auto *fnn = app.add_subcommand("train-fnn", "Train the NARX error model (LM, then RTRL)");
  add_common(fnn, fnn_o);
  fnn->add_option("--data", data_dir, "Directory of cycle CSVs with an error column")->required();
  fnn->add_option("--rate", rate, "Sample rate of the CSVs [Hz]");
  fnn->add_option("--hidden", hidden, "Hidden neurons");

  auto *oc = app.add_subcommand("train-ocsvm", "Train the one-class SVM on NARX regressors");
  add_common(oc, oc_o);
  oc->add_option("--data", data_dir, "Directory of cycle CSVs with an error column")->required();
  oc->add_option("--rate", rate, "Sample rate of the CSVs [Hz]");
  oc->add_option("--nu", nu, "nu (tuned against the hull when omitted)");
  oc->add_option("--sigma", sigma, "Kernel width in scaled space");

  auto *hl = app.add_subcommand("hull", "Convex hull of NARX regressor columns");
  add_common(hl, hull_o);
  hl->add_option("--data", data_dir, "Directory of cycle CSVs with an error column")->required();
  hl->add_option("--rate", rate, "Sample rate of the CSVs [Hz]");
  hl->add_option("--columns", columns, "Comma-separated regressor columns");

  auto *sim = app.add_subcommand("simulate", "Run a hybrid model over one cycle");
  add_common(sim, sim_o);
  sim->add_option("--cycle", cycle_path, "Cycle CSV")->required();
  sim->add_option("--rate", rate, "Sample rate of the CSV [Hz]");
  sim->add_option("--narx", narx_path, "NARX model JSON");
  sim->add_option("--ocsvm", ocsvm_path, "OCSVM model JSON");
  sim->add_option("--hull", hull_path, "Hull model JSON");

  auto *ev = app.add_subcommand("evaluate", "Metrics of simulated traces");
  add_common(ev, eval_o);
  ev->add_option("--trace", traces, "Trace CSV(s) from simulate")->required();
  ev->add_option("--rate", rate, "Sample rate of the CSVs [Hz]");

  auto *poly = app.add_subcommand("poly-experiment", "Polynomial regression study");
  add_common(poly, poly_o);

  auto *bat = app.add_subcommand("battery-experiment", "Synthetic battery study");
  add_common(bat, bat_o);

  auto *plot = app.add_subcommand("plot", "Render SVG plots of a battery-experiment directory");
  add_common(plot, plot_o);
  plot->add_option("--dir", data_dir, "battery-experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    std::cerr << fmt::format("error code=cli.usage message=\"{}\"\n", e.what());
    return 2;
  }

  try {
    if (*gen) {
      auto cfg = io::battery_config_from_json(load_config(gen_o));
      if (gen_o.seed)
        cfg.seed = *gen_o.seed;
      const auto data = generate_battery_data(cfg);
      write_dataset(data.train, fs::path(gen_o.out) / "train");
      write_dataset(data.validation, fs::path(gen_o.out) / "validation");
      write_dataset(data.edge, fs::path(gen_o.out) / "edge");
    } else if (*fnn) {
      auto cfg = io::battery_config_from_json(load_config(fnn_o));
      const auto data = load_dir(data_dir, rate, data_schema());
      const NarxSpec spec;
      const auto reg = build_regressors(data, spec);
      const std::uint64_t seed = fnn_o.seed.value_or(cfg.seed);
      auto net = MlpModel::random(NarxSpec::width, hidden, seed);
      net.fit_scaling(reg.x, {reg.y.data(), static_cast<std::size_t>(reg.y.size())});
      cfg.lm.seed = seed;
      const auto lm = train_lm(net, reg.x, reg.y, cfg.lm);
      NarxModel model{lm.model, spec, 10.0 * reg.y.cwiseAbs().maxCoeff(), {}};
      model.meta = {"lm", lm.epochs, lm.loss_trace.back(), seed};
      if (fnn_o.variant != "lm") {
        const auto rt = train_rtrl(model, data, cfg.rtrl);
        model.net = rt.model;
        model.meta = {"lm+rtrl", lm.epochs + rt.epochs, rt.loss_trace.back(), seed};
      }
      io::write_json(fnn_o.out, io::to_json(model));
    } else if (*oc) {
      auto cfg = io::battery_config_from_json(load_config(oc_o));
      const auto data = load_dir(data_dir, rate, data_schema());
      const auto reg = build_regressors(data, NarxSpec{});
      const auto rows = space_filling_rows(reg.x, cfg.ocsvm_points);
      Matrix x(static_cast<Eigen::Index>(rows.size()), reg.x.cols());
      for (std::size_t k = 0; k < rows.size(); ++k)
        x.row(static_cast<Eigen::Index>(k)) = reg.x.row(static_cast<Eigen::Index>(rows[k]));
      double n = nu.value_or(0.0), s = sigma.value_or(0.0);
      if (!nu || !sigma) {
        TuneOptions t;
        t.probe_count = cfg.probe_count;
        t.seed = oc_o.seed.value_or(cfg.seed);
        const auto tuned = tune_ocsvm(x, nu ? std::vector<double>{*nu} : cfg.nu_grid,
                                      sigma ? std::vector<double>{*sigma} : cfg.sigma_grid,
                                      hull_lp(x), t);
        n = tuned.nu;
        s = tuned.sigma;
      }
      auto model = train_ocsvm(x, n, s);
      model.bias_offset = cfg.bias_offset;
      io::write_json(oc_o.out, io::to_json(model));
    } else if (*hl) {
      const auto data = load_dir(data_dir, rate, data_schema());
      const auto reg = build_regressors(data, NarxSpec{});
      std::vector<Eigen::Index> cols;
      std::stringstream ss(columns);
      for (std::string c; std::getline(ss, c, ',');)
        cols.push_back(std::stol(c));
      io::write_json(hull_o.out, io::to_json(build_hull(pick_columns(reg.x, cols))));
    } else if (*sim) {
      auto cfg = io::battery_config_from_json(load_config(sim_o));
      CsvSchema schema = data_schema();
      schema.required = {channel::current, channel::temperature, channel::soc};
      schema.optional = {channel::voltage, channel::error};
      const auto ts = load_csv(cycle_path, schema, rate);
      HybridModel h;
      h.am = cfg.am;
      h.gate = cfg.gate;
      apply_gate(sim_o, h.gate);
      const std::string variant = sim_o.variant.empty() ? "ecm" : sim_o.variant;
      if (variant != "am") {
        if (narx_path.empty())
          throw Error("cli.args", "--narx is required for this variant");
        h.narx = io::narx_from_json(io::read_json(narx_path));
      } else {
        h.narx.net = MlpModel::zeros(NarxSpec::width, 1);
        h.narx.net.input_scaling = ScalingInfo::identity(NarxSpec::width);
        h.narx.net.output_scaling = ScalingInfo::identity(1);
      }
      if (variant == "ocsvm") {
        if (ocsvm_path.empty())
          throw Error("cli.args", "--ocsvm is required for variant ocsvm");
        h.envelope.ocsvm = io::ocsvm_from_json(io::read_json(ocsvm_path));
      } else if (variant == "hull") {
        if (hull_path.empty())
          throw Error("cli.args", "--hull is required for variant hull");
        h.envelope.hull = io::hull_from_json(io::read_json(hull_path));
      } else if (variant != "ecm" && variant != "am") {
        throw Error("cli.args", fmt::format("unknown variant '{}'", variant));
      }
      const auto tr = hybrid_simulate(h, ts[channel::current], ts[channel::temperature],
                                      initial_soc(ts, cfg.am.capacity_ah), ts.dt());
      TimeSeries out(ts.sample_rate_hz());
      out.set(channel::current, ts[channel::current]);
      out.set(channel::temperature, ts[channel::temperature]);
      out.set(channel::soc, tr.soc);
      if (ts.has(channel::voltage))
        out.set("y", ts[channel::voltage]);
      out.set("y_am", tr.y_am);
      out.set("y_hat", variant == "am" ? tr.y_am : tr.y);
      out.set("e_dd", tr.e_dd);
      auto f = tr.f_oc;
      for (auto &v : f)
        if (std::isnan(v))
          v = 0.0;
      out.set("f_oc", std::move(f));
      write_csv(sim_o.out, out);
    } else if (*ev) {
      std::vector<ReportRow> rows;
      for (const auto &p : traces) {
        const auto ts = load_csv(p, trace_schema(), rate);
        if (!ts.has("y") || !ts.has("y_hat"))
          throw Error("csv.schema", fmt::format("{}: needs columns y and y_hat", p));
        rows.push_back({eval_o.variant.empty() ? "model" : eval_o.variant,
                        fs::path(p).stem().string(), evaluate(ts["y_hat"], ts["y"])});
      }
      write_report_csv(eval_o.out, rows);
    } else if (*poly) {
      auto cfg = io::poly_config_from_json(load_config(poly_o));
      if (poly_o.seed)
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k)
          cfg.seeds[k] = *poly_o.seed + k;
      apply_gate(poly_o, cfg.gate);
      const auto rep = run_poly_experiment(cfg);
      const auto csv = format_poly_csv(rep);
      write_text(fs::path(poly_o.out) / "poly_report.csv", csv);
      std::cout << csv;
    } else if (*bat) {
      auto cfg = io::battery_config_from_json(load_config(bat_o));
      if (bat_o.seed)
        cfg.seed = *bat_o.seed;
      apply_gate(bat_o, cfg.gate);
      const auto rep = run_battery_experiment(cfg);
      write_battery_outputs(rep, bat_o.out);
      std::cout << format_report_csv(rep.rows);
    } else if (*plot) {
      const fs::path dir(data_dir);
      const auto rows = parse_report(dir / "report.csv");
      std::vector<std::string> names;
      for (const auto &r : rows)
        if (r.cycle.rfind("mean_", 0) != 0 &&
            std::find(names.begin(), names.end(), r.cycle) == names.end())
          names.push_back(r.cycle);
      std::vector<CycleTrace> tr;
      for (const auto &n : names)
        tr.push_back({n, load_csv(dir / "traces" / (n + ".csv"), trace_schema(), rate)});
      Matrix proj;
      if (fs::exists(dir / "train_projection.csv")) {
        CsvSchema s;
        s.required = {channel::current, channel::temperature, channel::soc};
        s.optional = {};
        const auto p = load_csv(dir / "train_projection.csv", s, 1.0);
        proj.resize(static_cast<Eigen::Index>(p.length()), 3);
        for (std::size_t k = 0; k < p.length(); ++k) {
          proj(static_cast<Eigen::Index>(k), 0) = p[channel::current][k];
          proj(static_cast<Eigen::Index>(k), 1) = p[channel::temperature][k];
          proj(static_cast<Eigen::Index>(k), 2) = p[channel::soc][k];
        }
      }
      for (const auto &p : emit_plots(rows, tr, proj, plot_o.out))
        std::cout << p.string() << '\n';
    }
  } catch (const Error &e) {
    std::cerr << fmt::format("error code={} message=\"{}\"\n", e.code(), e.what());
    return 1;
  } catch (const std::exception &e) {
    std::cerr << fmt::format("error code=internal message=\"{}\"\n", e.what());
    return 3;
  }
  return 0;
}
