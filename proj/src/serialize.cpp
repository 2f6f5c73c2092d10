#include "ecomp/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace ecomp::io {

namespace {

json matrix_to_json(const Matrix &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json &j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Matrix m(rows, cols);
  const auto &data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw Error("io.schema", "matrix row count mismatch");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = data.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw Error("io.schema", "matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json scaling_to_json(const ScalingInfo &s) {
  return {{"lo", s.lo}, {"hi", s.hi}, {"degenerate", s.degenerate}};
}

ScalingInfo scaling_from_json(const json &j) {
  ScalingInfo s;
  s.lo = j.at("lo").get<std::vector<double>>();
  s.hi = j.at("hi").get<std::vector<double>>();
  s.degenerate = j.at("degenerate").get<std::vector<bool>>();
  if (s.lo.size() != s.hi.size() || s.lo.size() != s.degenerate.size())
    throw Error("io.schema", "scaling arrays differ in length");
  return s;
}

json map_to_json(const ParameterMap &m) {
  json j{{"soc_axis", m.table.soc_axis},
         {"temp_axis", m.table.temp_axis},
         {"current_axis", m.table.current_axis},
         {"values", m.table.values}};
  if (m.arrhenius)
    j["arrhenius"] = {{"t_ref_k", m.arrhenius->t_ref_k}, {"ea_over_k", m.arrhenius->ea_over_k}};
  return j;
}

ParameterMap map_from_json(const json &j) {
  ParameterMap m;
  m.table.soc_axis = j.at("soc_axis").get<std::vector<double>>();
  m.table.temp_axis = j.at("temp_axis").get<std::vector<double>>();
  m.table.current_axis = j.at("current_axis").get<std::vector<double>>();
  m.table.values = j.at("values").get<std::vector<double>>();
  if (j.contains("arrhenius"))
    m.arrhenius = ArrheniusTerm{j["arrhenius"].at("t_ref_k").get<double>(),
                                j["arrhenius"].at("ea_over_k").get<double>()};
  return m;
}

double snr_from_json(const json &j) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "none"))
    return kNoNoise;
  return j.get<double>();
}

json snr_to_json(double snr) {
  if (std::isinf(snr))
    return "inf";
  return snr;
}

} // namespace

json document(std::string_view format, json body) {
  body["format"] = std::string(format);
  body["version"] = kVersion;
  return body;
}

const json &unwrap(const json &doc, std::string_view format) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != std::string(format))
    throw Error("io.format", fmt::format("expected a '{}' document", format));
  if (!doc.contains("version") || doc["version"].get<int>() != kVersion)
    throw Error("io.format", fmt::format("unsupported '{}' document version", format));
  return doc;
}

// ---------------------------------------------------------------------------

json to_json(const EquivCircuitParams &p) {
  return document("ecomp.equiv_circuit",
                  {{"capacity_ah", p.capacity_ah},
                   {"ocv", {{"soc", p.ocv.soc}, {"volts", p.ocv.volts}}},
                   {"r0", map_to_json(p.r0)},
                   {"r1", map_to_json(p.r1)},
                   {"c1", map_to_json(p.c1)},
                   {"r2", map_to_json(p.r2)},
                   {"c2", map_to_json(p.c2)}});
}

EquivCircuitParams equiv_circuit_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.equiv_circuit");
  EquivCircuitParams p;
  try {
    p.capacity_ah = j.at("capacity_ah").get<double>();
    p.ocv.soc = j.at("ocv").at("soc").get<std::vector<double>>();
    p.ocv.volts = j.at("ocv").at("volts").get<std::vector<double>>();
    p.r0 = map_from_json(j.at("r0"));
    p.r1 = map_from_json(j.at("r1"));
    p.c1 = map_from_json(j.at("c1"));
    p.r2 = map_from_json(j.at("r2"));
    p.c2 = map_from_json(j.at("c2"));
  } catch (const json::exception &e) {
    throw Error("io.schema", fmt::format("equivalent-circuit document: {}", e.what()));
  }
  return p;
}

json to_json(const PlantConfig &c) {
  json body{{"base", to_json(c.base)},
            {"hysteresis_mag", c.hysteresis_mag},
            {"hysteresis_rate", c.hysteresis_rate},
            {"sensor_noise_snr_db", snr_to_json(c.sensor_noise_snr_db)},
            {"seed", c.seed}};
  if (c.extra_rc)
    body["extra_rc"] = {{"r", map_to_json(c.extra_rc->r)}, {"c", map_to_json(c.extra_rc->c)}};
  return document("ecomp.plant", std::move(body));
}

PlantConfig plant_config_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.plant");
  PlantConfig c;
  try {
    c.base = equiv_circuit_from_json(j.at("base"));
    c.hysteresis_mag = j.at("hysteresis_mag").get<double>();
    c.hysteresis_rate = j.at("hysteresis_rate").get<double>();
    c.sensor_noise_snr_db = snr_from_json(j.at("sensor_noise_snr_db"));
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("extra_rc"))
      c.extra_rc = ExtraRc{map_from_json(j["extra_rc"].at("r")), map_from_json(j["extra_rc"].at("c"))};
  } catch (const json::exception &e) {
    throw Error("io.schema", fmt::format("plant document: {}", e.what()));
  }
  return c;
}

json to_json(const NarxModel &m) {
  const auto &n = m.net;
  std::vector<double> w1;
  for (Eigen::Index h = 0; h < n.n_hidden; ++h)
    for (Eigen::Index i = 0; i < n.n_in; ++i)
      w1.push_back(n.w1(h, i));
  return document(
      "ecomp.narx",
      {{"layer_sizes", {n.n_in, n.n_hidden, 1}},
       {"w1_row_major", w1},
       {"b1", std::vector<double>(n.b1.data(), n.b1.data() + n.b1.size())},
       {"w2", std::vector<double>(n.w2.data(), n.w2.data() + n.w2.size())},
       {"b2", n.b2},
       {"input_scaling", scaling_to_json(n.input_scaling)},
       {"output_scaling", scaling_to_json(n.output_scaling)},
       {"spec",
        {{"regressor", {"i(k)", "i(k-1)", "T(k)", "soc(k)", "e(k-1)"}},
         {"current", m.spec.current},
         {"temperature", m.spec.temperature},
         {"soc", m.spec.soc},
         {"error", m.spec.error}}},
       {"feedback_bound", snr_to_json(m.feedback_bound)},
       {"training",
        {{"method", m.meta.method},
         {"epochs", m.meta.epochs},
         {"final_loss", std::isfinite(m.meta.final_loss) ? json(m.meta.final_loss) : json(nullptr)},
         {"seed", m.meta.seed}}}});
}

NarxModel narx_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.narx");
  NarxModel m;
  try {
    const auto sizes = j.at("layer_sizes").get<std::vector<Eigen::Index>>();
    if (sizes.size() != 3 || sizes[2] != 1)
      throw Error("io.schema", "network must have exactly three layers with one output");
    m.net = MlpModel::zeros(sizes[0], sizes[1]);
    const auto w1 = j.at("w1_row_major").get<std::vector<double>>();
    const auto b1 = j.at("b1").get<std::vector<double>>();
    const auto w2 = j.at("w2").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w1.size()) != sizes[0] * sizes[1] ||
        static_cast<Eigen::Index>(b1.size()) != sizes[1] ||
        static_cast<Eigen::Index>(w2.size()) != sizes[1])
      throw Error("io.schema", "weight arrays do not match layer sizes");
    for (Eigen::Index h = 0; h < sizes[1]; ++h) {
      for (Eigen::Index i = 0; i < sizes[0]; ++i)
        m.net.w1(h, i) = w1[static_cast<std::size_t>(h * sizes[0] + i)];
      m.net.b1(h) = b1[static_cast<std::size_t>(h)];
      m.net.w2(h) = w2[static_cast<std::size_t>(h)];
    }
    m.net.b2 = j.at("b2").get<double>();
    m.net.input_scaling = scaling_from_json(j.at("input_scaling"));
    m.net.output_scaling = scaling_from_json(j.at("output_scaling"));
    const auto &spec = j.at("spec");
    m.spec.current = spec.at("current").get<std::string>();
    m.spec.temperature = spec.at("temperature").get<std::string>();
    m.spec.soc = spec.at("soc").get<std::string>();
    m.spec.error = spec.at("error").get<std::string>();
    m.feedback_bound = snr_from_json(j.at("feedback_bound"));
    const auto &t = j.at("training");
    m.meta.method = t.at("method").get<std::string>();
    m.meta.epochs = t.at("epochs").get<std::size_t>();
    m.meta.final_loss = t.at("final_loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                     : t.at("final_loss").get<double>();
    m.meta.seed = t.at("seed").get<std::uint64_t>();
  } catch (const json::exception &e) {
    throw Error("io.schema", fmt::format("NARX document: {}", e.what()));
  }
  m.net.validate();
  return m;
}

json to_json(const OcsvmModel &m) {
  return document("ecomp.ocsvm", {{"support_vectors", matrix_to_json(m.support_vectors)},
                                  {"alphas", m.alphas},
                                  {"sv_index", m.sv_index},
                                  {"bias", m.bias},
                                  {"sigma", m.sigma},
                                  {"nu", m.nu},
                                  {"bias_offset", m.bias_offset},
                                  {"scaling", scaling_to_json(m.scaling)},
                                  {"training_size", m.training_size},
                                  {"kkt_residual", m.kkt_residual}});
}

OcsvmModel ocsvm_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.ocsvm");
  OcsvmModel m;
  try {
    m.support_vectors = matrix_from_json(j.at("support_vectors"));
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.sv_index = j.at("sv_index").get<std::vector<std::size_t>>();
    m.bias = j.at("bias").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.nu = j.at("nu").get<double>();
    m.bias_offset = j.at("bias_offset").get<double>();
    m.scaling = scaling_from_json(j.at("scaling"));
    m.training_size = j.at("training_size").get<std::size_t>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
  } catch (const json::exception &e) {
    throw Error("io.schema", fmt::format("OCSVM document: {}", e.what()));
  }
  if (static_cast<Eigen::Index>(m.alphas.size()) != m.support_vectors.rows())
    throw Error("io.schema", "alpha count does not match support vectors");
  return m;
}

json to_json(const HullModel &h) {
  return document("ecomp.hull", {{"dim", h.dim},
                                 {"vertex_index", h.vertex_index},
                                 {"vertices", matrix_to_json(h.vertices)},
                                 {"normals", matrix_to_json(h.normals)},
                                 {"offsets", h.offsets},
                                 {"points", matrix_to_json(h.points)}});
}

HullModel hull_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.hull");
  HullModel h;
  try {
    h.dim = j.at("dim").get<std::size_t>();
    h.vertex_index = j.at("vertex_index").get<std::vector<std::size_t>>();
    h.vertices = matrix_from_json(j.at("vertices"));
    h.normals = matrix_from_json(j.at("normals"));
    h.offsets = j.at("offsets").get<std::vector<double>>();
    h.points = matrix_from_json(j.at("points"));
  } catch (const json::exception &e) {
    throw Error("io.schema", fmt::format("hull document: {}", e.what()));
  }
  return h;
}

json to_json(const GateConfig &g) {
  return document("ecomp.gate", {{"gamma", g.gamma}, {"variant", std::string(to_string(g.variant))}});
}

GateConfig gate_from_json(const json &doc) {
  const auto &j = unwrap(doc, "ecomp.gate");
  GateConfig g;
  g.gamma = j.at("gamma").get<double>();
  g.variant = parse_gate_variant(j.at("variant").get<std::string>());
  g.validate();
  return g;
}

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("io.open", fmt::format("{}: cannot open file", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error("io.parse", fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const std::filesystem::path &path, const json &doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("io.open", fmt::format("{}: cannot open for writing", path.string()));
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Experiment configs

namespace {

class Fields {
public:
  Fields(const json &j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object())
      throw Error("config.schema", fmt::format("{}: expected an object", what_));
  }

  template <class T> void get(const char *key, T &out) {
    used_.emplace_back(key);
    if (!j_.contains(key))
      return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception &e) {
      throw Error("config.schema", fmt::format("{}.{}: {}", what_, key, e.what()));
    }
  }

  template <class F> void nested(const char *key, F &&apply) {
    used_.emplace_back(key);
    if (!j_.contains(key))
      return;
    try {
      apply(j_.at(key));
    } catch (const json::exception &e) {
      throw Error("config.schema", fmt::format("{}.{}: {}", what_, key, e.what()));
    }
  }

  void finish() const {
    for (const auto &item : j_.items()) {
      const auto &k = item.key();
      if (k == "format" || k == "version")
        continue;
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw Error("config.key", fmt::format("{}: unknown key '{}'", what_, k));
    }
  }

private:
  const json &j_;
  std::string what_;
  std::vector<std::string> used_;
};

json gate_body(const GateConfig &g) {
  return {{"gamma", g.gamma}, {"variant", std::string(to_string(g.variant))}};
}

void overlay_gate(const json &j, GateConfig &g) {
  Fields f(j, "gate");
  f.get("gamma", g.gamma);
  std::string v(to_string(g.variant));
  f.get("variant", v);
  g.variant = parse_gate_variant(v);
  f.finish();
}

void overlay_poly_spec(const json &j, PolySpec &p) {
  Fields f(j, "poly");
  f.get("n_terms", p.n_terms);
  f.get("avg_exponent", p.avg_exponent);
  f.get("sine", p.sine);
  f.get("omega_min", p.omega_min);
  f.get("omega_max", p.omega_max);
  f.get("phase_min", p.phase_min);
  f.get("phase_max", p.phase_max);
  f.get("coef_scale", p.coef_scale);
  f.finish();
}

} // namespace

json to_json(const TrainOptions &o) {
  return {{"max_epochs", o.max_epochs},       {"stop_band", o.stop_band},
          {"stop_patience", o.stop_patience}, {"lambda0", o.lambda0},
          {"lambda_up", o.lambda_up},         {"lambda_down", o.lambda_down},
          {"lambda_max", o.lambda_max},       {"restarts", o.restarts},
          {"sensitivity_bound", o.sensitivity_bound}};
}

void overlay(const json &j, TrainOptions &o) {
  Fields f(j, "train");
  f.get("max_epochs", o.max_epochs);
  f.get("stop_band", o.stop_band);
  f.get("stop_patience", o.stop_patience);
  f.get("lambda0", o.lambda0);
  f.get("lambda_up", o.lambda_up);
  f.get("lambda_down", o.lambda_down);
  f.get("lambda_max", o.lambda_max);
  f.get("restarts", o.restarts);
  f.get("sensitivity_bound", o.sensitivity_bound);
  f.finish();
}

json to_json(const DriveProfile &p) {
  return {{"duration_s", p.duration_s},
          {"current_scale_c", p.current_scale_c},
          {"current_offset_c", p.current_offset_c},
          {"pulse_mean_s", p.pulse_mean_s},
          {"rest_probability", p.rest_probability},
          {"bandwidth_hz", p.bandwidth_hz},
          {"temp_c", p.temp_c},
          {"temp_drift_c", p.temp_drift_c},
          {"temp_period_s", p.temp_period_s},
          {"soc0", p.soc0}};
}

void overlay(const json &j, DriveProfile &p) {
  Fields f(j, "profile");
  f.get("duration_s", p.duration_s);
  f.get("current_scale_c", p.current_scale_c);
  f.get("current_offset_c", p.current_offset_c);
  f.get("pulse_mean_s", p.pulse_mean_s);
  f.get("rest_probability", p.rest_probability);
  f.get("bandwidth_hz", p.bandwidth_hz);
  f.get("temp_c", p.temp_c);
  f.get("temp_drift_c", p.temp_drift_c);
  f.get("temp_period_s", p.temp_period_s);
  f.get("soc0", p.soc0);
  f.finish();
}

json to_json(const PolyExperimentConfig &c) {
  return {{"seeds", c.seeds},
          {"train_points", c.train_points},
          {"train_lo", c.train_lo},
          {"train_hi", c.train_hi},
          {"test_points", c.test_points},
          {"snr_db", snr_to_json(c.snr_db)},
          {"hidden", c.hidden},
          {"poly",
           {{"n_terms", c.poly.n_terms},
            {"avg_exponent", c.poly.avg_exponent},
            {"sine", c.poly.sine},
            {"omega_min", c.poly.omega_min},
            {"omega_max", c.poly.omega_max},
            {"phase_min", c.poly.phase_min},
            {"phase_max", c.poly.phase_max},
            {"coef_scale", c.poly.coef_scale}}},
          {"train", to_json(c.train)},
          {"nu_grid", c.nu_grid},
          {"sigma_grid", c.sigma_grid},
          {"probe_count", c.probe_count},
          {"bias_offset", c.bias_offset},
          {"gate", gate_body(c.gate)}};
}

PolyExperimentConfig poly_config_from_json(const json &j) {
  PolyExperimentConfig c;
  Fields f(j, "poly-experiment");
  f.get("seeds", c.seeds);
  f.get("train_points", c.train_points);
  f.get("train_lo", c.train_lo);
  f.get("train_hi", c.train_hi);
  f.get("test_points", c.test_points);
  f.nested("snr_db", [&](const json &v) { c.snr_db = snr_from_json(v); });
  f.get("hidden", c.hidden);
  f.nested("poly", [&](const json &v) { overlay_poly_spec(v, c.poly); });
  f.nested("train", [&](const json &v) { overlay(v, c.train); });
  f.get("nu_grid", c.nu_grid);
  f.get("sigma_grid", c.sigma_grid);
  f.get("probe_count", c.probe_count);
  f.get("bias_offset", c.bias_offset);
  f.nested("gate", [&](const json &v) { overlay_gate(v, c.gate); });
  f.finish();
  c.validate();
  return c;
}

json to_json(const BatteryConfig &c) {
  json plant = to_json(c.plant);
  json am = to_json(c.am);
  return {{"plant", plant},
          {"am", am},
          {"sample_rate_hz", c.sample_rate_hz},
          {"target_rate_hz", c.target_rate_hz},
          {"cutoff_hz", c.cutoff_hz},
          {"train_profile", to_json(c.train_profile)},
          {"train_cycles", c.train_cycles},
          {"train_soc_spread", c.train_soc_spread},
          {"train_temp_spread", c.train_temp_spread},
          {"excursion_every", c.excursion_every},
          {"validation_cycles", c.validation_cycles},
          {"edge_candidates", c.edge_candidates},
          {"edge_count", c.edge_count},
          {"edge_current_scale_c", c.edge_current_scale_c},
          {"edge_temp_shift_c", c.edge_temp_shift_c},
          {"edge_soc_shift", c.edge_soc_shift},
          {"hidden_candidates", c.hidden_candidates},
          {"grid_subset", c.grid_subset},
          {"lm", to_json(c.lm)},
          {"rtrl", to_json(c.rtrl)},
          {"lm_rows", c.lm_rows},
          {"ocsvm_points", c.ocsvm_points},
          {"nu_grid", c.nu_grid},
          {"sigma_grid", c.sigma_grid},
          {"probe_count", c.probe_count},
          {"bias_offset", c.bias_offset},
          {"gate", gate_body(c.gate)},
          {"seed", c.seed}};
}

BatteryConfig battery_config_from_json(const json &j) {
  BatteryConfig c = BatteryConfig::defaults();
  Fields f(j, "battery-experiment");
  f.nested("plant", [&](const json &v) { c.plant = plant_config_from_json(v); });
  f.nested("am", [&](const json &v) { c.am = equiv_circuit_from_json(v); });
  f.get("sample_rate_hz", c.sample_rate_hz);
  f.get("target_rate_hz", c.target_rate_hz);
  f.get("cutoff_hz", c.cutoff_hz);
  f.nested("train_profile", [&](const json &v) { overlay(v, c.train_profile); });
  f.get("train_cycles", c.train_cycles);
  f.get("train_soc_spread", c.train_soc_spread);
  f.get("train_temp_spread", c.train_temp_spread);
  f.get("excursion_every", c.excursion_every);
  f.get("validation_cycles", c.validation_cycles);
  f.get("edge_candidates", c.edge_candidates);
  f.get("edge_count", c.edge_count);
  f.get("edge_current_scale_c", c.edge_current_scale_c);
  f.get("edge_temp_shift_c", c.edge_temp_shift_c);
  f.get("edge_soc_shift", c.edge_soc_shift);
  f.get("hidden_candidates", c.hidden_candidates);
  f.get("grid_subset", c.grid_subset);
  f.nested("lm", [&](const json &v) { overlay(v, c.lm); });
  f.nested("rtrl", [&](const json &v) { overlay(v, c.rtrl); });
  f.get("lm_rows", c.lm_rows);
  f.get("ocsvm_points", c.ocsvm_points);
  f.get("nu_grid", c.nu_grid);
  f.get("sigma_grid", c.sigma_grid);
  f.get("probe_count", c.probe_count);
  f.get("bias_offset", c.bias_offset);
  f.nested("gate", [&](const json &v) { overlay_gate(v, c.gate); });
  f.get("seed", c.seed);
  f.finish();
  c.validate();
  return c;
}

} // namespace ecomp::io
