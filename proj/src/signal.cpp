#include "ecomp/signal.hpp"

#include "ecomp/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace ecomp {

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(double sample_rate_hz) : rate_(sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw Error("series.invalid", fmt::format("sample rate must be positive, got {}", sample_rate_hz));
}

std::size_t TimeSeries::length() const noexcept {
  return channels_.empty() ? 0 : channels_.front().values.size();
}

bool TimeSeries::has(std::string_view name) const noexcept {
  return std::any_of(channels_.begin(), channels_.end(),
                     [&](const Channel &c) { return c.name == name; });
}

const std::vector<double> &TimeSeries::operator[](std::string_view name) const {
  for (const auto &c : channels_)
    if (c.name == name)
      return c.values;
  throw Error("series.missing_channel", fmt::format("missing channel '{}'", name));
}

std::vector<double> &TimeSeries::operator[](std::string_view name) {
  for (auto &c : channels_)
    if (c.name == name)
      return c.values;
  throw Error("series.missing_channel", fmt::format("missing channel '{}'", name));
}

void TimeSeries::set(std::string name, std::vector<double> values) {
  for (auto &c : channels_) {
    if (c.name == name) {
      if (channels_.size() > 1 && values.size() != length())
        throw Error("series.length", fmt::format("channel '{}' has {} samples, expected {}", name,
                                                 values.size(), length()));
      c.values = std::move(values);
      return;
    }
  }
  if (!channels_.empty() && values.size() != length())
    throw Error("series.length", fmt::format("channel '{}' has {} samples, expected {}", name,
                                             values.size(), length()));
  channels_.push_back({std::move(name), std::move(values)});
}

void TimeSeries::validate() const {
  if (!(rate_ > 0.0) || !std::isfinite(rate_))
    throw Error("series.invalid", "sample rate must be positive");
  if (channels_.empty() || length() == 0)
    throw Error("series.invalid", "time series is empty");
  for (const auto &c : channels_) {
    if (c.values.size() != length())
      throw Error("series.invalid", fmt::format("channel '{}' length mismatch", c.name));
    for (std::size_t k = 0; k < c.values.size(); ++k) {
      const double v = c.values[k];
      if (!std::isfinite(v))
        throw Error("series.invalid", fmt::format("channel '{}' sample {} is not finite", c.name, k));
      if (c.name == channel::soc && (v < 0.0 || v > 1.0))
        throw Error("series.invalid", fmt::format("soc sample {} = {} outside [0, 1]", k, v));
    }
  }
}

void Dataset::add(std::string cycle_name, TimeSeries ts) {
  cycle_names.push_back(std::move(cycle_name));
  cycles.push_back(std::move(ts));
}

void Dataset::validate() const {
  if (cycles.size() != cycle_names.size())
    throw Error("dataset.invalid", "cycle names and cycles differ in count");
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    cycles[c].validate();
    if (c == 0)
      continue;
    const auto &a = cycles.front();
    const auto &b = cycles[c];
    if (a.sample_rate_hz() != b.sample_rate_hz())
      throw Error("dataset.invalid", fmt::format("cycle '{}' sample rate differs", cycle_names[c]));
    if (a.channel_count() != b.channel_count())
      throw Error("dataset.invalid", fmt::format("cycle '{}' channel schema differs", cycle_names[c]));
    for (std::size_t k = 0; k < a.channel_count(); ++k)
      if (a.channels()[k].name != b.channels()[k].name)
        throw Error("dataset.invalid",
                    fmt::format("cycle '{}' channel schema differs", cycle_names[c]));
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

} // namespace

TimeSeries load_csv(const std::filesystem::path &path, const CsvSchema &schema,
                    double sample_rate_hz) {
  std::ifstream in(path);
  if (!in)
    throw Error("csv.io", fmt::format("{}: cannot open file", path.string()));

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw Error("csv.empty", fmt::format("{}: empty file", path.string()));

  const auto header = split_commas(trim(line));
  auto column_of = [&](const std::string &name) -> std::ptrdiff_t {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (trim(header[c]) == name)
        return static_cast<std::ptrdiff_t>(c);
    return -1;
  };

  std::vector<std::pair<std::string, std::size_t>> wanted;
  for (const auto &name : schema.required) {
    const auto c = column_of(name);
    if (c < 0)
      throw Error("csv.schema",
                  fmt::format("{}: row 1: missing required column '{}'", path.string(), name));
    wanted.emplace_back(name, static_cast<std::size_t>(c));
  }
  for (const auto &name : schema.optional) {
    const auto c = column_of(name);
    if (c >= 0)
      wanted.emplace_back(name, static_cast<std::size_t>(c));
  }

  std::vector<std::vector<double>> cols(wanted.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty())
      continue;
    const auto cells = split_commas(body);
    if (cells.size() != header.size())
      throw Error("csv.parse", fmt::format("{}: row {}: expected {} cells, found {}", path.string(),
                                           row, header.size(), cells.size()));
    for (std::size_t w = 0; w < wanted.size(); ++w) {
      const auto cell = trim(cells[wanted[w].second]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw Error("csv.parse",
                    fmt::format("{}: row {}, column '{}': non-numeric cell '{}'", path.string(),
                                row, wanted[w].first, cell));
      cols[w].push_back(v);
    }
  }
  if (cols.empty() || cols.front().empty())
    throw Error("csv.empty", fmt::format("{}: no data rows", path.string()));

  TimeSeries ts(sample_rate_hz);
  for (std::size_t w = 0; w < wanted.size(); ++w)
    ts.set(wanted[w].first, std::move(cols[w]));
  ts.validate();
  return ts;
}

void write_csv(const std::filesystem::path &path, const TimeSeries &ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("csv.io", fmt::format("{}: cannot open for writing", path.string()));
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t");
  for (const auto &c : ts.channels())
    fmt::format_to(std::back_inserter(buf), ",{}", c.name);
  buf.push_back('\n');
  for (std::size_t k = 0; k < ts.length(); ++k) {
    fmt::format_to(std::back_inserter(buf), "{}", static_cast<double>(k) / ts.sample_rate_hz());
    for (const auto &c : ts.channels())
      fmt::format_to(std::back_inserter(buf), ",{}", c.values[k]);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

// ---------------------------------------------------------------------------
// Filtering

std::vector<double> design_lowpass(double cutoff_hz, double sample_rate_hz, double transition_hz) {
  if (!(cutoff_hz > 0.0) || !(transition_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0)
    throw Error("filter.design", "cutoff must lie in (0, fs/2) and transition must be positive");
  // Hamming main-lobe width ~ 3.3 fs / N.
  auto n = static_cast<std::size_t>(std::ceil(3.3 * sample_rate_hz / transition_hz));
  n |= 1U;
  const double fc = cutoff_hz / sample_rate_hz;
  const double mid = static_cast<double>(n - 1) / 2.0;
  std::vector<double> h(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = static_cast<double>(k) - mid;
    const double sinc = m == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double w =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1));
    h[k] = sinc * w;
    sum += h[k];
  }
  for (auto &v : h)
    v /= sum;
  return h;
}

std::vector<double> fir_filter_centered(std::span<const double> x, std::span<const double> taps,
                                        Exec exec) {
  if (taps.size() % 2 == 0)
    throw Error("filter.design", "centered FIR needs an odd number of taps");
  std::vector<double> out(x.size());
  kernels::fir_centered(x, taps, out, exec);
  return out;
}

TimeSeries antialias_downsample(const TimeSeries &ts, double cutoff_hz, double target_hz) {
  const double fs = ts.sample_rate_hz();
  if (!(target_hz > 0.0) || fs < 2.0 * target_hz || target_hz < 2.0 * cutoff_hz)
    throw Error("filter.rate",
                fmt::format("need input rate >= 2*target and target >= 2*cutoff (fs={}, target={}, "
                            "cutoff={})",
                            fs, target_hz, cutoff_hz));
  const double ratio = fs / target_hz;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio)
    throw Error("filter.rate",
                fmt::format("input rate {} is not an integer multiple of target {}", fs, target_hz));

  const auto taps = design_lowpass(cutoff_hz, fs, 0.5 * cutoff_hz);
  TimeSeries out(target_hz);
  for (const auto &c : ts.channels()) {
    const auto filtered = fir_filter_centered(c.values, taps);
    std::vector<double> dec;
    dec.reserve(filtered.size() / factor + 1);
    for (std::size_t k = 0; k < filtered.size(); k += factor)
      dec.push_back(c.name == channel::soc ? std::clamp(filtered[k], 0.0, 1.0) : filtered[k]);
    out.set(c.name, std::move(dec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise

double signal_power(std::span<const double> x) {
  if (x.empty())
    return 0.0;
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= static_cast<double>(x.size());
  double p = 0.0;
  for (double v : x)
    p += (v - mean) * (v - mean);
  return p / static_cast<double>(x.size());
}

void add_awgn_inplace(std::vector<double> &x, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0)
    return;
  const double power = signal_power(x);
  if (!(power > 0.0))
    throw Error("noise.zero_power", "cannot add noise at a given SNR to a zero-power signal");
  const double stddev = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto &v : x)
    v += dist(rng);
}

TimeSeries add_awgn(const TimeSeries &ts, double snr_db, const std::vector<std::string> &channels,
                    std::uint64_t seed) {
  TimeSeries out = ts;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    auto &values = out[channels[c]];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::uint64_t derived = 0;
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    derived = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    try {
      add_awgn_inplace(values, snr_db, derived);
    } catch (const Error &e) {
      throw Error(e.code(), fmt::format("channel '{}': {}", channels[c], e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling

ScalingInfo ScalingInfo::identity(std::size_t cols) {
  ScalingInfo s;
  s.lo.assign(cols, -1.0);
  s.hi.assign(cols, 1.0);
  s.degenerate.assign(cols, false);
  return s;
}

ScalingInfo ScalingInfo::fit(const Matrix &data) {
  ScalingInfo s;
  const auto cols = static_cast<std::size_t>(data.cols());
  s.lo.resize(cols);
  s.hi.resize(cols);
  s.degenerate.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto col = data.col(static_cast<Eigen::Index>(c));
    s.lo[c] = data.rows() ? col.minCoeff() : 0.0;
    s.hi[c] = data.rows() ? col.maxCoeff() : 0.0;
    s.degenerate[c] = !(s.hi[c] > s.lo[c]);
  }
  return s;
}

bool ScalingInfo::any_degenerate() const noexcept {
  return std::any_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
}

double ScalingInfo::scale(std::size_t col, double v) const noexcept {
  if (degenerate[col])
    return v;
  return 2.0 * (v - lo[col]) / (hi[col] - lo[col]) - 1.0;
}

double ScalingInfo::unscale(std::size_t col, double v) const noexcept {
  if (degenerate[col])
    return v;
  return (v + 1.0) * 0.5 * (hi[col] - lo[col]) + lo[col];
}

double ScalingInfo::gain(std::size_t col) const noexcept {
  return degenerate[col] ? 1.0 : 2.0 / (hi[col] - lo[col]);
}

Matrix apply_scaling(const Matrix &data, const ScalingInfo &s) {
  if (static_cast<std::size_t>(data.cols()) != s.size())
    throw Error("scaling.dimension", "column count does not match scaling");
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      out(r, c) = s.scale(static_cast<std::size_t>(c), data(r, c));
  return out;
}

Matrix denormalize(const Matrix &scaled, const ScalingInfo &s) {
  if (static_cast<std::size_t>(scaled.cols()) != s.size())
    throw Error("scaling.dimension", "column count does not match scaling");
  Matrix out(scaled.rows(), scaled.cols());
  for (Eigen::Index r = 0; r < scaled.rows(); ++r)
    for (Eigen::Index c = 0; c < scaled.cols(); ++c)
      out(r, c) = s.unscale(static_cast<std::size_t>(c), scaled(r, c));
  return out;
}

Normalized normalize(const Matrix &data) {
  auto s = ScalingInfo::fit(data);
  return {apply_scaling(data, s), std::move(s)};
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> space_filling_subset(const Matrix &points, std::size_t n,
                                              std::uint64_t /*seed*/, Exec exec) {
  const auto rows = static_cast<std::size_t>(points.rows());
  if (n < 2 || n > rows)
    throw Error("subset.range", fmt::format("subset size {} outside [2, {}]", n, rows));

  const Matrix scaled = normalize(points).data;
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  std::vector<bool> taken(rows, false);
  const auto [a, b] = kernels::farthest_pair(scaled, exec);
  chosen.push_back(a);
  chosen.push_back(b);
  taken[a] = taken[b] = true;

  std::vector<double> min_sq(rows, std::numeric_limits<double>::infinity());
  kernels::min_sqdist_update(scaled, a, min_sq, exec);
  kernels::min_sqdist_update(scaled, b, min_sq, exec);

  while (chosen.size() < n) {
    std::size_t best = rows;
    double best_d = -1.0;
    for (std::size_t p = 0; p < rows; ++p) {
      if (!taken[p] && min_sq[p] > best_d) {
        best_d = min_sq[p];
        best = p;
      }
    }
    chosen.push_back(best);
    taken[best] = true;
    kernels::min_sqdist_update(scaled, best, min_sq, exec);
  }
  return chosen;
}

} // namespace ecomp
