#pragma once

#include "ecomp/common.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ecomp {

namespace channel {
inline constexpr const char *current = "i_a";
inline constexpr const char *temperature = "temp_c";
inline constexpr const char *soc = "soc";
inline constexpr const char *voltage = "v";
inline constexpr const char *error = "e";
} // namespace channel

/// Uniformly sampled multichannel record.
///
/// Channels are kept in insertion order. All channels share one length and the
/// sample rate is carried out-of-band (the CSV time column is informative only).
class TimeSeries {
public:
  struct Channel {
    std::string name;
    std::vector<double> values;
  };

  TimeSeries() = default;
  explicit TimeSeries(double sample_rate_hz);

  double sample_rate_hz() const noexcept { return rate_; }
  double dt() const noexcept { return 1.0 / rate_; }
  std::size_t length() const noexcept;
  std::size_t channel_count() const noexcept { return channels_.size(); }
  const std::vector<Channel> &channels() const noexcept { return channels_; }

  bool has(std::string_view name) const noexcept;
  const std::vector<double> &operator[](std::string_view name) const;
  std::vector<double> &operator[](std::string_view name);

  /// Adds or replaces a channel. Throws on length mismatch with existing channels.
  void set(std::string name, std::vector<double> values);

  /// Checks every invariant (equal lengths >= 1, finite samples, rate > 0,
  /// soc in [0, 1]). Throws Error("series.invalid") on the first violation.
  void validate() const;

private:
  double rate_ = 1.0;
  std::vector<Channel> channels_;
};

struct Dataset {
  std::string name;
  std::vector<std::string> cycle_names;
  std::vector<TimeSeries> cycles;

  void add(std::string cycle_name, TimeSeries ts);
  /// All cycles share channel schema and sample rate.
  void validate() const;
};

/// Column names to read from a CSV file. `required` columns must exist;
/// `optional` ones are loaded when present.
struct CsvSchema {
  std::vector<std::string> required{channel::current, channel::temperature, channel::soc,
                                    channel::voltage};
  std::vector<std::string> optional{channel::error};
};

TimeSeries load_csv(const std::filesystem::path &path, const CsvSchema &schema,
                    double sample_rate_hz);

/// Writes `t,<channels...>` with t = k / rate. Numbers use shortest round-trip form.
void write_csv(const std::filesystem::path &path, const TimeSeries &ts);

// ---------------------------------------------------------------------------
// Anti-alias filtering and decimation

/// Hamming-windowed sinc low-pass, unit DC gain, odd length.
std::vector<double> design_lowpass(double cutoff_hz, double sample_rate_hz,
                                   double transition_hz);

/// Zero-phase (group-delay compensated) FIR filter; the signal is extended by
/// replicating its edge samples.
std::vector<double> fir_filter_centered(std::span<const double> x, std::span<const double> taps,
                                        Exec exec = Exec::parallel);

/// Low-pass every channel at `cutoff_hz` and keep every M-th sample, where
/// M = input_rate / target_hz must be an integer.
TimeSeries antialias_downsample(const TimeSeries &ts, double cutoff_hz = 10.0,
                                double target_hz = 20.0);

// ---------------------------------------------------------------------------
// Noise

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Signal power after mean removal.
double signal_power(std::span<const double> x);

/// Adds zero-mean white Gaussian noise with variance power / 10^(snr/10) to
/// each named channel. snr_db = +inf leaves the series unchanged.
TimeSeries add_awgn(const TimeSeries &ts, double snr_db, const std::vector<std::string> &channels,
                    std::uint64_t seed);

/// Same noise model applied in place to one sequence.
void add_awgn_inplace(std::vector<double> &x, double snr_db, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Min-max scaling

/// Per-column affine map onto [-1, 1]. Constant columns pass through unchanged
/// and are flagged as degenerate.
struct ScalingInfo {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<bool> degenerate;

  static ScalingInfo identity(std::size_t cols);
  static ScalingInfo fit(const Matrix &data);

  std::size_t size() const noexcept { return lo.size(); }
  bool any_degenerate() const noexcept;

  double scale(std::size_t col, double v) const noexcept;
  double unscale(std::size_t col, double v) const noexcept;
  /// d(scaled) / d(raw) for one column.
  double gain(std::size_t col) const noexcept;
};

struct Normalized {
  Matrix data;
  ScalingInfo scaling;
};

Normalized normalize(const Matrix &data);
Matrix apply_scaling(const Matrix &data, const ScalingInfo &s);
Matrix denormalize(const Matrix &scaled, const ScalingInfo &s);

// ---------------------------------------------------------------------------

/// Greedy maximin subset in min-max normalized space.
///
/// Starts from the mutually farthest pair (lowest index pair on ties), then
/// repeatedly adds the point with the largest distance to the chosen set
/// (lowest index on ties). The result is deterministic; `seed` is accepted for
/// interface stability and does not change the selection.
std::vector<std::size_t> space_filling_subset(const Matrix &points, std::size_t n,
                                              std::uint64_t seed = 0,
                                              Exec exec = Exec::parallel);

} // namespace ecomp
