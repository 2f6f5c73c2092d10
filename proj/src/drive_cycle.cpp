#include "ecomp/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace ecomp {

void DriveProfile::validate() const {
  if (!(duration_s > 0.0))
    throw Error("drive.profile", "duration must be positive");
  if (!(current_scale_c >= 0.0) || !(pulse_mean_s > 0.0) || !(bandwidth_hz > 0.0))
    throw Error("drive.profile", "current scale, pulse length and bandwidth must be positive");
  if (!(rest_probability >= 0.0 && rest_probability <= 1.0))
    throw Error("drive.profile", "rest probability must lie in [0, 1]");
  if (!(soc0 >= 0.0 && soc0 <= 1.0))
    throw Error("drive.profile", "soc0 must lie in [0, 1]");
  if (!(temp_period_s > 0.0))
    throw Error("drive.profile", "temperature period must be positive");
}

DriveCycle generate_drive_cycle(const DriveProfile &profile, double capacity_ah,
                                double sample_rate_hz, std::uint64_t seed) {
  profile.validate();
  if (!(capacity_ah > 0.0) || !(sample_rate_hz > 0.0))
    throw Error("drive.profile", "capacity and sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(profile.duration_s * sample_rate_hz));
  if (n < 2)
    throw Error("drive.profile", "cycle shorter than two samples");

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> hold(1.0 / profile.pulse_mean_s);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> raw(n);
  std::size_t k = 0;
  while (k < n) {
    const double len_s = std::max(1.0, hold(rng));
    const bool rest = u01(rng) < profile.rest_probability;
    double level = profile.current_offset_c;
    if (!rest)
      level += profile.current_scale_c * amp(rng);
    const auto len = static_cast<std::size_t>(std::llround(len_s * sample_rate_hz));
    for (std::size_t j = 0; j < len && k < n; ++j, ++k)
      raw[k] = level * capacity_ah;
  }

  const double transition = std::min(profile.bandwidth_hz, 0.45 * sample_rate_hz);
  const auto taps = design_lowpass(profile.bandwidth_hz, sample_rate_hz, transition);
  DriveCycle out;
  out.current = fir_filter_centered(raw, taps);
  const double limit = 2.0 * capacity_ah;
  for (auto &i : out.current)
    i = std::clamp(i, -limit, limit);

  const double phase = 2.0 * std::numbers::pi * u01(rng);
  out.temp_c.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / sample_rate_hz;
    out.temp_c[j] = profile.temp_c + profile.temp_drift_c *
                                         std::sin(2.0 * std::numbers::pi * t / profile.temp_period_s +
                                                  phase);
  }
  out.soc0 = profile.soc0;
  return out;
}

} // namespace ecomp
