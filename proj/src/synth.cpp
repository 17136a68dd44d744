#include "helios/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "helios/rng.hpp"

namespace helios::synth {
namespace {

// Labels for derive_seed so every channel draws from its own stream.
enum StreamId : std::uint64_t {
  kCloud = 1,
  kGhi = 2,
  kDniFrac = 3,
  kDhiFrac = 4,
  kTemp = 5,
  kPressure = 6,
  kRh = 7,
  kDewPoint = 8,
  kWindDir = 9,
  kWindSpeed = 10,
  kAlbedo = 11,
  kPower = 12,
  kTargetSeed = 100,
};

constexpr double kPi = 3.14159265358979323846;
constexpr double kDaysPerYear = 365.25;
constexpr double kSunriseHour = 6.0;
constexpr double kSunsetHour = 18.0;
constexpr double kTempDerateStart = 25.0;  // degC
constexpr double kTempDeratePerDeg = 0.004;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// One standard-normal draw keyed by (seed, stream, index).
double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  Rng rng(derive_seed(seed, stream, index));
  return rng.normal();
}

double keyed_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  Rng rng(derive_seed(seed, stream, index));
  return rng.uniform();
}

// 0 at the new year, 1 at midsummer.
double seasonal01(double day) { return 0.5 * (1.0 - std::cos(2.0 * kPi * (day + 0.5) / kDaysPerYear)); }

}  // namespace

void ClimateParams::validate() const {
  auto require_non_negative = [](double value, const char* name) {
    if (!(value >= 0.0)) {
      throw std::invalid_argument(std::string("synth: ") + name + " must be non-negative");
    }
  };
  require_non_negative(season_amplitude, "season_amplitude");
  require_non_negative(ghi_peak, "ghi_peak");
  require_non_negative(temp_amplitude, "temp_amplitude");
  require_non_negative(wind_mean, "wind_mean");
  require_non_negative(ghi_noise, "ghi_noise");
  require_non_negative(temp_noise, "temp_noise");
  require_non_negative(power_noise, "power_noise");
  require_non_negative(capacity_kw, "capacity_kw");
  if (!(cloudiness >= 0.0 && cloudiness <= 1.0)) {
    throw std::invalid_argument("synth: cloudiness must lie in [0,1]");
  }
  if (season_amplitude > 1.0) {
    throw std::invalid_argument("synth: season_amplitude must lie in [0,1]");
  }
}

data::TimeSeriesFrame generate_domain(const ClimateParams& params, int n_days,
                                      std::int64_t step_seconds) {
  params.validate();
  if (n_days < 1) {
    throw std::invalid_argument("synth: n_days must be >= 1");
  }
  if (step_seconds <= 0 || 86400 % step_seconds != 0) {
    throw std::invalid_argument("synth: step must divide a day evenly");
  }
  const std::size_t per_day = static_cast<std::size_t>(86400 / step_seconds);
  const std::size_t n = per_day * static_cast<std::size_t>(n_days);
  const std::uint64_t seed = params.seed;

  data::TimeSeriesFrame frame;
  frame.timestamps.resize(n);
  const char* names[] = {"ghi",      "dni", "dhi",      "temp",       "pressure", "rh",
                         "dew_point", "wind_dir", "wind_speed", "albedo", "power_kw"};
  for (const char* name : names) {
    frame.channels[name] = std::vector<double>(n, 0.0);
  }
  auto& ghi = frame.channels["ghi"];
  auto& dni = frame.channels["dni"];
  auto& dhi = frame.channels["dhi"];
  auto& temp = frame.channels["temp"];
  auto& pressure = frame.channels["pressure"];
  auto& rh = frame.channels["rh"];
  auto& dew_point = frame.channels["dew_point"];
  auto& wind_dir = frame.channels["wind_dir"];
  auto& wind_speed = frame.channels["wind_speed"];
  auto& albedo = frame.channels["albedo"];
  auto& power = frame.channels["power_kw"];

  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t offset = static_cast<std::int64_t>(i) * step_seconds;
    frame.timestamps[i] = kEpochStart + offset;
    const std::uint64_t day = static_cast<std::uint64_t>(offset / 86400);
    const double hour = static_cast<double>(offset % 86400) / 3600.0;
    const bool daylight = hour >= kSunriseHour && hour < kSunsetHour;

    // Per-day regime: cloud attenuation and the direct/diffuse split.
    const double attenuation = 1.0 - params.cloudiness * keyed_uniform(seed, kCloud, day);
    const double dni_frac =
        clamp01(0.9 * attenuation - 0.05 + 0.05 * keyed_normal(seed, kDniFrac, day));
    const double dhi_frac =
        clamp01(0.35 * (1.0 - attenuation) + 0.12 + 0.04 * keyed_normal(seed, kDhiFrac, day));

    const double season = seasonal01(static_cast<double>(day));
    const double clear_sky_scale = 1.0 - params.season_amplitude * (1.0 - season);

    if (daylight) {
      const double half_sine = std::sin(kPi * (hour - kSunriseHour) / (kSunsetHour - kSunriseHour));
      const double clear_sky = params.ghi_peak * clear_sky_scale * half_sine;
      ghi[i] = std::max(0.0, clear_sky * attenuation +
                                 params.ghi_noise * keyed_normal(seed, kGhi, i));
      dni[i] = ghi[i] * dni_frac;
      dhi[i] = ghi[i] * dhi_frac;
    }

    temp[i] = params.temp_mean + params.temp_amplitude * (0.5 * std::sin(2.0 * kPi * (hour - 9.0) / 24.0) +
                                                          1.2 * (season - 0.5)) +
              params.temp_noise * keyed_normal(seed, kTemp, i);

    // Channels below carry no information about power by construction.
    pressure[i] = 1013.0 + 5.0 * keyed_normal(seed, kPressure, i);
    rh[i] = std::min(100.0, std::max(0.0, 60.0 + 15.0 * keyed_normal(seed, kRh, i)));
    dew_point[i] = 10.0 + 4.0 * keyed_normal(seed, kDewPoint, i);
    wind_dir[i] = std::fmod(params.wind_dir_deg + 40.0 * keyed_normal(seed, kWindDir, i) + 720.0, 360.0);
    wind_speed[i] = std::max(0.0, params.wind_mean + 1.5 * keyed_normal(seed, kWindSpeed, i));
    albedo[i] = clamp01(0.2 + 0.05 * keyed_normal(seed, kAlbedo, i));

    if (daylight) {
      const double derate =
          1.0 - kTempDeratePerDeg * std::max(0.0, temp[i] - kTempDerateStart);
      const double raw = params.capacity_kw * std::tanh(1.6 * ghi[i] / 1000.0) * derate +
                         params.capacity_kw * params.power_noise * keyed_normal(seed, kPower, i);
      power[i] = std::min(params.capacity_kw, std::max(0.0, raw));
    }
  }

  frame.units = {{"ghi", "W/m^2"},      {"dni", "W/m^2"},    {"dhi", "W/m^2"},
                 {"temp", "degC"},      {"pressure", "hPa"}, {"rh", "%"},
                 {"dew_point", "degC"}, {"wind_dir", "deg"}, {"wind_speed", "m/s"},
                 {"albedo", "1"},       {"power_kw", "kW"}};
  frame.validate();
  return frame;
}

ClimateParams shifted_params(const ClimateParams& base, double shift) {
  if (!(shift >= 0.0)) {
    throw std::invalid_argument("synth: shift must be non-negative");
  }
  ClimateParams target = base;
  target.cloudiness = clamp01(base.cloudiness + 0.35 * shift);
  target.temp_mean = base.temp_mean + 9.0 * shift;
  target.season_amplitude = clamp01(base.season_amplitude + 0.25 * shift);
  target.seed = derive_seed(base.seed, kTargetSeed);
  return target;
}

DomainPair make_domain_pair(const ClimateParams& base, double shift, int n_days,
                            std::int64_t step_seconds) {
  DomainPair pair;
  pair.source = generate_domain(base, n_days, step_seconds);
  pair.target = generate_domain(shifted_params(base, shift), n_days, step_seconds);
  return pair;
}

}  // namespace helios::synth
