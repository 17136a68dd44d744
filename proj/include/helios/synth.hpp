#pragma once

#include <cstdint>

#include "helios/timeseries.hpp"

namespace helios::synth {

/// Climate description for one synthetic plant site. Defaults describe a
/// temperate mid-latitude site with moderate cloud cover.
struct ClimateParams {
  double season_amplitude = 0.35;  // fractional winter reduction of clear-sky GHI
  double ghi_peak = 950.0;         // clear-sky midsummer noon GHI, W/m^2
  double cloudiness = 0.30;        // mean attenuation strength in [0,1]
  double temp_mean = 18.0;         // annual mean air temperature, degC
  double temp_amplitude = 8.0;     // diurnal/seasonal temperature swing, degC
  double wind_mean = 4.0;          // mean wind speed, m/s
  double wind_dir_deg = 180.0;     // dominant wind direction, deg
  double ghi_noise = 12.0;         // irradiance noise stddev, W/m^2
  double temp_noise = 0.6;         // temperature noise stddev, degC
  double power_noise = 0.01;       // power noise stddev, fraction of capacity
  double capacity_kw = 100.0;      // plant nameplate capacity, kW
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when a physical value is negative or
  /// cloudiness leaves [0,1].
  void validate() const;
};

/// Generates n_days of site data at the given step. The frame carries the
/// ten weather channels plus power_kw; rows outside the 06:00-18:00
/// daylight window have ghi, dni, dhi, and power_kw exactly zero. Output
/// is fully determined by the params (including seed), independent of
/// call order: every random draw is keyed by (seed, channel, row or day).
data::TimeSeriesFrame generate_domain(const ClimateParams& params, int n_days,
                                      std::int64_t step_seconds);

/// Derives target-site params from base by perturbing cloudiness,
/// temperature mean, and seasonality proportionally to shift, and moving
/// to an independent seed. shift = 0 keeps the distribution (new seed).
ClimateParams shifted_params(const ClimateParams& base, double shift);

struct DomainPair {
  data::TimeSeriesFrame source;
  data::TimeSeriesFrame target;
};

/// Source frame from base params, target frame from shifted_params(base, shift).
DomainPair make_domain_pair(const ClimateParams& base, double shift, int n_days,
                            std::int64_t step_seconds);

/// First timestamp of every generated frame (2020-01-01 00:00 UTC).
constexpr data::Timestamp kEpochStart = 1577836800;

}  // namespace helios::synth
