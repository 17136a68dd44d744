#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "helios/synth.hpp"
#include "helios/timeseries.hpp"

using namespace helios;
using namespace helios::synth;

namespace {

constexpr double kPi = 3.14159265358979323846;

double hour_of(data::Timestamp t) {
  return static_cast<double>((t - kEpochStart) % 86400) / 3600.0;
}

bool is_daylight(data::Timestamp t) {
  const double h = hour_of(t);
  return h >= 6.0 && h < 18.0;
}

}  // namespace

TEST_CASE("synth: shape, grid, and full determinism") {
  ClimateParams p;
  p.seed = 11;
  auto f = generate_domain(p, 4, 1800);
  CHECK(f.size() == 4 * 48);
  CHECK(f.timestamps.front() == kEpochStart);
  CHECK(f.step_seconds() == 1800);
  CHECK(f.channels.size() == 11);
  for (const char* name : {"ghi", "dni", "dhi", "temp", "pressure", "rh", "dew_point",
                           "wind_dir", "wind_speed", "albedo", "power_kw"}) {
    CHECK(f.channels.count(name) == 1);
  }

  // A year of half-hourly rows.
  auto year = generate_domain(p, 365, 1800);
  CHECK(year.size() == 17520);

  // Bitwise reproducible.
  auto g = generate_domain(p, 4, 1800);
  CHECK(f.timestamps == g.timestamps);
  for (const auto& [name, values] : f.channels) {
    CHECK(values == g.channels.at(name));
  }

  // Different seeds differ.
  ClimateParams q = p;
  q.seed = 12;
  auto h = generate_domain(q, 4, 1800);
  CHECK(f.channels.at("ghi") != h.channels.at("ghi"));
}

TEST_CASE("synth: night rows are exactly zero; daylight fraction is one half") {
  ClimateParams p;
  p.seed = 21;
  auto f = generate_domain(p, 6, 1800);
  std::size_t night = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!is_daylight(f.timestamps[i])) {
      ++night;
      CHECK(f.channels.at("ghi")[i] == 0.0);
      CHECK(f.channels.at("dni")[i] == 0.0);
      CHECK(f.channels.at("dhi")[i] == 0.0);
      CHECK(f.channels.at("power_kw")[i] == 0.0);
    }
  }
  const double night_fraction = static_cast<double>(night) / static_cast<double>(f.size());
  CHECK(night_fraction == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("synth: physical bounds hold everywhere") {
  ClimateParams p;
  p.seed = 31;
  p.cloudiness = 0.6;
  auto f = generate_domain(p, 12, 1800);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(f.channels.at("ghi")[i] >= 0.0);
    CHECK(f.channels.at("ghi")[i] <= p.ghi_peak * 1.2);  // noise never dominates
    CHECK(f.channels.at("dni")[i] >= 0.0);
    CHECK(f.channels.at("dhi")[i] >= 0.0);
    CHECK(f.channels.at("power_kw")[i] >= 0.0);
    CHECK(f.channels.at("power_kw")[i] <= p.capacity_kw);
    CHECK(f.channels.at("rh")[i] >= 0.0);
    CHECK(f.channels.at("rh")[i] <= 100.0);
    CHECK(f.channels.at("wind_dir")[i] >= 0.0);
    CHECK(f.channels.at("wind_dir")[i] < 360.0);
    CHECK(f.channels.at("wind_speed")[i] >= 0.0);
    CHECK(f.channels.at("albedo")[i] >= 0.0);
    CHECK(f.channels.at("albedo")[i] <= 1.0);
    CHECK(std::isfinite(f.channels.at("temp")[i]));
  }
}

TEST_CASE("synth: noise-free clear-sky irradiance and power follow the closed form") {
  ClimateParams p;
  p.seed = 41;
  p.cloudiness = 0.0;
  p.ghi_noise = 0.0;
  p.temp_noise = 0.0;
  p.power_noise = 0.0;
  const int day_count = 3;
  auto f = generate_domain(p, day_count, 1800);

  for (std::size_t i = 0; i < f.size(); ++i) {
    const double h = hour_of(f.timestamps[i]);
    const auto day = static_cast<double>((f.timestamps[i] - kEpochStart) / 86400);
    if (h < 6.0 || h >= 18.0) continue;
    const double season = 0.5 * (1.0 - std::cos(2.0 * kPi * (day + 0.5) / 365.25));
    const double scale = 1.0 - p.season_amplitude * (1.0 - season);
    const double want_ghi = p.ghi_peak * scale * std::sin(kPi * (h - 6.0) / 12.0);
    CHECK(f.channels.at("ghi")[i] == doctest::Approx(want_ghi).epsilon(1e-12));

    const double temp = f.channels.at("temp")[i];
    const double derate = 1.0 - 0.004 * std::max(0.0, temp - 25.0);
    const double want_power = std::min(
        p.capacity_kw,
        std::max(0.0, p.capacity_kw * std::tanh(1.6 * want_ghi / 1000.0) * derate));
    CHECK(f.channels.at("power_kw")[i] == doctest::Approx(want_power).epsilon(1e-12));
  }

  // Noon is the daily irradiance peak.
  const auto& ghi = f.channels.at("ghi");
  for (int d = 0; d < day_count; ++d) {
    const std::size_t noon = static_cast<std::size_t>(d) * 48 + 24;
    for (std::size_t i = static_cast<std::size_t>(d) * 48; i < (static_cast<std::size_t>(d) + 1) * 48; ++i) {
      CHECK(ghi[noon] >= ghi[i]);
    }
  }
}

TEST_CASE("synth: five-minute and half-hourly frames share each day's cloud regime") {
  ClimateParams p;
  p.seed = 51;
  p.cloudiness = 0.9;  // strong day-to-day variation
  const int days = 10;
  auto coarse = generate_domain(p, days, 1800);
  auto fine = generate_domain(p, days, 300);
  CHECK(fine.size() == coarse.size() * 6);

  // Same-day mean irradiance must agree across resolutions: the cloud
  // attenuation is drawn once per day, not per row.
  for (int d = 0; d < days; ++d) {
    double mean_coarse = 0.0, mean_fine = 0.0;
    for (std::size_t i = 0; i < 48; ++i) {
      mean_coarse += coarse.channels.at("ghi")[static_cast<std::size_t>(d) * 48 + i];
    }
    for (std::size_t i = 0; i < 288; ++i) {
      mean_fine += fine.channels.at("ghi")[static_cast<std::size_t>(d) * 288 + i];
    }
    mean_coarse /= 48.0;
    mean_fine /= 288.0;
    if (mean_coarse > 30.0) {
      CHECK(mean_fine / mean_coarse == doctest::Approx(1.0).epsilon(0.10));
    }
  }
}

TEST_CASE("synth: parameter validation") {
  ClimateParams p;
  p.cloudiness = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.cloudiness = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = ClimateParams{};
  p.capacity_kw = -5.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = ClimateParams{};
  p.season_amplitude = 1.4;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  ClimateParams ok;
  CHECK_THROWS_AS(generate_domain(ok, 0, 1800), std::invalid_argument);
  CHECK_THROWS_AS(generate_domain(ok, 2, 1700), std::invalid_argument);  // must divide a day
  CHECK_THROWS_AS(generate_domain(ok, 2, 0), std::invalid_argument);
}

TEST_CASE("synth: shifted params move the climate and reseed") {
  ClimateParams base;
  base.seed = 61;
  auto t1 = shifted_params(base, 1.0);
  CHECK(t1.cloudiness == doctest::Approx(base.cloudiness + 0.35).epsilon(1e-12));
  CHECK(t1.temp_mean == doctest::Approx(base.temp_mean + 9.0).epsilon(1e-12));
  CHECK(t1.season_amplitude == doctest::Approx(base.season_amplitude + 0.25).epsilon(1e-12));
  CHECK(t1.seed != base.seed);
  CHECK(t1.capacity_kw == base.capacity_kw);

  // Zero shift keeps the distribution but still reseeds.
  auto t0 = shifted_params(base, 0.0);
  CHECK(t0.cloudiness == base.cloudiness);
  CHECK(t0.temp_mean == base.temp_mean);
  CHECK(t0.seed != base.seed);

  // Cloudiness saturates at 1.
  ClimateParams murky = base;
  murky.cloudiness = 0.9;
  CHECK(shifted_params(murky, 1.0).cloudiness == 1.0);

  CHECK_THROWS_AS(shifted_params(base, -0.5), std::invalid_argument);

  auto pair = make_domain_pair(base, 1.0, 2, 1800);
  CHECK(pair.source.size() == pair.target.size());
  CHECK(pair.source.channels.at("ghi") != pair.target.channels.at("ghi"));
}

TEST_CASE("synth: the shift measurably dims and warms the target domain") {
  ClimateParams base;
  base.seed = 71;
  auto pair = make_domain_pair(base, 1.0, 30, 1800);
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  // More cloud -> less irradiance and power; higher temp_mean -> warmer.
  CHECK(mean_of(pair.target.channels.at("ghi")) < mean_of(pair.source.channels.at("ghi")));
  CHECK(mean_of(pair.target.channels.at("power_kw")) <
        mean_of(pair.source.channels.at("power_kw")));
  CHECK(mean_of(pair.target.channels.at("temp")) >
        mean_of(pair.source.channels.at("temp")) + 5.0);
}
