#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helios/csv.hpp"
#include "helios/dataset.hpp"
#include "helios/timeseries.hpp"

#include "helpers.hpp"

using namespace helios;
using namespace helios::data;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TimeSeriesFrame small_frame(std::size_t n, std::int64_t step, Timestamp start = 1577836800) {
  TimeSeriesFrame f;
  for (std::size_t i = 0; i < n; ++i) {
    f.timestamps.push_back(start + static_cast<Timestamp>(i) * step);
  }
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<double>(i);
    b[i] = 10.0 + 0.5 * static_cast<double>(i);
  }
  f.channels["alpha"] = a;
  f.channels["beta"] = b;
  return f;
}

}  // namespace

TEST_CASE("timestamps: parse and format round-trip, rejects junk") {
  CHECK(parse_timestamp("1970-01-01 00:00") == 0);
  CHECK(parse_timestamp("1970-01-01 00:01:30") == 90);
  CHECK(parse_timestamp("2020-01-01 00:00") == 1577836800);
  CHECK(parse_timestamp("2020-01-01T00:00:00Z") == 1577836800);
  CHECK(parse_timestamp("2020-06-15 12:30") == parse_timestamp("2020-06-15T12:30"));

  CHECK(format_timestamp(1577836800) == "2020-01-01 00:00");
  CHECK(format_timestamp(0) == "1970-01-01 00:00");
  // Round trip across a leap year boundary.
  for (const char* s : {"2020-02-29 23:30", "2021-12-31 05:00", "1999-07-04 16:45"}) {
    CHECK(format_timestamp(parse_timestamp(s)) == s);
  }

  CHECK_THROWS(parse_timestamp("not a time"));
  CHECK_THROWS(parse_timestamp("2020/01/01 00:00"));
  CHECK_THROWS(parse_timestamp(""));
}

TEST_CASE("frame validation: uniform strictly increasing grid") {
  auto f = small_frame(5, 1800);
  CHECK(f.step_seconds() == 1800);
  f.validate();

  auto dup = f;
  dup.timestamps[2] = dup.timestamps[1];
  CHECK_THROWS(dup.validate());

  auto ragged = f;
  ragged.timestamps[3] += 60;
  CHECK_THROWS(ragged.validate());

  auto short_channel = f;
  short_channel.channels["alpha"].pop_back();
  CHECK_THROWS(short_channel.validate());
}

TEST_CASE("resample: window means, trailing partial window dropped, NaN rejected") {
  auto f = small_frame(7, 300);  // 5-minute data, 7 rows
  auto r = resample_mean(f, 600);  // 2-sample windows -> 3 full windows
  CHECK(r.size() == 3);
  CHECK(r.step_seconds() == 600);
  CHECK(r.timestamps[0] == f.timestamps[0]);
  CHECK(r.timestamps[1] == f.timestamps[2]);
  // alpha is 0,1,2,...: window means 0.5, 2.5, 4.5
  CHECK(r.channels.at("alpha")[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.channels.at("alpha")[1] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(r.channels.at("alpha")[2] == doctest::Approx(4.5).epsilon(1e-15));

  // Identity when the step already matches.
  auto same = resample_mean(f, 300);
  CHECK(same.size() == f.size());
  CHECK(same.channels.at("beta") == f.channels.at("beta"));

  // Downsampling only, and the factor must divide.
  CHECK_THROWS(resample_mean(f, 150));
  CHECK_THROWS(resample_mean(f, 450));

  auto with_nan = f;
  with_nan.channels["alpha"][1] = std::nan("");
  CHECK_THROWS(resample_mean(with_nan, 600));
}

TEST_CASE("join: inner join on timestamps carrying both channel sets") {
  auto weather = small_frame(6, 1800, 1577836800);
  TimeSeriesFrame solar;
  // Overlaps rows 2..5 of weather, plus two rows past the end.
  for (int i = 0; i < 6; ++i) {
    solar.timestamps.push_back(1577836800 + (2 + i) * 1800);
  }
  solar.channels["power_kw"] = {1, 2, 3, 4, 5, 6};

  auto joined = align_join(weather, solar);
  CHECK(joined.frame.size() == 4);
  CHECK(joined.dropped_rows == 4);  // weather rows 0,1 + solar rows 4,5
  CHECK(joined.frame.channels.count("alpha") == 1);
  CHECK(joined.frame.channels.count("power_kw") == 1);
  CHECK(joined.frame.channels.at("power_kw")[0] == 1.0);
  CHECK(joined.frame.channels.at("alpha")[0] == 2.0);

  // Step mismatch and empty overlap are errors.
  auto fine = small_frame(6, 300);
  CHECK_THROWS(align_join(weather, fine));
  auto far = small_frame(4, 1800, 1577836800 + 100 * 1800);
  CHECK_THROWS(align_join(weather, far));
}

TEST_CASE("csv: schema round-trip and frame round-trip") {
  test::TempDir dir("csv");
  auto f = small_frame(5, 1800);
  write_frame_csv(f, dir / "frame.csv");

  auto schema = CsvSchema::identity({"alpha", "beta"});
  schema.save(dir / "schema.json");
  auto loaded_schema = CsvSchema::load(dir / "schema.json");
  CHECK(loaded_schema.timestamp_column == schema.timestamp_column);
  CHECK(loaded_schema.columns == schema.columns);

  auto g = ingest_csv(dir / "frame.csv", loaded_schema);
  CHECK(g.timestamps == f.timestamps);
  REQUIRE(g.channels.count("alpha") == 1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(g.channels["alpha"][i] == doctest::Approx(f.channels["alpha"][i]).epsilon(1e-12));
    CHECK(g.channels["beta"][i] == doctest::Approx(f.channels["beta"][i]).epsilon(1e-12));
  }
}

TEST_CASE("csv: header mapping, sorting, and malformed input errors") {
  test::TempDir dir("csvbad");

  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    out << text;
    return dir / name;
  };

  CsvSchema schema;
  schema.timestamp_column = "time";
  schema.columns = {{"GHI (W/m2)", "ghi"}, {"Temp", "temp"}};

  // Out-of-order rows are sorted by timestamp.
  auto good = write("good.csv",
                    "time,GHI (W/m2),Temp,Ignored\n"
                    "2020-01-01 01:00,5.5,1.0,x\n"
                    "2020-01-01 00:00,4.5,2.0,y\n"
                    "2020-01-01 02:00,6.5,3.0,z\n");
  auto f = ingest_csv(good, schema);
  CHECK(f.size() == 3);
  CHECK(f.channels.at("ghi")[0] == 4.5);  // sorted to the front
  CHECK(f.channels.at("ghi")[2] == 6.5);
  CHECK(f.channels.count("Ignored") == 0);  // unmapped columns dropped

  // Duplicate timestamp: error names the line.
  auto dup = write("dup.csv",
                   "time,GHI (W/m2),Temp\n"
                   "2020-01-01 00:00,1,2\n"
                   "2020-01-01 00:00,3,4\n");
  CHECK_THROWS_WITH_AS(ingest_csv(dup, schema), doctest::Contains("line 3"), ConfigError);

  // Unparseable cell: error names the line.
  auto bad_cell = write("badcell.csv",
                        "time,GHI (W/m2),Temp\n"
                        "2020-01-01 00:00,1,2\n"
                        "2020-01-01 00:30,oops,4\n");
  CHECK_THROWS_WITH_AS(ingest_csv(bad_cell, schema), doctest::Contains("line 3"), ConfigError);

  // A mapped column missing from the header.
  auto missing = write("missing.csv", "time,Temp\n2020-01-01 00:00,2\n");
  CHECK_THROWS_AS(ingest_csv(missing, schema), ConfigError);

  // Missing timestamp column.
  auto no_ts = write("nots.csv", "GHI (W/m2),Temp\n1,2\n");
  CHECK_THROWS_AS(ingest_csv(no_ts, schema), ConfigError);

  // Nonexistent file.
  CHECK_THROWS_AS(ingest_csv(dir / "absent.csv", schema), ConfigError);

  // Ragged row (wrong cell count).
  auto ragged = write("ragged.csv",
                      "time,GHI (W/m2),Temp\n"
                      "2020-01-01 00:00,1,2\n"
                      "2020-01-01 00:30,3\n");
  CHECK_THROWS_AS(ingest_csv(ragged, schema), ConfigError);
}

TEST_CASE("binning: equal-width edges over [0, max], boundary and clamp rules") {
  const std::vector<double> power = {0.0, 10.0, 25.0, 50.0, 100.0};
  auto bins = fit_bins(power, 5, "dom");
  REQUIRE(bins.edges.size() == 6);
  CHECK(bins.edges.front() == 0.0);
  CHECK(bins.edges.back() == 100.0);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(bins.edges[i + 1] - bins.edges[i] == doctest::Approx(20.0).epsilon(1e-12));
  }

  CHECK(assign_label(0.0, bins) == 0);
  CHECK(assign_label(19.999, bins) == 0);
  CHECK(assign_label(20.0, bins) == 1);  // left-closed intervals
  CHECK(assign_label(99.9, bins) == 4);
  CHECK(assign_label(100.0, bins) == 4);  // top edge belongs to the top class

  std::size_t clamped = 0;
  CHECK(assign_label(150.0, bins, &clamped) == 4);  // above-range clamps
  CHECK(clamped == 1);

  auto lr = labels_for({0.0, 20.0, 99.0, 130.0, 55.0}, bins);
  CHECK(lr.labels == std::vector<int>{0, 1, 4, 4, 2});
  CHECK(lr.clamped == 1);

  CHECK_THROWS(fit_bins(power, 0));
  CHECK_THROWS(fit_bins({}, 5));
  CHECK_THROWS(fit_bins({-1.0, 5.0}, 5));  // negative power
  CHECK_THROWS(fit_bins({0.0, 0.0}, 5));   // zero range
}

TEST_CASE("standardizer: population moments, stddev floor, round-trip") {
  Matrix m(4, 2);
  // col0: 1,2,3,4 -> mean 2.5, population stddev sqrt(1.25)
  // col1: constant 7 -> stddev floored
  for (std::size_t r = 0; r < 4; ++r) {
    m.at(r, 0) = static_cast<double>(r + 1);
    m.at(r, 1) = 7.0;
  }
  auto s = fit_standardizer(m);
  CHECK(s.mean[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(s.stddev[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
  CHECK(s.mean[1] == 7.0);
  CHECK(s.stddev[1] == 1e-8);
  CHECK(s.floored_columns == std::vector<std::size_t>{1});

  auto z = apply_standardizer(m, s);
  // Standardized column has mean 0, stddev 1.
  double mean = 0.0;
  for (std::size_t r = 0; r < 4; ++r) mean += z.at(r, 0);
  CHECK(std::abs(mean / 4.0) < 1e-14);

  auto back = invert_standardizer(z, s);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    CHECK(back.data[i] == doctest::Approx(m.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("split sizes: ratios respected within one sample, chronological order kept") {
  auto sizes = split_sizes(100, {0.7, 0.15, 0.15});
  CHECK(sizes.train == 70);
  CHECK(sizes.val == 15);
  CHECK(sizes.test == 15);

  for (std::size_t n : {10, 17, 33, 101, 1000, 17520}) {
    auto s = split_sizes(n, {0.7, 0.15, 0.15});
    CHECK(s.train + s.val + s.test == n);
    CHECK(std::abs(static_cast<double>(s.train) - 0.7 * static_cast<double>(n)) < 1.0);
    CHECK(std::abs(static_cast<double>(s.val) - 0.15 * static_cast<double>(n)) < 1.0);
    CHECK(std::abs(static_cast<double>(s.test) - 0.15 * static_cast<double>(n)) < 1.0);
  }
  CHECK_THROWS(split_sizes(100, {0.5, 0.2, 0.2}));  // must sum to 1

  auto f = small_frame(20, 1800);
  auto split = split_chronological(f, {0.7, 0.15, 0.15});
  CHECK(split.train.size() == 14);
  CHECK(split.val.size() == 3);
  CHECK(split.test.size() == 3);
  CHECK(split.train.timestamps.back() < split.val.timestamps.front());
  CHECK(split.val.timestamps.back() < split.test.timestamps.front());
  CHECK(split.train.channels.at("alpha").front() == 0.0);
  CHECK(split.test.channels.at("alpha").back() == 19.0);
}

TEST_CASE("prepare_domain: NaN rows dropped, train-fit preprocessing applied everywhere") {
  TimeSeriesFrame f;
  const std::size_t n = 40;
  Rng rng(404);
  for (std::size_t i = 0; i < n; ++i) f.timestamps.push_back(1577836800 + 1800 * (Timestamp)i);
  std::vector<double> ghi(n), temp(n), power(n);
  for (std::size_t i = 0; i < n; ++i) {
    ghi[i] = rng.uniform(0.0, 900.0);
    temp[i] = rng.uniform(-5.0, 35.0);
    power[i] = ghi[i] / 10.0 + rng.uniform(0.0, 2.0);
  }
  ghi[5] = std::nan("");  // one corrupt row
  f.channels["ghi"] = ghi;
  f.channels["temp"] = temp;
  f.channels["power_kw"] = power;

  PipelineOptions opts;
  opts.n_classes = 4;
  opts.domain_id = "unit";
  auto prepared = prepare_domain(f, opts);

  CHECK(prepared.rows_dropped_nan == 1);
  const std::size_t kept = n - 1;
  CHECK(prepared.train.size() + prepared.val.size() + prepared.test.size() == kept);
  CHECK(prepared.train.domain_id == "unit");
  CHECK(prepared.train.binning.n_classes == 4);

  // Power is not a feature; the two weather channels are.
  CHECK(prepared.train.n_features() == 2);
  CHECK(prepared.train.feature_names == std::vector<std::string>{"ghi", "temp"});

  // All splits share the train-fit binning and standardizer.
  CHECK(prepared.val.binning.edges == prepared.train.binning.edges);
  CHECK(prepared.test.standardizer.mean == prepared.train.standardizer.mean);
  CHECK(prepared.val.split_tag == SplitTag::Val);

  // Train features are standardized: per-column mean ~0, stddev ~1.
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < prepared.train.size(); ++r) {
      mean += prepared.train.features.at(r, c);
    }
    mean /= static_cast<double>(prepared.train.size());
    for (std::size_t r = 0; r < prepared.train.size(); ++r) {
      const double d = prepared.train.features.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(prepared.train.size());
    CHECK(std::abs(mean) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }

  // Raw features invert the standardization.
  auto raw = prepared.train.raw_features();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < n && checked < prepared.train.size(); ++i) {
    if (i == 5) continue;  // dropped row
    CHECK(raw.at(checked, 0) == doctest::Approx(ghi[i]).epsilon(1e-9));
    ++checked;
  }

  // Unstandardized pipeline keeps raw units.
  PipelineOptions raw_opts = opts;
  raw_opts.standardize = false;
  auto plain = prepare_domain(f, raw_opts);
  CHECK_FALSE(plain.train.standardized);
  CHECK(plain.train.features.at(0, 0) == doctest::Approx(ghi[0]).epsilon(1e-12));

  // Missing power channel is an error.
  TimeSeriesFrame no_power = f;
  no_power.channels.erase("power_kw");
  CHECK_THROWS(prepare_domain(no_power, opts));
}

TEST_CASE("dataset directory: save/load round-trip and byte determinism") {
  test::TempDir dir("dsdir");
  auto ds = test::make_blobs(30, 4, 3, 99);
  ds.domain_id = "roundtrip";
  ds.split_tag = SplitTag::Val;
  ds.binning.domain_id = "roundtrip";

  save_dataset(ds, dir / "a");
  auto back = load_dataset(dir / "a");
  back.validate();
  CHECK(back.labels == ds.labels);
  CHECK(back.feature_names == ds.feature_names);
  CHECK(back.domain_id == "roundtrip");
  CHECK(back.split_tag == SplitTag::Val);
  CHECK(back.standardized == ds.standardized);
  CHECK(back.binning.n_classes == ds.binning.n_classes);
  REQUIRE(back.features.data.size() == ds.features.data.size());
  for (std::size_t i = 0; i < ds.features.data.size(); ++i) {
    CHECK(back.features.data[i] == ds.features.data[i]);  // exact round-trip
  }
  for (std::size_t i = 0; i < ds.binning.edges.size(); ++i) {
    CHECK(back.binning.edges[i] == ds.binning.edges[i]);
  }

  // Writing the same dataset twice produces identical bytes.
  save_dataset(ds, dir / "b");
  CHECK(slurp(dir.path / "a" / "features.csv") == slurp(dir.path / "b" / "features.csv"));
  CHECK(slurp(dir.path / "a" / "labels.csv") == slurp(dir.path / "b" / "labels.csv"));
  CHECK(slurp(dir.path / "a" / "meta.json") == slurp(dir.path / "b" / "meta.json"));

  // Loading a non-dataset directory fails cleanly.
  CHECK_THROWS(load_dataset(dir / "nope"));
}

TEST_CASE("dataset: standardized_with and histogram") {
  auto ds = test::make_blobs(24, 3, 4, 7);
  auto hist = ds.label_histogram();
  CHECK(hist == std::vector<std::size_t>{6, 6, 6, 6});

  // Identity stats: bit-exact passthrough.
  auto same = ds.features_standardized_with(ds.standardizer);
  CHECK(same.data == ds.features.data);

  // Different stats: apply to raw values.
  Standardizer other;
  other.mean = {1.0, 1.0, 1.0};
  other.stddev = {2.0, 2.0, 2.0};
  auto shifted = ds.features_standardized_with(other);
  for (std::size_t i = 0; i < ds.features.data.size(); ++i) {
    CHECK(shifted.data[i] == doctest::Approx((ds.features.data[i] - 1.0) / 2.0).epsilon(1e-12));
  }
}
