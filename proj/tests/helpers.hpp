#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "helios/dataset.hpp"
#include "helios/rng.hpp"

namespace helios::test {

/// Unique scratch directory, removed recursively on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("helios_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
  std::string str() const { return path.string(); }
};

inline data::Standardizer identity_standardizer(std::size_t n_features) {
  data::Standardizer s;
  s.mean.assign(n_features, 0.0);
  s.stddev.assign(n_features, 1.0);
  return s;
}

/// Gaussian blobs around per-class center vectors: a linearly separable
/// classification task with identity preprocessing metadata.
inline data::LabeledDataset make_blobs(std::size_t n, std::size_t n_features,
                                       std::size_t n_classes, std::uint64_t seed,
                                       double spread = 0.3,
                                       data::SplitTag tag = data::SplitTag::Train) {
  Rng rng(derive_seed(seed, 0x626c6f62));  // "blob"
  data::LabeledDataset ds;
  ds.features = Matrix(n, n_features);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = i % n_classes;
    ds.labels[i] = static_cast<int>(cls);
    for (std::size_t f = 0; f < n_features; ++f) {
      // Centers spaced 2 apart along a per-class direction pattern.
      const double center = ((cls + f) % n_classes) * 2.0 - static_cast<double>(n_classes - 1);
      ds.features.at(i, f) = center + spread * rng.normal();
    }
  }
  ds.feature_names.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) ds.feature_names[f] = "f" + std::to_string(f);
  ds.binning.n_classes = n_classes;
  ds.binning.edges.resize(n_classes + 1);
  for (std::size_t e = 0; e <= n_classes; ++e) ds.binning.edges[e] = static_cast<double>(e);
  ds.binning.domain_id = "blobs";
  ds.standardizer = identity_standardizer(n_features);
  ds.standardized = true;
  ds.split_tag = tag;
  ds.domain_id = "blobs";
  ds.validate();
  return ds;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test: cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace helios::test
