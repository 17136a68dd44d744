#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "helios/dataset.hpp"
#include "helios/model.hpp"

namespace helios::model {

/// Training lineage carried inside a checkpoint.
struct Provenance {
  std::string domain_id;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::string init = "he_uniform";
};

struct NamedBuffer {
  std::string name;
  nn::Shape shape;
  std::vector<double> values;
};

/// Everything transferred between domains: architecture, parameters,
/// BN statistics, and the preprocessing needed to feed the network
/// (standardizer, feature names, binning). Carries no training samples;
/// the file schema is whitelisted so none can ride along.
struct ModelCheckpoint {
  ArchitectureSpec spec;
  std::vector<NamedBuffer> parameters;
  std::vector<nn::RunningStats> bn_stats;
  data::Standardizer standardizer;
  std::vector<std::string> feature_names;
  data::BinningScheme binning;
  Provenance provenance;

  void validate() const;
};

/// Captures the model's current parameters and BN statistics.
ModelCheckpoint snapshot(const Model& model, const data::Standardizer& standardizer,
                         const std::vector<std::string>& feature_names,
                         const data::BinningScheme& binning, const Provenance& provenance);

/// A model loaded with the checkpoint's parameters and BN statistics.
Model restore(const ModelCheckpoint& ckpt);

/// Versioned binary container: magic, JSON header (schema-whitelisted),
/// little-endian float64 payload, CRC32. Extension `.hsckpt`.
void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Current container format version.
extern const char* const kCheckpointFormatVersion;

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace helios::model
