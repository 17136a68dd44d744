#include "helios/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace helios::model {

const char* const kCheckpointFormatVersion = "1";

namespace {

constexpr char kMagic[8] = {'H', 'S', 'C', 'K', 'P', 'T', '\r', '\n'};

std::uint32_t crc_table_entry(std::uint32_t i) {
  std::uint32_t c = i;
  for (int k = 0; k < 8; ++k) {
    c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
  }
  return c;
}

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f64(std::string& out, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

double read_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw std::runtime_error("checkpoint: unexpected field '" + item.key() + "' in " + where +
                               " (schema allows parameters, statistics, and metadata only)");
    }
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw std::runtime_error("checkpoint: missing field '" + key + "' in " + where);
    }
  }
}

nlohmann::json spec_to_json(const ArchitectureSpec& spec) {
  nlohmann::json j;
  j["n_features"] = spec.n_features;
  j["fc_hidden"] = spec.fc_hidden;
  j["n_classes"] = spec.n_classes;
  j["activation"] = spec.activation;
  j["conv_blocks"] = nlohmann::json::array();
  for (const auto& b : spec.conv_blocks) {
    j["conv_blocks"].push_back(
        {{"channels", b.channels}, {"kernel", b.kernel}, {"stride", b.stride}, {"padding", b.padding}});
  }
  return j;
}

ArchitectureSpec spec_from_json(const nlohmann::json& j) {
  require_keys(j, {"n_features", "fc_hidden", "n_classes", "activation", "conv_blocks"},
               {"n_features", "fc_hidden", "n_classes", "activation", "conv_blocks"},
               "spec");
  ArchitectureSpec spec;
  spec.n_features = j["n_features"].get<int>();
  spec.fc_hidden = j["fc_hidden"].get<int>();
  spec.n_classes = j["n_classes"].get<int>();
  spec.activation = j["activation"].get<std::string>();
  spec.conv_blocks.clear();
  for (const auto& b : j["conv_blocks"]) {
    require_keys(b, {"channels", "kernel", "stride", "padding"},
                 {"channels", "kernel", "stride", "padding"}, "spec.conv_blocks");
    spec.conv_blocks.push_back({b["channels"].get<int>(), b["kernel"].get<int>(),
                                b["stride"].get<int>(), b["padding"].get<int>()});
  }
  return spec;
}

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) t[i] = crc_table_entry(i);
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

void ModelCheckpoint::validate() const {
  spec.validate();
  Model reference(spec, /*seed=*/0);
  const auto& expected = reference.parameters();
  if (parameters.size() != expected.size()) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(expected.size()) +
                             " parameters for this spec, found " +
                             std::to_string(parameters.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (parameters[i].name != expected[i].name ||
        parameters[i].shape != expected[i].tensor.shape()) {
      throw std::runtime_error("checkpoint: parameter " + std::to_string(i) + " ('" +
                               parameters[i].name + "') does not match the spec layout");
    }
    if (parameters[i].values.size() != nn::shape_numel(parameters[i].shape)) {
      throw std::runtime_error("checkpoint: parameter '" + parameters[i].name +
                               "' value count does not match its shape");
    }
  }
  if (bn_stats.size() != spec.conv_blocks.size()) {
    throw std::runtime_error("checkpoint: expected BN statistics for " +
                             std::to_string(spec.conv_blocks.size()) + " blocks, found " +
                             std::to_string(bn_stats.size()));
  }
  for (std::size_t i = 0; i < bn_stats.size(); ++i) {
    const auto ch = static_cast<std::size_t>(spec.conv_blocks[i].channels);
    if (bn_stats[i].mean.size() != ch || bn_stats[i].var.size() != ch) {
      throw std::runtime_error("checkpoint: BN statistics " + std::to_string(i + 1) +
                               " have the wrong channel count");
    }
  }
  if (standardizer.mean.size() != standardizer.stddev.size()) {
    throw std::runtime_error("checkpoint: standardizer mean/stddev lengths differ");
  }
  if (feature_names.size() != static_cast<std::size_t>(spec.n_features) ||
      standardizer.mean.size() != feature_names.size()) {
    throw std::runtime_error(
        "checkpoint: feature_names and standardizer must both cover n_features columns");
  }
  if (binning.n_classes != static_cast<std::size_t>(spec.n_classes)) {
    throw std::runtime_error("checkpoint: binning n_classes does not match the spec");
  }
}

ModelCheckpoint snapshot(const Model& model, const data::Standardizer& standardizer,
                         const std::vector<std::string>& feature_names,
                         const data::BinningScheme& binning, const Provenance& provenance) {
  ModelCheckpoint ckpt;
  ckpt.spec = model.spec();
  for (const auto& p : model.parameters()) {
    ckpt.parameters.push_back({p.name, p.tensor.shape(), p.tensor.values()});
  }
  ckpt.bn_stats = model.bn_stats();
  ckpt.standardizer = standardizer;
  ckpt.standardizer.floored_columns.clear();
  ckpt.feature_names = feature_names;
  ckpt.binning = binning;
  ckpt.provenance = provenance;
  ckpt.validate();
  return ckpt;
}

Model restore(const ModelCheckpoint& ckpt) {
  ckpt.validate();
  Model model(ckpt.spec, ckpt.provenance.seed);
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].tensor.values() = ckpt.parameters[i].values;
  }
  model.bn_stats() = ckpt.bn_stats;
  return model;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();

  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["spec"] = spec_to_json(ckpt.spec);
  header["parameters"] = nlohmann::json::array();
  for (const auto& p : ckpt.parameters) {
    header["parameters"].push_back({{"name", p.name}, {"shape", p.shape}});
  }
  header["bn_layers"] = ckpt.bn_stats.size();
  header["standardizer"] = {{"mean", ckpt.standardizer.mean},
                            {"stddev", ckpt.standardizer.stddev}};
  header["feature_names"] = ckpt.feature_names;
  header["binning"] = {{"n_classes", ckpt.binning.n_classes},
                       {"edges", ckpt.binning.edges},
                       {"domain_id", ckpt.binning.domain_id}};
  header["provenance"] = {{"domain_id", ckpt.provenance.domain_id},
                          {"seed", ckpt.provenance.seed},
                          {"epochs", ckpt.provenance.epochs},
                          {"init", ckpt.provenance.init}};

  const std::string header_bytes = header.dump();
  std::string blob(kMagic, sizeof(kMagic));
  append_u32(blob, static_cast<std::uint32_t>(header_bytes.size()));
  blob += header_bytes;
  for (const auto& p : ckpt.parameters) {
    for (double v : p.values) append_f64(blob, v);
  }
  for (const auto& s : ckpt.bn_stats) {
    for (double v : s.mean) append_f64(blob, v);
    for (double v : s.var) append_f64(blob, v);
  }
  append_u32(blob, crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot write " + path.string());
  }
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) {
    throw std::runtime_error("checkpoint: short write to " + path.string());
  }
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("checkpoint: cannot open " + path.string());
  }
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < sizeof(kMagic) + 8 ||
      std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const std::uint32_t stored_crc = read_u32(bytes + blob.size() - 4);
  const std::uint32_t actual_crc = crc32(bytes, blob.size() - 4);
  if (stored_crc != actual_crc) {
    throw std::runtime_error("checkpoint: checksum mismatch in " + path.string() +
                             " (file is corrupted or truncated)");
  }

  const std::uint32_t header_len = read_u32(bytes + sizeof(kMagic));
  const std::size_t header_off = sizeof(kMagic) + 4;
  if (header_off + header_len + 4 > blob.size()) {
    throw std::runtime_error("checkpoint: header length overruns " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.begin() + static_cast<std::ptrdiff_t>(header_off),
                                   blob.begin() + static_cast<std::ptrdiff_t>(header_off + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: malformed header in " + path.string() + ": " + e.what());
  }

  require_keys(header,
               {"format_version", "spec", "parameters", "bn_layers", "standardizer",
                "feature_names", "binning", "provenance"},
               {"format_version", "spec", "parameters", "bn_layers", "standardizer",
                "feature_names", "binning", "provenance"},
               "header");
  const auto version = header["format_version"].get<std::string>();
  if (version != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format version '" + version +
                             "' (this build reads version " +
                             std::string(kCheckpointFormatVersion) + ")");
  }

  ModelCheckpoint ckpt;
  ckpt.spec = spec_from_json(header["spec"]);

  std::size_t payload_doubles = 0;
  for (const auto& p : header["parameters"]) {
    require_keys(p, {"name", "shape"}, {"name", "shape"}, "parameters");
    NamedBuffer buf;
    buf.name = p["name"].get<std::string>();
    buf.shape = p["shape"].get<nn::Shape>();
    payload_doubles += nn::shape_numel(buf.shape);
    ckpt.parameters.push_back(std::move(buf));
  }
  const auto bn_layers = header["bn_layers"].get<std::size_t>();
  if (bn_layers != ckpt.spec.conv_blocks.size()) {
    throw std::runtime_error("checkpoint: bn_layers does not match the spec");
  }
  for (std::size_t i = 0; i < bn_layers; ++i) {
    payload_doubles += 2 * static_cast<std::size_t>(ckpt.spec.conv_blocks[i].channels);
  }

  const std::size_t payload_off = header_off + header_len;
  const std::size_t payload_bytes = blob.size() - 4 - payload_off;
  if (payload_bytes != payload_doubles * 8) {
    throw std::runtime_error("checkpoint: payload size mismatch in " + path.string());
  }

  const unsigned char* cursor = bytes + payload_off;
  for (auto& p : ckpt.parameters) {
    const std::size_t n = nn::shape_numel(p.shape);
    p.values.resize(n);
    for (std::size_t i = 0; i < n; ++i, cursor += 8) p.values[i] = read_f64(cursor);
  }
  for (std::size_t b = 0; b < bn_layers; ++b) {
    const auto ch = static_cast<std::size_t>(ckpt.spec.conv_blocks[b].channels);
    nn::RunningStats stats;
    stats.mean.resize(ch);
    stats.var.resize(ch);
    for (std::size_t i = 0; i < ch; ++i, cursor += 8) stats.mean[i] = read_f64(cursor);
    for (std::size_t i = 0; i < ch; ++i, cursor += 8) stats.var[i] = read_f64(cursor);
    ckpt.bn_stats.push_back(std::move(stats));
  }

  require_keys(header["standardizer"], {"mean", "stddev"}, {"mean", "stddev"}, "standardizer");
  ckpt.standardizer.mean = header["standardizer"]["mean"].get<std::vector<double>>();
  ckpt.standardizer.stddev = header["standardizer"]["stddev"].get<std::vector<double>>();
  ckpt.feature_names = header["feature_names"].get<std::vector<std::string>>();
  require_keys(header["binning"], {"n_classes", "edges", "domain_id"},
               {"n_classes", "edges", "domain_id"}, "binning");
  ckpt.binning.n_classes = header["binning"]["n_classes"].get<std::size_t>();
  ckpt.binning.edges = header["binning"]["edges"].get<std::vector<double>>();
  ckpt.binning.domain_id = header["binning"]["domain_id"].get<std::string>();
  require_keys(header["provenance"], {"domain_id", "seed", "epochs", "init"},
               {"domain_id", "seed", "epochs", "init"}, "provenance");
  ckpt.provenance.domain_id = header["provenance"]["domain_id"].get<std::string>();
  ckpt.provenance.seed = header["provenance"]["seed"].get<std::uint64_t>();
  ckpt.provenance.epochs = header["provenance"]["epochs"].get<int>();
  ckpt.provenance.init = header["provenance"]["init"].get<std::string>();

  ckpt.validate();
  return ckpt;
}

}  // namespace helios::model
