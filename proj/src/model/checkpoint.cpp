#include "nobox/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nobox/core/hash.hpp"

namespace nobox::model {

namespace {

constexpr char kMagic[8] = {'N', 'O', 'B', 'O', 'X', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto size = get<std::uint64_t>(in);
  if (size > (1ULL << 32)) throw CheckpointError("checkpoint: implausible string length");
  std::string s(size, '\0');
  in.read(s.data(), static_cast<std::streamsize>(size));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return s;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, Checkpoint::kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.kind));
  put_string(out, ckpt.spec_json);
  put_string(out, sha256_hex(ckpt.spec_json));
  put<std::uint64_t>(out, ckpt.params.size());
  out.write(reinterpret_cast<const char*>(ckpt.params.data()),
            static_cast<std::streamsize>(ckpt.params.size() * sizeof(double)));
  put_string(out, ckpt.metadata_json);
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_spec_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != Checkpoint::kFormatVersion) {
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto kind = get<std::uint32_t>(in);
  if (kind != 1 && kind != 2) throw CheckpointError("checkpoint: unknown kind");
  ckpt.kind = static_cast<Checkpoint::Kind>(kind);
  ckpt.spec_json = get_string(in);
  ckpt.spec_hash = get_string(in);
  if (ckpt.spec_hash != sha256_hex(ckpt.spec_json)) {
    throw CheckpointError("checkpoint: stored spec hash does not match the stored spec");
  }
  if (expected_spec_hash && *expected_spec_hash != ckpt.spec_hash) {
    throw CheckpointError("checkpoint: spec hash mismatch (expected " + *expected_spec_hash + ", found " +
                          ckpt.spec_hash + ")");
  }
  const auto count = get<std::uint64_t>(in);
  if (count > (1ULL << 31)) throw CheckpointError("checkpoint: implausible parameter count");
  ckpt.params.resize(count);
  in.read(reinterpret_cast<char*>(ckpt.params.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw CheckpointError("checkpoint: truncated parameter block");
  ckpt.metadata_json = get_string(in);
  return ckpt;
}

void save_substitute(const std::filesystem::path& path, const SubstituteModel& model,
                     const std::string& metadata_json) {
  write_checkpoint(path, {Checkpoint::Kind::kSubstitute, model.spec().to_json(), model.spec().hash(),
                          model.parameters(), metadata_json});
}

SubstituteModel load_substitute(const std::filesystem::path& path, const std::optional<std::string>& expected_spec_hash,
                                std::string* metadata_json) {
  auto ckpt = read_checkpoint(path, expected_spec_hash);
  if (ckpt.kind != Checkpoint::Kind::kSubstitute) throw CheckpointError("checkpoint: not a substitute model");
  auto model = SubstituteModel::build(ModelSpec::from_json(ckpt.spec_json));
  if (model.param_count() != ckpt.params.size()) throw CheckpointError("checkpoint: parameter count mismatch");
  model.parameters() = std::move(ckpt.params);
  if (metadata_json) *metadata_json = ckpt.metadata_json;
  return model;
}

void save_classifier(const std::filesystem::path& path, const ClassifierNet& net, const std::string& metadata_json) {
  write_checkpoint(path, {Checkpoint::Kind::kClassifier, net.spec().to_json(), net.spec().hash(),
                          net.parameters(), metadata_json});
}

ClassifierNet load_classifier(const std::filesystem::path& path, const std::optional<std::string>& expected_spec_hash,
                              std::string* metadata_json) {
  auto ckpt = read_checkpoint(path, expected_spec_hash);
  if (ckpt.kind != Checkpoint::Kind::kClassifier) throw CheckpointError("checkpoint: not a classifier");
  auto net = ClassifierNet::build(ClassifierSpec::from_json(ckpt.spec_json));
  if (net.param_count() != ckpt.params.size()) throw CheckpointError("checkpoint: parameter count mismatch");
  net.parameters() = std::move(ckpt.params);
  if (metadata_json) *metadata_json = ckpt.metadata_json;
  return net;
}

}  // namespace nobox::model
