#include "nobox/cli/run_config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "nobox/core/hash.hpp"

namespace nobox::cli {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects any key it was not asked about.
class StrictReader {
 public:
  StrictReader(const json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
    if (!object_.is_object()) throw ConfigError("config: '" + where() + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: field '" + path(key) + "' has the wrong type");
    }
  }

  /// null clears the value.
  template <typename T>
  void read_optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T value{};
    read(key, value);
    out = value;
  }

  /// Reads a string and converts it; conversion errors are reported against the field.
  template <typename T, typename Convert>
  void read_enum(const std::string& key, T& out, Convert convert) {
    std::string text;
    bool present = object_.contains(key);
    read(key, text);
    if (!present) return;
    try {
      out = convert(text);
    } catch (const std::exception& e) {
      throw ConfigError("config: field '" + path(key) + "': " + e.what());
    }
  }

  StrictReader child(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    static const json empty = json::object();
    return StrictReader(it == object_.end() ? empty : *it, path(key));
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.contains(key)) throw ConfigError("config: unknown field '" + path(key) + "'");
    }
  }

 private:
  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  std::string where() const { return prefix_.empty() ? "<root>" : prefix_; }

  const json& object_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like field.path=value");
  }
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->contains(path[i])) (*node)[path[i]] = json::object();
    node = &(*node)[path[i]];
    if (!node->is_object()) throw ConfigError("override '" + key + "': '" + path[i] + "' is not an object");
  }
  (*node)[path.back()] = std::move(value);
}

json to_json_object(const RunConfig& c) {
  const auto& t = c.train;
  const auto& a = c.attack;
  return {{"version", kConfigVersion},
          {"mechanism", training::to_string(c.mechanism)},
          {"n", c.n},
          {"decoders", c.decoders},
          {"targets", c.targets},
          {"model",
           {{"width", c.model.width},
            {"residual_blocks", c.model.residual_blocks},
            {"supervised_width", c.model.supervised_width},
            {"supervised_arch", model::to_string(c.model.supervised_arch)}}},
          {"train",
           {{"max_iterations", t.max_iterations},
            {"learning_rate", t.learning_rate},
            {"batch", t.batch},
            {"plateau_patience", t.plateau_patience},
            {"plateau_tolerance", t.plateau_tolerance},
            {"check_interval", t.check_interval},
            {"smoothing", t.smoothing},
            {"weight_decay", t.weight_decay}}},
          {"attack",
           {{"norm", attack::to_string(a.budget.norm)},
            {"epsilon", a.budget.epsilon},
            {"step_size", a.budget.step_size},
            {"baseline", attack::to_string(a.baseline)},
            {"baseline_iters", a.baseline_iters},
            {"ila_iters", a.ila_iters},
            {"lambda", a.lambda},
            {"num_negatives", a.num_negatives ? json(*a.num_negatives) : json(nullptr)},
            {"loss_kind", attack::to_string(a.loss_kind)}}},
          {"seeds", {{"data", c.seeds.data}, {"model", c.seeds.model}, {"attack", c.seeds.attack}}},
          {"data",
           {{"root", c.data.root.string()},
            {"class0", c.data.class0},
            {"class1", c.data.class1},
            {"image_size", c.data.image_size},
            {"channels", c.data.channels}}},
          {"output_root", c.output_root.string()}};
}

}  // namespace

void RunConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("config: field '" + field + "' " + why);
  };
  if (n < 2 || n > 40 || n % 2 != 0) fail("n", "must be even and in [2, 40]");
  if (decoders < 1) fail("decoders", "must be >= 1");
  if (decoders > 1 && mechanism != training::Mechanism::kPrototypical) {
    fail("decoders", "> 1 requires mechanism 'prototypical'");
  }
  if (targets < 1) fail("targets", "must be >= 1");
  if (model.width < 1) fail("model.width", "must be >= 1");
  if (model.residual_blocks < 0) fail("model.residual_blocks", "must be >= 0");
  if (model.supervised_width < 1) fail("model.supervised_width", "must be >= 1");
  if (data.image_size < 4 || data.image_size % 4 != 0) fail("data.image_size", "must be a positive multiple of 4");
  if (data.channels != 1 && data.channels != 3) fail("data.channels", "must be 1 or 3");
  if (data.class0.empty() || data.class1.empty()) fail("data.class0", "and data.class1 must be set");
  if (data.class0 == data.class1) fail("data.class1", "must differ from data.class0");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: train.") + e.what());
  }
  try {
    attack.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: attack.") + e.what());
  }
}

std::string RunConfig::to_json() const { return to_json_object(*this).dump(2); }

RunConfig RunConfig::from_json(const std::string& text, const std::vector<std::string>& overrides) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("config: not valid JSON");
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig c;
  StrictReader r(root, "");
  int version = 0;
  r.read("version", version);
  if (version != kConfigVersion) {
    throw ConfigError("config: field 'version' must be " + std::to_string(kConfigVersion) + " (got " +
                      std::to_string(version) + ")");
  }
  r.read_enum("mechanism", c.mechanism, training::mechanism_from_string);
  r.read("n", c.n);
  r.read("decoders", c.decoders);
  r.read("targets", c.targets);

  auto m = r.child("model");
  m.read("width", c.model.width);
  m.read("residual_blocks", c.model.residual_blocks);
  m.read("supervised_width", c.model.supervised_width);
  m.read_enum("supervised_arch", c.model.supervised_arch, model::classifier_arch_from_string);
  m.finish();

  auto t = r.child("train");
  t.read("max_iterations", c.train.max_iterations);
  t.read("learning_rate", c.train.learning_rate);
  t.read("batch", c.train.batch);
  t.read("plateau_patience", c.train.plateau_patience);
  t.read("plateau_tolerance", c.train.plateau_tolerance);
  t.read("check_interval", c.train.check_interval);
  t.read("smoothing", c.train.smoothing);
  t.read("weight_decay", c.train.weight_decay);
  t.finish();

  auto a = r.child("attack");
  a.read_enum("norm", c.attack.budget.norm, attack::norm_from_string);
  a.read("epsilon", c.attack.budget.epsilon);
  a.read("step_size", c.attack.budget.step_size);
  a.read_enum("baseline", c.attack.baseline, attack::baseline_from_string);
  a.read("baseline_iters", c.attack.baseline_iters);
  a.read("ila_iters", c.attack.ila_iters);
  a.read("lambda", c.attack.lambda);
  a.read_optional("num_negatives", c.attack.num_negatives);
  a.read_enum("loss_kind", c.attack.loss_kind, attack::loss_kind_from_string);
  a.finish();

  auto s = r.child("seeds");
  s.read("data", c.seeds.data);
  s.read("model", c.seeds.model);
  s.read("attack", c.seeds.attack);
  s.finish();

  auto d = r.child("data");
  std::string data_root = c.data.root.string();
  d.read("root", data_root);
  c.data.root = data_root;
  d.read("class0", c.data.class0);
  d.read("class1", c.data.class1);
  d.read("image_size", c.data.image_size);
  d.read("channels", c.data.channels);
  d.finish();

  std::string output = c.output_root.string();
  r.read("output_root", output);
  c.output_root = output;
  r.finish();

  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return from_json(text.str(), overrides);
}

void RunConfig::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json() << '\n';
}

std::string RunConfig::hash() const {
  auto j = to_json_object(*this);
  j.erase("output_root");
  return sha256_hex(j.dump());
}

std::string RunConfig::method_name() const {
  std::string name = training::to_string(mechanism);
  if (decoders > 1) name += "_k" + std::to_string(decoders);
  if (attack.baseline != attack::Baseline::kIfgsm) name += "_" + attack::to_string(attack.baseline);
  return name;
}

model::ModelSpec RunConfig::substitute_spec(std::uint64_t seed) const {
  model::ModelSpec spec;
  spec.input_shape = {data.channels, data.image_size, data.image_size};
  spec.base_width = model.width;
  spec.num_residual_blocks = model.residual_blocks;
  spec.decoders = decoders;
  spec.seed = seed;
  return spec;
}

model::ClassifierSpec RunConfig::supervised_spec(std::uint64_t seed) const {
  model::ClassifierSpec spec;
  spec.input_shape = {data.channels, data.image_size, data.image_size};
  spec.arch = model.supervised_arch;
  spec.width = model.supervised_width;
  spec.seed = seed;
  return spec;
}

}  // namespace nobox::cli
