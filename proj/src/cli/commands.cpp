#include "nobox/cli/commands.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "nobox/attack/budget.hpp"
#include "nobox/cli/plot.hpp"
#include "nobox/core/hash.hpp"
#include "nobox/core/rng.hpp"
#include "nobox/data/io.hpp"
#include "nobox/data/sampling.hpp"
#include "nobox/data/toy.hpp"
#include "nobox/evaluation/victim.hpp"
#include "nobox/experiment/toy_suite.hpp"
#include "nobox/model/checkpoint.hpp"

#ifndef NOBOX_VERSION
#define NOBOX_VERSION "0.0.0"
#endif

namespace nobox::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string tool_version() { return NOBOX_VERSION; }

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string target_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%04d", t);
  return buf;
}

// Same file order as data::load_class_dir.
std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::jthread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

void say(const RunOptions& o, const std::string& message) {
  static std::mutex mu;
  if (o.log == nullptr) return;
  std::lock_guard lock(mu);
  *o.log << message << std::endl;
}

// The two classes of a run, loaded once.
struct RunData {
  std::vector<data::ImageTensor> images[2];
  std::vector<fs::path> files[2];
  std::string names[2];
};

RunData load_run_data(const RunConfig& c) {
  if (c.data.root.empty()) throw ConfigError("config: field 'data.root' must be set");
  RunData d;
  d.names[0] = c.data.class0;
  d.names[1] = c.data.class1;
  const data::ImageGeometry geometry{c.data.channels, c.data.image_size, c.data.image_size};
  for (int y = 0; y < 2; ++y) {
    const auto dir = c.data.root / d.names[y];
    d.images[y] = data::load_class_dir(dir, geometry);
    d.files[y] = png_files(dir);
  }
  const int needed0 = (c.targets + 1) / 2, needed1 = c.targets / 2;
  if (static_cast<int>(d.images[0].size()) < std::max(needed0, c.n / 2) ||
      static_cast<int>(d.images[1].size()) < std::max(needed1, c.n / 2)) {
    throw ConfigError("config: " + std::to_string(c.targets) + " targets with n=" + std::to_string(c.n) +
                      " need more images than " + c.data.root.string() + " provides");
  }
  return d;
}

data::TargetRef target_ref(int t) { return {t % 2, static_cast<std::size_t>(t / 2)}; }

data::AuxiliarySet target_aux(const RunConfig& c, const RunData& d, int t) {
  return data::sample_auxiliary_set(d.images[0], d.images[1], static_cast<std::size_t>(c.n), target_ref(t),
                                    derive_seed(c.seeds.data, static_cast<std::uint64_t>(t)));
}

std::uint64_t model_seed(const RunConfig& c, int t) { return derive_seed(c.seeds.model, 2 * static_cast<std::uint64_t>(t)); }
std::uint64_t train_seed(const RunConfig& c, int t) {
  return derive_seed(c.seeds.model, 2 * static_cast<std::uint64_t>(t) + 1);
}

bool supervised(const RunConfig& c) { return c.mechanism == training::Mechanism::kNaiveSupervised; }

/// Writes config.json on first use; refuses a directory that holds another config.
void prepare_run_dir(const RunConfig& c) {
  const auto path = c.output_root / "config.json";
  if (fs::exists(path)) {
    const auto existing = RunConfig::load(path);
    if (existing.hash() != c.hash()) {
      throw ConfigError("output_root " + c.output_root.string() + " holds a run with a different config (hash " +
                        existing.hash().substr(0, 12) + ", this config " + c.hash().substr(0, 12) + ")");
    }
    return;
  }
  c.save(path);
}

RunManifest load_or_new_manifest(const RunConfig& c) {
  RunManifest m;
  if (fs::exists(c.output_root / "manifest.json")) m = RunManifest::read(c.output_root);
  m.tool_version = tool_version();
  m.config_hash = c.hash();
  m.method = c.method_name();
  if (m.targets.size() != static_cast<std::size_t>(c.targets)) {
    m.targets.assign(c.targets, {});
    for (int t = 0; t < c.targets; ++t) m.targets[t].index = t;
  }
  return m;
}

/// Rounds to the 8-bit grid while staying inside the budget; x0 itself is
/// expected on the grid (true for PNG inputs at their native size).
data::ImageTensor quantize_feasible(const data::ImageTensor& x0, const data::ImageTensor& x,
                                    const attack::Budget& budget) {
  const auto grid = [](double v) { return std::clamp(std::round(v * 255.0) / 255.0, 0.0, 1.0); };
  std::vector<double> q(x.size());
  if (budget.norm == attack::Norm::kLinf) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double a = x0.pixels()[i];
      double v = grid(x.pixels()[i]);
      // Step back toward x0 one grid level at a time.
      for (int k = 0; k < 2 && std::abs(v - a) > budget.epsilon + 1e-9; ++k) v += (a > v ? 1.0 : -1.0) / 255.0;
      q[i] = v;
    }
  } else {
    for (double s = 1.0; s > 0.0; s -= 0.01) {
      for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = grid(x0.pixels()[i] + s * (x.pixels()[i] - x0.pixels()[i]));
      }
      if (attack::is_feasible(x0, data::ImageTensor(x.channels(), x.height(), x.width(), q), budget)) break;
    }
  }
  data::ImageTensor out(x.channels(), x.height(), x.width(), std::move(q));
  if (!attack::is_feasible(x0, out, budget)) {
    throw std::runtime_error("crafted example cannot be stored as 8-bit PNG inside the budget; the input is not on "
                             "the 8-bit grid (was it resized?)");
  }
  return out;
}

struct VictimSet {
  std::vector<std::string> classes;
  std::vector<eval::LocalVictim> victims;
};

VictimSet load_victims(const fs::path& dir) {
  const auto path = dir / "victims.json";
  if (!fs::exists(path)) throw std::runtime_error("victim set: " + path.string() + " not found");
  const auto j = json::parse(read_file(path));
  VictimSet set;
  set.classes = j.at("classes").get<std::vector<std::string>>();
  for (const auto& v : j.at("victims")) {
    auto net = model::load_classifier(dir / v.at("checkpoint").get<std::string>());
    if (net.spec().num_classes != static_cast<int>(set.classes.size())) {
      throw std::runtime_error("victim set: " + v.at("name").get<std::string>() + " has " +
                               std::to_string(net.spec().num_classes) + " outputs for " +
                               std::to_string(set.classes.size()) + " classes");
    }
    set.victims.emplace_back(std::move(net), eval::VictimInfo{v.at("name").get<std::string>(),
                                                              v.value("train_set_id", std::string())});
  }
  if (set.victims.empty()) throw std::runtime_error("victim set: no victims listed in " + path.string());
  return set;
}

std::vector<double> read_log_losses(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> loss;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    if (a == std::string::npos) continue;
    loss.push_back(std::stod(line.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1)));
  }
  return loss;
}

}  // namespace

// ---- manifest ---------------------------------------------------------------

std::string RunManifest::to_json() const {
  json targets_json = json::array();
  for (const auto& t : targets) {
    targets_json.push_back({{"index", t.index},
                            {"class", t.class_name},
                            {"source", t.source},
                            {"checkpoint", t.checkpoint},
                            {"train_log", t.train_log},
                            {"adversarial", t.adversarial},
                            {"sidecar", t.sidecar}});
  }
  return json{{"tool_version", tool_version},
              {"config_hash", config_hash},
              {"method", method},
              {"targets", targets_json},
              {"reports", reports},
              {"file_hashes", file_hashes},
              {"timings", timings},
              {"content_hash", content_hash}}
      .dump(2);
}

RunManifest RunManifest::read(const fs::path& run_dir) {
  const auto j = json::parse(read_file(run_dir / "manifest.json"));
  RunManifest m;
  m.tool_version = j.at("tool_version");
  m.config_hash = j.at("config_hash");
  m.method = j.at("method");
  for (const auto& t : j.at("targets")) {
    m.targets.push_back({t.at("index"), t.at("class"), t.at("source"), t.at("checkpoint"), t.at("train_log"),
                         t.at("adversarial"), t.at("sidecar")});
  }
  m.reports = j.at("reports").get<std::vector<std::string>>();
  m.file_hashes = j.at("file_hashes").get<std::map<std::string, std::string>>();
  m.timings = j.at("timings").get<std::map<std::string, double>>();
  m.content_hash = j.at("content_hash");
  return m;
}

void RunManifest::write(const fs::path& run_dir) {
  file_hashes.clear();
  const auto add = [&](const std::string& rel) {
    if (rel.empty()) return;
    const auto path = run_dir / rel;
    if (!fs::exists(path)) throw std::runtime_error("manifest: artifact " + path.string() + " does not exist");
    file_hashes[rel] = sha256_hex(read_file(path));
  };
  for (const auto& t : targets) {
    for (const auto* rel : {&t.checkpoint, &t.train_log, &t.adversarial, &t.sidecar}) add(*rel);
  }
  for (const auto& r : reports) add(r);
  auto j = json::parse(to_json());
  j.erase("timings");
  j.erase("content_hash");
  content_hash = sha256_hex(j.dump());
  write_file(run_dir / "manifest.json", to_json() + "\n");
}

// ---- train --------------------------------------------------------------------

void cmd_train(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const auto t0 = Clock::now();
  const auto d = load_run_data(config);
  prepare_run_dir(config);
  auto manifest = load_or_new_manifest(config);

  parallel_for(config.targets, options.jobs, [&](int t) {
    const auto dir = fs::path("targets") / target_name(t);
    fs::create_directories(config.output_root / dir);
    const auto aux = target_aux(config, d, t);
    auto train = config.train;
    train.mechanism = config.mechanism;
    train.seed = train_seed(config, t);
    json meta = {{"target", t}, {"config_hash", config.hash()}, {"mechanism", training::to_string(config.mechanism)}};
    const auto ckpt = dir / "substitute.ckpt";
    training::TrainLog log;
    if (supervised(config)) {
      auto r = training::train_naive_supervised(model::ClassifierNet::build(config.supervised_spec(model_seed(config, t))),
                                                aux, train);
      model::save_classifier(config.output_root / ckpt, r.net, meta.dump());
      log = std::move(r.log);
    } else {
      auto r = training::train_substitute(model::SubstituteModel::build(config.substitute_spec(model_seed(config, t))),
                                          aux, train);
      if (r.bank) {
        json pairs = json::array();
        for (const auto& p : r.bank->pairs) pairs.push_back({p.class0_index, p.class1_index});
        meta["bank"] = pairs;
      }
      model::save_substitute(config.output_root / ckpt, r.model, meta.dump());
      log = std::move(r.log);
    }
    log.write_csv(config.output_root / dir / "train_log.csv");
    auto& art = manifest.targets[t];
    const auto ref = target_ref(t);
    art.class_name = d.names[ref.label];
    art.source = d.files[ref.label][ref.index].string();
    art.checkpoint = ckpt.string();
    art.train_log = (dir / "train_log.csv").string();
    say(options, "train " + target_name(t) + ": " + std::to_string(log.stopped_at) + " iterations, best loss " +
                     std::to_string(log.best_smoothed_loss));
  });
  manifest.timings["train"] = seconds_since(t0);
  manifest.write(config.output_root);
}

// ---- craft --------------------------------------------------------------------

void cmd_craft(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const auto t0 = Clock::now();
  const auto d = load_run_data(config);
  prepare_run_dir(config);
  auto manifest = load_or_new_manifest(config);

  parallel_for(config.targets, options.jobs, [&](int t) {
    const auto ckpt = config.output_root / "targets" / target_name(t) / "substitute.ckpt";
    if (!fs::exists(ckpt)) throw std::runtime_error("craft: " + ckpt.string() + " missing; run train first");
    auto aux = target_aux(config, d, t);
    auto attack_config = config.attack;
    attack_config.seed = derive_seed(config.seeds.attack, static_cast<std::uint64_t>(t));
    std::string meta_text;
    attack::CraftResult crafted;
    try {
      if (supervised(config)) {
        const auto net = model::load_classifier(ckpt, config.supervised_spec(model_seed(config, t)).hash(), &meta_text);
        crafted = attack::craft(net, aux, attack_config);
      } else {
        const auto m = model::load_substitute(ckpt, config.substitute_spec(model_seed(config, t)).hash(), &meta_text);
        std::optional<data::PrototypeBank> bank;
        const auto meta = json::parse(meta_text);
        if (meta.contains("bank")) {
          bank.emplace();
          for (const auto& p : meta.at("bank")) {
            const std::size_t i0 = p.at(0), i1 = p.at(1);
            bank->pairs.push_back({i0, i1, aux.examples.at(i0).image, aux.examples.at(i1).image});
          }
        }
        crafted = attack::craft(m, aux, bank ? &*bank : nullptr, attack_config);
      }
    } catch (const model::CheckpointError& e) {
      throw ConfigError(std::string("craft: checkpoint does not match the config: ") + e.what());
    }
    if (json::parse(meta_text).at("config_hash") != config.hash()) {
      throw ConfigError("craft: " + ckpt.string() + " was trained under a different config");
    }
    const auto& x0 = aux.target().image;
    const auto stored = quantize_feasible(x0, crafted.image, attack_config.budget);
    const auto name = target_name(t);
    const auto png = fs::path("adversarial") / (name + ".png");
    const auto side = fs::path("adversarial") / (name + ".json");
    fs::create_directories(config.output_root / "adversarial");
    data::write_png(config.output_root / png, stored);
    const auto ref = target_ref(t);
    json sidecar = {{"target", t},
                    {"source", d.files[ref.label][ref.index].string()},
                    {"class", d.names[ref.label]},
                    {"aux_label", ref.label},
                    {"method", config.method_name()},
                    {"config_hash", config.hash()},
                    {"norm", attack::to_string(attack_config.budget.norm)},
                    {"epsilon", attack_config.budget.epsilon},
                    {"linf", attack::linf_distance(x0, stored)},
                    {"l2", attack::l2_distance(x0, stored)},
                    {"record", json::parse(crafted.record.to_json())}};
    write_file(config.output_root / side, sidecar.dump(2) + "\n");
    auto& art = manifest.targets[t];
    art.class_name = d.names[ref.label];
    art.source = d.files[ref.label][ref.index].string();
    art.adversarial = png.string();
    art.sidecar = side.string();
    say(options, "craft " + name + ": linf " + std::to_string(attack::linf_distance(x0, stored)) + ", loss " +
                     std::to_string(crafted.record.final_loss));
  });
  manifest.timings["craft"] = seconds_since(t0);
  manifest.write(config.output_root);
}

// ---- eval -----------------------------------------------------------------------

eval::EvalReport cmd_eval(const EvalOptions& options) {
  if (!fs::is_directory(options.adversarial_dir)) {
    throw ConfigError("eval: " + options.adversarial_dir.string() + " is not a directory");
  }
  if (options.victims_dir.empty() && !options.remote) throw ConfigError("eval: no victims given");
  const auto files = png_files(options.adversarial_dir);
  if (files.empty()) throw std::runtime_error("eval: no adversarial PNGs in " + options.adversarial_dir.string());

  struct Item {
    data::ImageTensor image;
    std::string class_name;
    int aux_label = 0;
  };
  std::vector<Item> items;
  std::string method, config_hash;
  for (const auto& png : files) {
    auto side = png;
    side.replace_extension(".json");
    if (!fs::exists(side)) throw std::runtime_error("eval: missing sidecar " + side.string());
    const auto j = json::parse(read_file(side));
    items.push_back({data::read_png(png), j.at("class"), j.at("aux_label")});
    method = j.value("method", method);
    config_hash = j.value("config_hash", config_hash);
  }

  eval::EvalReport report;
  report.method = method;
  report.config_hash = config_hash;
  std::vector<std::string> classes;
  if (!options.victims_dir.empty()) {
    const auto set = load_victims(options.victims_dir);
    classes = set.classes;
    std::vector<data::LabeledImage> examples;
    for (const auto& it : items) {
      const auto pos = std::find(classes.begin(), classes.end(), it.class_name);
      if (pos == classes.end()) throw std::runtime_error("eval: class '" + it.class_name + "' unknown to the victims");
      examples.push_back({it.image, static_cast<int>(pos - classes.begin())});
    }
    for (const auto& v : set.victims) report.victims[v.info().name] = eval::count_correct(v, examples);
  }
  if (options.remote) {
    // Remote labels follow the victim class list when there is one, else the auxiliary labels.
    std::vector<data::LabeledImage> examples;
    for (const auto& it : items) {
      const auto pos = std::find(classes.begin(), classes.end(), it.class_name);
      examples.push_back({it.image, classes.empty() ? it.aux_label : static_cast<int>(pos - classes.begin())});
    }
    const auto remote = eval::remote_victim_eval(*options.remote, examples);
    for (const auto& [name, count] : remote.victims) report.victims[name] = count;
    report.incomplete = remote.incomplete;
  }
  if (!options.out_dir.empty()) {
    write_file(options.out_dir / "report.json", report.to_json() + "\n");
    write_file(options.out_dir / "report.csv", report.to_csv());
  }
  return report;
}

// ---- report ---------------------------------------------------------------------

ReportOutputs cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  struct Run {
    RunConfig config;
    eval::EvalReport report;
    fs::path dir;
  };
  std::vector<Run> runs;
  std::map<std::string, int> name_count;
  for (const auto& dir : run_dirs) {
    if (!fs::exists(dir / "report.json")) throw std::runtime_error("report: " + dir.string() + " has no report.json");
    Run r{RunConfig::load(dir / "config.json"), eval::EvalReport::from_json(read_file(dir / "report.json")), dir};
    r.report.method = r.config.method_name();
    ++name_count[r.report.method];
    runs.push_back(std::move(r));
  }
  // Sweeps repeat a method name; label those rows with their run directory.
  std::vector<eval::EvalReport> reports;
  for (auto& r : runs) {
    auto rep = r.report;
    if (name_count[rep.method] > 1) rep.method += "@" + r.dir.filename().string();
    reports.push_back(std::move(rep));
  }
  ReportOutputs out;
  out.table = eval::ComparisonTable::from_reports(reports, eval::standard_method_order());
  fs::create_directories(out_dir);
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(out_dir / name, text);
    out.files.push_back(out_dir / name);
  };
  emit("table.csv", out.table.to_csv());
  emit("table.md", out.table.to_markdown());

  std::vector<Series> curves;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto log = runs[i].dir / "targets" / target_name(0) / "train_log.csv";
    if (!fs::exists(log)) continue;
    const auto loss = read_log_losses(log);
    Series s{reports[i].method, {}, {}};
    const std::size_t stride = std::max<std::size_t>(1, loss.size() / 400);
    for (std::size_t k = 0; k < loss.size(); k += stride) {
      s.x.push_back(static_cast<double>(k + 1));
      s.y.push_back(loss[k]);
    }
    if (!s.x.empty()) curves.push_back(std::move(s));
  }
  if (!curves.empty()) {
    emit("training_curves.svg", line_plot_svg({"Substitute training loss (first target)", "iteration", "loss"}, curves));
  }

  // Sweeps: average victim accuracy against n (per method) and against K (prototypical).
  const auto sweep = [&](auto key_of, auto x_of, auto include) {
    std::map<std::string, std::map<double, double>> groups;
    for (const auto& r : runs) {
      if (include(r.config)) groups[key_of(r.config)][x_of(r.config)] = 100.0 * r.report.average();
    }
    std::vector<Series> series;
    for (const auto& [name, points] : groups) {
      if (points.size() < 2) continue;
      Series s{name, {}, {}};
      for (const auto& [x, y] : points) {
        s.x.push_back(x);
        s.y.push_back(y);
      }
      series.push_back(std::move(s));
    }
    return series;
  };
  const auto n_series = sweep([](const RunConfig& c) { return c.method_name(); },
                              [](const RunConfig& c) { return static_cast<double>(c.n); },
                              [](const RunConfig&) { return true; });
  if (!n_series.empty()) {
    emit("n_sweep.svg", line_plot_svg({"Attack performance against auxiliary set size", "n (training images)",
                                       "average victim accuracy (%)"},
                                      n_series));
  }
  const auto k_series = sweep(
      [](const RunConfig& c) { return "prototypical (" + attack::to_string(c.attack.baseline) + ")"; },
      [](const RunConfig& c) { return static_cast<double>(c.decoders); },
      [](const RunConfig& c) { return c.mechanism == training::Mechanism::kPrototypical; });
  if (!k_series.empty()) {
    emit("k_sweep.svg", line_plot_svg({"Attack performance against decoder count", "K (decoders)",
                                       "average victim accuracy (%)"},
                                      k_series));
  }
  return out;
}

// ---- pipeline -------------------------------------------------------------------

eval::EvalReport cmd_pipeline(const RunConfig& config, const EvalOptions& eval_options, const RunOptions& options) {
  cmd_train(config, options);
  cmd_craft(config, options);
  const auto t0 = Clock::now();
  auto e = eval_options;
  e.adversarial_dir = config.output_root / "adversarial";
  e.out_dir = config.output_root;
  const auto report = cmd_eval(e);
  cmd_report({config.output_root}, config.output_root / "report");
  auto manifest = load_or_new_manifest(config);
  manifest.reports = {"report.json", "report.csv", "report/table.csv"};
  manifest.timings["eval_report"] = seconds_since(t0);
  manifest.write(config.output_root);
  return report;
}

// ---- toy data and victims -----------------------------------------------------------

void cmd_toy_data(const ToyDataOptions& options) {
  if (options.out.empty()) throw ConfigError("toy-data: --out is required");
  if (options.per_class < 1) throw ConfigError("toy-data: --per-class must be >= 1");
  auto style = experiment::SuiteConfig{}.style;
  style.size = options.size;
  style.channels = options.channels;
  std::vector<data::ToyShape> shapes;
  try {
    const auto names = options.shapes.empty() ? data::toy_shape_names() : options.shapes;
    for (const auto& name : names) shapes.push_back(data::toy_shape_from_string(name));
  } catch (const data::DataError& e) {
    throw ConfigError(std::string("toy-data: ") + e.what());
  }
  data::write_dataset(options.out, data::generate_toy_dataset(shapes, options.per_class, style, options.seed));
}

void cmd_victims(const VictimOptions& options) {
  if (options.data_root.empty() || options.out.empty()) throw ConfigError("victims: --data and --out are required");
  const auto classes = data::list_class_dirs(options.data_root);
  if (classes.size() < 2) throw ConfigError("victims: need at least two class directories");
  const data::ImageGeometry geometry{options.channels, options.size, options.size};
  std::vector<data::LabeledImage> train;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (auto& img : data::load_class_dir(options.data_root / classes[c], geometry)) {
      train.push_back({std::move(img), static_cast<int>(c)});
    }
  }
  const std::string train_set_id = sha256_hex(json(classes).dump() + options.data_root.string()).substr(0, 16);
  json listing = {{"classes", classes}, {"victims", json::array()}};
  std::uint64_t stream = 0;
  for (auto arch : {model::ClassifierArch::kVgg, model::ClassifierArch::kResNet, model::ClassifierArch::kWide}) {
    model::ClassifierSpec spec;
    spec.input_shape = {options.channels, options.size, options.size};
    spec.arch = arch;
    spec.width = options.width;
    spec.num_classes = static_cast<int>(classes.size());
    spec.dropout = 0.25;
    spec.seed = derive_seed(options.seed, stream++);
    training::FitOptions fit{.epochs = options.epochs, .augmentation = {.noise = 0.03}};
    fit.seed = derive_seed(spec.seed, 1);
    const auto r = training::fit_classifier(model::ClassifierNet::build(spec), train, fit);
    const std::string file = model::to_string(arch) + ".ckpt";
    fs::create_directories(options.out);
    model::save_classifier(options.out / file, r.net);
    const eval::LocalVictim v(r.net, {model::to_string(arch), train_set_id});
    listing["victims"].push_back({{"name", model::to_string(arch)},
                                  {"checkpoint", file},
                                  {"train_set_id", train_set_id},
                                  {"train_accuracy", eval::accuracy_on(v, train)}});
  }
  write_file(options.out / "victims.json", listing.dump(2) + "\n");
}

}  // namespace nobox::cli
