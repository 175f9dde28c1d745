#include "nobox/evaluation/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nobox::eval {

using nlohmann::json;

namespace {

std::string percent(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * accuracy);
  return buf;
}

}  // namespace

double EvalReport::accuracy(const std::string& victim) const { return victims.at(victim).accuracy(); }

double EvalReport::average() const {
  if (victims.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [name, count] : victims) s += count.accuracy();
  return s / static_cast<double>(victims.size());
}

std::string EvalReport::to_json() const {
  json v = json::object();
  for (const auto& [name, count] : victims) {
    v[name] = {{"correct", count.correct}, {"total", count.total}, {"accuracy", count.accuracy()}};
  }
  json j = {{"method", method}, {"victims", v},       {"average", average()},
            {"config_hash", config_hash}, {"seed", seed}, {"incomplete", incomplete}};
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const auto j = json::parse(text);
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  for (const auto& [name, v] : j.at("victims").items()) {
    r.victims[name] = {v.at("correct").get<std::size_t>(), v.at("total").get<std::size_t>()};
  }
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.incomplete = j.value("incomplete", false);
  return r;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& [name, count] : victims) out << ',' << name;
  out << ",Average\n" << (method.empty() ? "-" : method);
  for (const auto& [name, count] : victims) out << ',' << percent(count.accuracy());
  out << ',' << percent(average()) << '\n';
  return out.str();
}

const std::vector<std::string>& standard_method_order() {
  static const std::vector<std::string> order{"naive_ae", "jigsaw", "rotation", "naive_supervised", "prototypical"};
  return order;
}

ComparisonTable ComparisonTable::from_reports(const std::vector<EvalReport>& reports,
                                              const std::vector<std::string>& preferred_order) {
  ComparisonTable t;
  std::set<std::string> victim_names;
  std::map<std::string, const EvalReport*> by_method;
  for (const auto& r : reports) {
    if (by_method.contains(r.method)) throw std::invalid_argument("report: duplicate method '" + r.method + "'");
    by_method[r.method] = &r;
    for (const auto& [name, count] : r.victims) victim_names.insert(name);
  }
  t.victims.assign(victim_names.begin(), victim_names.end());
  for (const auto& m : preferred_order) {
    if (by_method.contains(m)) t.methods.push_back(m);
  }
  for (const auto& [m, r] : by_method) {
    if (std::find(t.methods.begin(), t.methods.end(), m) == t.methods.end()) t.methods.push_back(m);
  }
  for (const auto& m : t.methods) {
    std::vector<std::optional<double>> row;
    for (const auto& v : t.victims) {
      const auto& victims = by_method[m]->victims;
      const auto it = victims.find(v);
      if (it == victims.end()) {
        row.emplace_back();
        t.consistent = false;
      } else {
        row.emplace_back(it->second.accuracy());
      }
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

std::optional<double> ComparisonTable::average(std::size_t method) const {
  double s = 0.0;
  for (const auto& c : cells.at(method)) {
    if (!c) return std::nullopt;
    s += *c;
  }
  return cells[method].empty() ? std::nullopt : std::optional<double>(s / static_cast<double>(cells[method].size()));
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& v : victims) out << ',' << v;
  out << ",Average\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << methods[m];
    for (const auto& c : cells[m]) out << ',' << (c ? percent(*c) : "");
    const auto avg = average(m);
    out << ',' << (avg ? percent(*avg) : "") << '\n';
  }
  return out.str();
}

std::string ComparisonTable::to_markdown() const {
  std::ostringstream out;
  out << "| method |";
  for (const auto& v : victims) out << ' ' << v << " |";
  out << " Average |\n|---|";
  for (std::size_t i = 0; i <= victims.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << "| " << methods[m] << " |";
    for (const auto& c : cells[m]) out << ' ' << (c ? percent(*c) + "%" : "") << " |";
    const auto avg = average(m);
    out << ' ' << (avg ? percent(*avg) + "%" : "") << " |\n";
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace nobox::eval
