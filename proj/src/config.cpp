#include "actland/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "actland/error.hpp"

namespace actland {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) fail(line, "'" + text + "' is not a valid number");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& text, std::size_t line) {
  std::vector<T> out;
  for (const auto& w : words(text)) out.push_back(parse_number<T>(w, line));
  return out;
}

bool parse_bool(const std::string& text, std::size_t line) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  fail(line, "'" + text + "' is not a boolean");
}

using Setter = std::function<void(const std::string&, std::size_t)>;

template <class T>
Setter number(T& target) {
  return [&target](const std::string& v, std::size_t line) { target = parse_number<T>(v, line); };
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::widths() const {
  std::vector<std::size_t> w;
  w.push_back(dataset.kind == DatasetSection::Kind::Disks ? 2 : 784);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dataset.kind == DatasetSection::Kind::Disks ? 2 : 10);
  return w;
}

void ExperimentConfig::validate() const {
  const auto bad = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (dataset.kind == DatasetSection::Kind::Disks) {
    dataset.disks.validate();
  } else if (dataset.images.empty() || dataset.labels.empty()) {
    bad("idx datasets need both 'images' and 'labels'");
  }
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) bad("train_fraction must lie in (0, 1)");
  for (auto w : hidden) {
    if (w == 0) bad("hidden widths must be positive");
  }
  const auto& t = training.thresholds;
  if (t.empty()) bad("at least one training threshold is required");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0 && t[i] <= 1.0)) bad("thresholds must lie in (0, 1]");
    if (i > 0 && !(t[i] > t[i - 1])) bad("thresholds must be strictly increasing");
  }
  if (training.networks == 0) bad("networks must be positive");
  if (training.train.batch_size == 0) bad("batch_size must be positive");
  if (training.train.max_epochs == 0) bad("max_epochs must be positive");
  if (!(training.train.adam.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (homology.degree != 0 && homology.degree != 1) bad("homology degree must be 0 or 1");
  if (!(homology.r_max > 0.0)) bad("r_max must be positive");
  if (!(homology.step > 0.0)) bad("step must be positive");
  if (batch.stride < 0) bad("stride must be nonnegative");
  if (batch.stride > 0 && dataset.kind != DatasetSection::Kind::Disks) bad("stride sampling needs lattice data");
  if (batch.stride == 0 && batch.size < 2) bad("batch needs 'stride' or a 'size' of at least 2");
  if (batch.resamples == 0) bad("resamples must be positive");
  if (batch.stride > 0 && batch.resamples != 1) bad("a sublattice batch is fixed; resamples must be 1");
  if (output_dir.empty()) bad("output dir must not be empty");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  auto& ds = cfg.dataset;
  auto& tr = cfg.training;
  auto& ho = cfg.homology;
  auto& ba = cfg.batch;
  auto& an = cfg.analysis;

  std::map<std::string, std::map<std::string, Setter>> keys;
  keys["dataset"] = {
      {"kind",
       [&](const std::string& v, std::size_t line) {
         if (v == "disks") ds.kind = DatasetSection::Kind::Disks;
         else if (v == "idx") ds.kind = DatasetSection::Kind::Idx;
         else fail(line, "dataset kind must be 'disks' or 'idx'");
       }},
      {"outer_radius", number(ds.disks.outer_radius)},
      {"small_disk_radius", number(ds.disks.small_disk_radius)},
      {"lattice_spacing", number(ds.disks.lattice_spacing)},
      {"centers",
       [&](const std::string& v, std::size_t line) {
         const auto xs = parse_list<double>(v, line);
         if (xs.size() % 2 != 0 || xs.empty()) fail(line, "centers need x y pairs");
         ds.disks.small_disk_centers.clear();
         for (std::size_t i = 0; i < xs.size(); i += 2) ds.disks.small_disk_centers.push_back({xs[i], xs[i + 1]});
       }},
      {"images", [&](const std::string& v, std::size_t) { ds.images = v; }},
      {"labels", [&](const std::string& v, std::size_t) { ds.labels = v; }},
      {"train_fraction", number(ds.train_fraction)},
      {"pool_size", number(ds.pool_size)},
      {"split_seed", number(ds.split_seed)},
  };
  keys["network"] = {
      {"hidden", [&](const std::string& v, std::size_t line) { cfg.hidden = parse_list<std::size_t>(v, line); }},
  };
  keys["training"] = {
      {"thresholds", [&](const std::string& v, std::size_t line) { tr.thresholds = parse_list<double>(v, line); }},
      {"learning_rate", number(tr.train.adam.learning_rate)},
      {"beta1", number(tr.train.adam.beta1)},
      {"beta2", number(tr.train.adam.beta2)},
      {"epsilon", number(tr.train.adam.epsilon)},
      {"batch_size", number(tr.train.batch_size)},
      {"max_epochs", number(tr.train.max_epochs)},
      {"networks", number(tr.networks)},
      {"seed", number(tr.seed)},
      {"exclude_unreached",
       [&](const std::string& v, std::size_t line) { tr.exclude_unreached = parse_bool(v, line); }},
  };
  keys["homology"] = {
      {"mode",
       [&](const std::string& v, std::size_t line) {
         if (v == "standard") ho.mode = HomologySection::Mode::Standard;
         else if (v == "local") ho.mode = HomologySection::Mode::Local;
         else fail(line, "homology mode must be 'standard' or 'local'");
       }},
      {"degree", number(ho.degree)},
      {"r_max", number(ho.r_max)},
      {"step", number(ho.step)},
      {"engine",
       [&](const std::string& v, std::size_t line) {
         if (v == "auto") ho.engine = PersistenceEngine::Auto;
         else if (v == "explicit") ho.engine = PersistenceEngine::Explicit;
         else if (v == "implicit") ho.engine = PersistenceEngine::Implicit;
         else fail(line, "engine must be 'auto', 'explicit' or 'implicit'");
       }},
      {"cap_essential",
       [&](const std::string& v, std::size_t line) { ho.cap_essential = parse_bool(v, line); }},
  };
  keys["batch"] = {
      {"stride", number(ba.stride)},
      {"size", number(ba.size)},
      {"class",
       [&](const std::string& v, std::size_t line) {
         if (v == "all") ba.class_id = -1;
         else if (v == "disks") ba.class_id = kDiskClass;
         else if (v == "complement") ba.class_id = kComplementClass;
         else ba.class_id = parse_number<int>(v, line);
       }},
      {"resamples", number(ba.resamples)},
      {"seed", number(ba.seed)},
  };
  keys["analysis"] = {
      {"permutations", number(an.permutations)},
      {"seed", number(an.seed)},
      {"pca", [&](const std::string& v, std::size_t line) { an.pca = parse_bool(v, line); }},
  };
  keys["output"] = {
      {"dir", [&](const std::string& v, std::size_t) { cfg.output_dir = v; }},
  };

  std::string section;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail(line, "unterminated section header");
      section = trim(text.substr(1, text.size() - 2));
      if (!keys.count(section)) fail(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    if (section.empty()) fail(line, "key outside any section");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    auto& table = keys[section];
    auto it = table.find(key);
    if (it == table.end()) fail(line, "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (seen.count(full)) fail(line, "'" + full + "' already set on line " + std::to_string(seen[full]));
    seen[full] = line;
    if (value.empty()) fail(line, "'" + full + "' has no value");
    it->second(value, line);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path);
  ExperimentConfig cfg = parse_config(in);
  // Data paths are relative to the config file; the output dir is not.
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&cfg.dataset.images, &cfg.dataset.labels}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return cfg;
}

}  // namespace actland
