#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "actland/config.hpp"
#include "actland/error.hpp"
#include "actland/pipeline.hpp"
#include "doctest.h"

using namespace actland;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[dataset]
kind = disks
lattice_spacing = 0.1

[network]
hidden = 6 6

[training]
thresholds = 0.6 0.8
max_epochs = 300
networks = 2
seed = 3

[homology]
step = 0.01

[batch]
size = 30
class = complement

[analysis]
permutations = 200
)";

ExperimentConfig minimal(const std::string& out) {
  std::istringstream in(kMinimal);
  auto cfg = parse_config(in);
  cfg.output_dir = out;
  return cfg;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("actland_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> csv_files(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

void expect_same_csvs(const fs::path& a, const fs::path& b) {
  const auto files = csv_files(a);
  REQUIRE(files == csv_files(b));
  for (const auto& f : files) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  std::istringstream in(text);
  try {
    parse_config(in);
    FAIL("accepted: " << text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("config parsing rejects typos and bad values with a line number") {
  const std::string base = "[training]\nthresholds = 0.9\n[batch]\nsize = 10\n";
  expect_config_error(base + "[homology]\nstepp = 0.01\n", "line 6: unknown key 'stepp'");
  expect_config_error(base + "[homolgy]\n", "line 5: unknown section");
  expect_config_error(base + "[homology]\nstep = 0.0x1\n", "line 6");
  expect_config_error(base + "[homology]\nstep = 0.1\nstep = 0.2\n", "already set on line 6");
  expect_config_error("thresholds = 0.9\n", "line 1: key outside any section");
  expect_config_error(base + "[homology]\nmode = global\n", "mode");
}

TEST_CASE("config validation") {
  auto check_invalid = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_config(in), Error);
  };
  check_invalid("[training]\nthresholds = 0.9 0.8\n[batch]\nsize = 10\n");
  check_invalid("[training]\nthresholds = 1.5\n[batch]\nsize = 10\n");
  check_invalid("[training]\nthresholds = 0.9\n");
  check_invalid("[training]\nthresholds = 0.9\n[batch]\nsize = 10\n[homology]\ndegree = 2\n");
  check_invalid("[training]\nthresholds = 0.9\n[batch]\nstride = 2\n[dataset]\nkind = idx\nimages = a\nlabels = b\n");
  check_invalid("[training]\nthresholds = 0.9\n[batch]\nsize = 10\n[dataset]\ncenters = 0 0 1\n");
}

TEST_CASE("canonical description round-trips and identifies the config") {
  const auto cfg = minimal("unused");
  std::istringstream again(describe(cfg));
  const auto parsed = parse_config(again);
  CHECK(describe(parsed) == describe(cfg));
  CHECK(config_hash(parsed) == config_hash(cfg));
  auto other = cfg;
  other.training.seed = 4;
  CHECK(config_hash(other) != config_hash(cfg));
  auto elsewhere = cfg;
  elsewhere.output_dir = "somewhere/else";
  CHECK(config_hash(elsewhere) == config_hash(cfg));
}

TEST_CASE("identity network keeps the square's landscape at both layers") {
  MlpParams id;
  DenseLayer layer;
  layer.inputs = layer.outputs = 2;
  layer.weights = {1, 0, 0, 1};
  layer.bias = {0, 0};
  id.layers.push_back(layer);
  const auto square = PointCloud::from_rows({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  HomologySection h;
  const auto curve = activation_landscape_curve(id, square, h);
  REQUIRE(curve.size() == 2);
  const double peak_at = (std::sqrt(0.5) + 1.0) / 2.0;
  for (const auto& ls : curve) {
    REQUIRE(ls.depth() == 1);
    CHECK(ls.value(0, peak_at) == doctest::Approx(0.146447).epsilon(1e-6));
  }
  CHECK(distance(curve[0], curve[1]) < 1e-12);
}

TEST_CASE("single-point batch fails at layer 0") {
  const auto params = init_params(MlpSpec{{2, 4, 2}, 1});
  try {
    activation_landscape_curve(params, PointCloud::from_rows({{0.3, 0.4}}), HomologySection{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCloud);
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("collapsed hidden layer gives an empty degree-1 landscape") {
  auto params = init_params(MlpSpec{{2, 3, 2}, 1});
  for (auto& w : params.layers[0].weights) w = 0.0;
  for (auto& b : params.layers[0].bias) b = -1.0;  // every unit dead
  const auto batch = PointCloud::from_rows({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto curve = activation_landscape_curve(params, batch, HomologySection{});
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].depth() == 1);
  CHECK(curve[1].depth() == 0);
  CHECK(curve[2].depth() == 0);
}

TEST_CASE("minimal run emits every artifact kind and reruns byte-identically") {
  const auto dir = scratch("minimal");
  const auto cfg = minimal(dir.string());
  const auto manifest = run_experiment(cfg, {});
  CHECK(manifest.status == "ok");
  CHECK(manifest.network_seeds == std::vector<std::uint64_t>{3, 4});
  const auto has = [&](const std::string& f) {
    return std::find(manifest.files.begin(), manifest.files.end(), f) != manifest.files.end();
  };
  for (const char* f : {"results/average_landscapes.csv", "results/average_landscapes.svg", "results/complexity.csv",
                        "results/complexity.svg", "results/pca.csv", "results/pca.svg",
                        "results/permutation_tests.csv", "manifest.json"})
    CHECK_MESSAGE(has(f), f);
  for (const auto& f : manifest.files) CHECK_MESSAGE(fs::exists(dir / f), f);

  // thresholds x (depth + 1) averages
  std::size_t averages = 0;
  for (const auto& e : fs::directory_iterator(dir / "results" / "averages")) averages += e.is_regular_file();
  CHECK(averages == 2 * 4);

  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["config_hash"] == config_hash(cfg));
  CHECK(j["status"] == "ok");

  std::istringstream tests(slurp(dir / "results" / "permutation_tests.csv"));
  std::string line;
  std::getline(tests, line);
  CHECK(line == "groupA,groupB,observed,p,n_perm,seed");
  std::getline(tests, line);
  CHECK(line.rfind("0.6,0.8,", 0) == 0);

  std::istringstream cx(slurp(dir / "results" / "complexity.csv"));
  std::getline(cx, line);
  CHECK(line == "threshold,layer,mean_norm,norm_of_mean");
  int rows = 0;
  while (std::getline(cx, line)) {
    std::istringstream fields(line);
    std::string thr, layer, mean_norm, of_mean;
    std::getline(fields, thr, ',');
    std::getline(fields, layer, ',');
    std::getline(fields, mean_norm, ',');
    std::getline(fields, of_mean, ',');
    CHECK(std::stod(of_mean) <= std::stod(mean_norm) + 1e-12);
    ++rows;
  }
  CHECK(rows == 8);

  const auto count = [](const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
  };
  // One marker per CSV row in the PCA and complexity figures.
  CHECK(count(slurp(dir / "results" / "pca.svg"), "<circle") == 8);
  CHECK(count(slurp(dir / "results" / "complexity.svg"), "<circle") == 2 * 8);

  const auto again = scratch("minimal_again");
  run_experiment(minimal(again.string()), {});
  expect_same_csvs(dir, again);

  PipelineOptions threaded;
  threaded.jobs = 3;
  const auto parallel = scratch("minimal_jobs");
  run_experiment(minimal(parallel.string()), threaded);
  expect_same_csvs(dir, parallel);
}

TEST_CASE("resuming after training matches an uninterrupted run") {
  const auto full = scratch("full");
  run_experiment(minimal(full.string()), {});

  const auto staged = scratch("staged");
  const auto cfg = minimal(staged.string());
  run_training(cfg, {});
  // Interrupted landscape stage: one file is missing.
  PipelineOptions resume;
  resume.resume = true;
  run_landscapes(cfg, resume);
  fs::remove(staged / "landscapes" / "net_000" / "thr_01" / "layer_02.csv");
  run_experiment(cfg, resume);
  expect_same_csvs(full, staged);

  auto changed = cfg;
  changed.homology.step = 0.02;
  CHECK_THROWS_WITH_AS(run_landscapes(changed, resume), doctest::Contains("different configuration"), Error);
}

TEST_CASE("networks that miss a threshold fail the run unless excluded") {
  const auto dir = scratch("unreached");
  auto cfg = minimal(dir.string());
  cfg.training.thresholds = {0.6, 1.0};
  cfg.training.train.max_epochs = 3;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, {}), doctest::Contains("ThresholdUnreached"), Error);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(std::string(j["status"]).rfind("failed", 0) == 0);
  CHECK(fs::exists(dir / "networks" / "net_000" / "snapshot_00.bin"));

  cfg.training.exclude_unreached = true;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, {}), doctest::Contains("no network met every threshold"), Error);
}
