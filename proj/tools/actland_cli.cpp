#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>

#include "actland/config.hpp"
#include "actland/error.hpp"
#include "actland/persistence.hpp"
#include "actland/pipeline.hpp"
#include "oracles/ph_oracle.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::pair<double, double>> finite_pairs(const actland::PersistenceDiagram& d) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : d.pairs)
    if (p.death > p.birth) out.push_back({p.birth, p.death});
  std::sort(out.begin(), out.end());
  return out;
}

// Random clouds of 3..7 points in R^2 and R^3, both engines against the
// brute-force rank computation, degrees 0 and 1, Betti numbers at every
// critical scale.
int oracle_check(std::uint64_t seed, int trials) {
  using namespace actland;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial) % 5;
    const std::size_t dim = 2 + static_cast<std::size_t>(trial) % 2;
    std::vector<double> coords(n * dim);
    for (auto& c : coords) c = u(rng);
    const auto dm = pairwise_distances(PointCloud(dim, coords));
    const auto expected = oracle::brute_force_persistence(dm);
    bool ok = true;
    for (auto engine : {PersistenceEngine::Explicit, PersistenceEngine::Implicit}) {
      PersistenceOptions po;
      po.engine = engine;
      po.r_max = dm.max_entry();
      const auto got = vr_persistence(dm, 1, po);
      for (int k = 0; k <= 1; ++k) {
        ok = ok && finite_pairs(got[k]) == expected.diagrams[k];
        for (std::size_t s = 0; s < expected.scales.size(); ++s)
          ok = ok && static_cast<int>(betti_at(got[k], expected.scales[s])) == expected.betti[k][s];
      }
    }
    if (!ok) {
      ++failures;
      std::cout << "mismatch: trial " << trial << " (" << n << " points in R^" << dim << ")\n";
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << trials - failures << "/" << trials << " clouds match the rank oracle (" << secs << " s)\n";
  return failures == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activation landscapes of trained perceptrons"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool resume = false;

  auto* train = app.add_subcommand("train", "train networks and write threshold snapshots");
  auto* landscapes = app.add_subcommand("landscapes", "activation landscapes of every snapshot");
  auto* analyze = app.add_subcommand("analyze", "averages, complexity, PCA and permutation tests");
  auto* all = app.add_subcommand("all", "train, landscapes and analyze in order");
  auto* oracle_cmd = app.add_subcommand("oracle-check", "persistence against a brute-force rank computation");

  for (auto* sub : {train, landscapes, analyze, all}) {
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "base seed for network initialization (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--resume", resume, "keep finished work in the output directory");
  }
  int trials = 100;
  std::uint64_t oracle_seed = 1;
  oracle_cmd->add_option("--seed", oracle_seed, "random seed");
  oracle_cmd->add_option("--trials", trials, "number of random clouds")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--jobs", jobs, "ignored; the check is single-threaded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (oracle_cmd->parsed()) {
    try {
      return oracle_check(oracle_seed, trials);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }

  actland::ExperimentConfig cfg;
  try {
    cfg = actland::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    for (auto* sub : {train, landscapes, analyze, all}) {
      if (sub->parsed() && sub->count("--seed") > 0) cfg.training.seed = seed;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  actland::PipelineOptions options;
  options.jobs = jobs;
  options.resume = resume;
  options.log = &std::cerr;
  try {
    if (train->parsed()) {
      actland::run_training(cfg, options);
    } else if (landscapes->parsed()) {
      actland::run_landscapes(cfg, options);
    } else if (analyze->parsed()) {
      actland::run_analysis(cfg, options);
    } else {
      actland::run_experiment(cfg, options);
    }
  } catch (const actland::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == actland::ErrorCode::ConfigInvalid ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
