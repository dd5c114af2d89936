#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "actland/config.hpp"
#include "actland/landscape.hpp"
#include "actland/mlp.hpp"

namespace actland {

// Landscape of one layer's activations. Standard mode normalises to unit
// diameter; local mode uses the local-homology metric, centring only layers
// that do not end with a ReLU (the input and the logits).
Landscape layer_landscape(const PointCloud& activation, std::size_t layer, std::size_t depth,
                          const HomologySection& homology);

// lambda^(0..N) for a network on a batch. Errors carry the layer index.
LandscapeCurve activation_landscape_curve(const MlpParams& params, const PointCloud& batch,
                                          const HomologySection& homology);

DiscretizedCurve discretize_curve(const LandscapeCurve& curve, const Grid& grid);

struct RunManifest {
  std::string config_hash;
  std::vector<std::uint64_t> network_seeds;
  std::vector<std::size_t> excluded_networks;
  std::vector<std::string> files;  // relative to the output directory, sorted
  std::map<std::string, double> timings;
  std::string status = "ok";
};

struct PipelineOptions {
  std::size_t jobs = 1;
  // Reuse finished networks and landscape files already in the output directory.
  bool resume = false;
  std::ostream* log = nullptr;
};

// Stage 1: train every network and serialise its snapshots.
void run_training(const ExperimentConfig& cfg, const PipelineOptions& options);
// Stage 2: one landscape per (network, threshold, layer) from the serialised snapshots.
void run_landscapes(const ExperimentConfig& cfg, const PipelineOptions& options);
// Stage 3: averages, complexity, PCA, permutation tests, manifest.
RunManifest run_analysis(const ExperimentConfig& cfg, const PipelineOptions& options);
// All three in order.
RunManifest run_experiment(const ExperimentConfig& cfg, const PipelineOptions& options);

// Canonical text form of a config; its FNV-1a hash identifies a run.
std::string describe(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Curves of the included networks at one threshold, read back from a
// finished landscapes stage, in network order.
std::vector<DiscretizedCurve> load_curves(const ExperimentConfig& cfg, std::size_t threshold_index);

}  // namespace actland
