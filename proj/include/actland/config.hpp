#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "actland/datasets.hpp"
#include "actland/landscape.hpp"
#include "actland/mlp.hpp"
#include "actland/persistence.hpp"

namespace actland {

// Sectioned "key = value" text. '#' starts a comment; lists are
// whitespace-separated. Every key must be known; anything else is a
// ConfigInvalid error naming the line.
//
//   [dataset]   kind = disks | idx, disk geometry or IDX paths, split
//   [network]   hidden = widths between input and output
//   [training]  thresholds, optimizer, networks, seeds
//   [homology]  mode = standard | local, degree, r_max, step, engine
//   [batch]     stride or size, class filter, resamples
//   [analysis]  permutations, seed, pca
//   [output]    dir
struct DatasetSection {
  enum class Kind { Disks, Idx };
  Kind kind = Kind::Disks;
  DisksConfig disks;
  std::string images;
  std::string labels;
  double train_fraction = 0.9;
  // Idx only: draw this many images before splitting; 0 keeps all.
  std::size_t pool_size = 0;
  std::uint64_t split_seed = 7;
};

struct TrainingSection {
  std::vector<double> thresholds;
  TrainConfig train;
  std::size_t networks = 1;
  std::uint64_t seed = 0;  // network i trains with seed + i
  // Networks that miss a threshold fail the run unless this is set, in which
  // case they are left out of every group.
  bool exclude_unreached = false;
};

struct HomologySection {
  enum class Mode { Standard, Local };
  Mode mode = Mode::Standard;
  int degree = 1;
  double r_max = 1.0;
  double step = 0.001;
  PersistenceEngine engine = PersistenceEngine::Auto;
  bool cap_essential = false;  // cap infinite bars at r_max instead of dropping them
};

struct BatchSection {
  // Lattice stride for disks data; 0 means random sampling of `size` points.
  int stride = 0;
  std::size_t size = 0;
  int class_id = -1;  // -1 keeps every class
  std::size_t resamples = 1;
  std::uint64_t seed = 11;
};

struct AnalysisSection {
  std::size_t permutations = 10000;
  std::uint64_t seed = 5;
  bool pca = true;
};

struct ExperimentConfig {
  DatasetSection dataset;
  std::vector<std::size_t> hidden;
  TrainingSection training;
  HomologySection homology;
  BatchSection batch;
  AnalysisSection analysis;
  std::string output_dir = "out";

  // Input and output widths follow from the dataset kind.
  std::vector<std::size_t> widths() const;
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

}  // namespace actland
