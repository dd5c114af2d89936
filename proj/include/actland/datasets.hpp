#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "actland/geometry.hpp"

namespace actland {

// Nine small disks (class 0) inside a larger disk whose remainder is class 1,
// sampled on the square lattice (i * spacing, j * spacing).
struct DisksConfig {
  double outer_radius = 1.0;
  std::vector<std::array<double, 2>> small_disk_centers = {
      {-0.5, -0.5}, {0.0, -0.5}, {0.5, -0.5}, {-0.5, 0.0}, {0.0, 0.0},
      {0.5, 0.0},   {-0.5, 0.5}, {0.0, 0.5},  {0.5, 0.5}};
  double small_disk_radius = 0.12;
  double lattice_spacing = 0.05;

  // Throws ConfigInvalid for overlapping or escaping disks or a bad spacing.
  void validate() const;
};

inline constexpr int kDiskClass = 0;
inline constexpr int kComplementClass = 1;

struct LabeledDataset {
  PointCloud cloud;  // always labelled
  std::vector<std::string> class_names;
  // Integer lattice coordinates per point, when generated on a lattice.
  std::vector<std::array<int, 2>> lattice;
};

LabeledDataset generate_disks(const DisksConfig& cfg);

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImages read_idx_images(std::istream& in);
std::vector<std::uint8_t> read_idx_labels(std::istream& in);
void write_idx_images(std::ostream& out, const IdxImages& images);
void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels);

// Images flattened row-major and scaled to [0, 1]; labels 0-9. Throws
// BadMagic, CountMismatch or TruncatedFile.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> batch;  // drawn from train and test together
};

// Seeded random partition (train gets round(fraction * n) points) and a random
// batch of subsample_size points. Index lists are sorted.
Split split_and_subsample(const LabeledDataset& ds, double train_fraction,
                          std::size_t subsample_size, std::uint64_t seed);

// Points whose lattice coordinates are both multiples of stride.
std::vector<std::size_t> sublattice_indices(const LabeledDataset& ds, int stride);

// Keep only indices whose label is class_id.
std::vector<std::size_t> filter_class(const LabeledDataset& ds, const std::vector<std::size_t>& indices,
                                      int class_id);

// Seeded random subset of the given size from [0, n), sorted.
std::vector<std::size_t> random_subset(std::size_t n, std::size_t size, std::uint64_t seed);

}  // namespace actland
