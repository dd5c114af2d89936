#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace actland {

// A finite set of points in R^dim stored row-major, optionally labelled.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dim, std::vector<double> coords, std::vector<int> labels = {});

  static PointCloud from_rows(const std::vector<std::vector<double>>& rows,
                              std::vector<int> labels = {});

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool has_labels() const { return !labels_.empty(); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<double> point(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<int>& labels() const { return labels_; }

  // Points at the given indices, in that order. Labels follow.
  PointCloud subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<int> labels_;
};

// Symmetric, zero-diagonal, nonnegative. The triangle inequality is not
// assumed: the local-homology metric violates it.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {}
  // Validates symmetry, zero diagonal, finiteness and nonnegativity.
  static DistanceMatrix from_entries(std::size_t n, std::vector<double> entries);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  // Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value) {
    entries_[i * n_ + j] = value;
    entries_[j * n_ + i] = value;
  }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * n_, n_}; }
  const std::vector<double>& entries() const { return entries_; }
  double max_entry() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

DistanceMatrix pairwise_distances(const PointCloud& cloud);

double max_pairwise_distance(const PointCloud& cloud);

// Translate the mean to the origin, then scale so the largest pairwise
// distance is 1. Throws DegenerateCloud for fewer than two distinct points.
PointCloud center_unit_diameter(const PointCloud& cloud);

struct LocalMetricOptions {
  // Rescaled norms within this distance of 1 count as "at the median".
  double boundary_tolerance = 1e-12;
};

// Local homology relative to the exterior of the unit ball:
//  1. centre unless the layer ends with a ReLU,
//  2. rescale so the median norm is 1 (even counts average the middle pair),
//  3. project vectors of norm > 1 onto the unit sphere,
//  4. Euclidean distances, except 0 between any two vectors at or beyond the median.
DistanceMatrix local_homology_metric(const PointCloud& cloud, bool ends_with_relu,
                                     const LocalMetricOptions& options = {});

// Median of the values; the mean of the two middle order statistics when even.
double median(std::vector<double> values);

// CSV with header "x0,...,x{d-1}[,label]".
void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud);
PointCloud read_point_cloud_csv(std::istream& in);

}  // namespace actland
