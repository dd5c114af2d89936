#include "actland/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "actland/error.hpp"
#include "actland/kernels.hpp"

namespace actland {

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords, std::vector<int> labels)
    : dim_(dim), coords_(std::move(coords)), labels_(std::move(labels)) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidInput, "point cloud dimension must be positive");
  if (coords_.empty() || coords_.size() % dim_ != 0) {
    throw Error(ErrorCode::InvalidInput, "point cloud needs at least one complete point");
  }
  for (double v : coords_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "non-finite coordinate");
  }
  if (!labels_.empty() && labels_.size() != size()) {
    throw Error(ErrorCode::InvalidInput, "label count differs from point count");
  }
}

PointCloud PointCloud::from_rows(const std::vector<std::vector<double>>& rows,
                                 std::vector<int> labels) {
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "no points");
  const std::size_t dim = rows.front().size();
  std::vector<double> coords;
  coords.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorCode::InvalidInput, "ragged point rows");
    coords.insert(coords.end(), r.begin(), r.end());
  }
  return PointCloud(dim, std::move(coords), std::move(labels));
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<double> coords;
  coords.reserve(indices.size() * dim_);
  std::vector<int> labels;
  for (std::size_t i : indices) {
    if (i >= size()) throw Error(ErrorCode::InvalidInput, "subset index out of range");
    const auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    if (has_labels()) labels.push_back(labels_[i]);
  }
  return PointCloud(dim_, std::move(coords), std::move(labels));
}

DistanceMatrix DistanceMatrix::from_entries(std::size_t n, std::vector<double> entries) {
  if (n == 0 || entries.size() != n * n) {
    throw Error(ErrorCode::InvalidInput, "distance matrix must be n x n with n >= 1");
  }
  DistanceMatrix dm;
  dm.n_ = n;
  dm.entries_ = std::move(entries);
  for (std::size_t i = 0; i < n; ++i) {
    if (dm(i, i) != 0.0) throw Error(ErrorCode::InvalidInput, "nonzero diagonal");
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = dm(i, j);
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidInput, "bad distance");
      if (v != dm(j, i)) throw Error(ErrorCode::InvalidInput, "asymmetric distance matrix");
    }
  }
  return dm;
}

double DistanceMatrix::max_entry() const {
  return entries_.empty() ? 0.0 : *std::max_element(entries_.begin(), entries_.end());
}

DistanceMatrix pairwise_distances(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  DistanceMatrix dm(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dm.set(i, j, std::sqrt(kernels::squared_distance(cloud.point(i), cloud.point(j))));
    }
  }
  return dm;
}

double max_pairwise_distance(const PointCloud& cloud) {
  double best = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      best = std::max(best, kernels::squared_distance(cloud.point(i), cloud.point(j)));
    }
  }
  return std::sqrt(best);
}

namespace {

std::vector<double> centered_coords(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  const std::size_t d = cloud.dim();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, cloud.point(i), mean);
  kernels::scale(1.0 / static_cast<double>(n), mean);
  std::vector<double> coords = cloud.coords();
  for (std::size_t i = 0; i < n; ++i) {
    kernels::axpy(-1.0, mean, std::span<double>(coords.data() + i * d, d));
  }
  return coords;
}

}  // namespace

PointCloud center_unit_diameter(const PointCloud& cloud) {
  if (cloud.size() < 2) throw Error(ErrorCode::DegenerateCloud, "need at least two points");
  PointCloud centered(cloud.dim(), centered_coords(cloud), cloud.labels());
  const double diameter = max_pairwise_distance(centered);
  if (diameter <= 0.0) throw Error(ErrorCode::DegenerateCloud, "all points coincide");
  std::vector<double> coords = centered.coords();
  kernels::scale(1.0 / diameter, coords);
  return PointCloud(cloud.dim(), std::move(coords), cloud.labels());
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

DistanceMatrix local_homology_metric(const PointCloud& cloud, bool ends_with_relu,
                                     const LocalMetricOptions& options) {
  const std::size_t n = cloud.size();
  if (n < 2) throw Error(ErrorCode::DegenerateCloud, "need at least two points");
  const std::size_t d = cloud.dim();
  std::vector<double> coords = ends_with_relu ? cloud.coords() : centered_coords(cloud);

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> p(coords.data() + i * d, d);
    norms[i] = std::sqrt(kernels::dot(p, p));
  }
  const double med = median(norms);
  if (!(med > 0.0)) throw Error(ErrorCode::DegenerateCloud, "median norm is zero");

  std::vector<bool> far(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rescaled = norms[i] / med;
    far[i] = rescaled >= 1.0 - options.boundary_tolerance;
    // Beyond the unit ball: land on the sphere. Inside: plain rescale.
    const double factor = rescaled > 1.0 ? 1.0 / norms[i] : 1.0 / med;
    kernels::scale(factor, std::span<double>(coords.data() + i * d, d));
  }

  DistanceMatrix dm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> pi(coords.data() + i * d, d);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (far[i] && far[j]) continue;
      const std::span<const double> pj(coords.data() + j * d, d);
      dm.set(i, j, std::sqrt(kernels::squared_distance(pi, pj)));
    }
  }
  return dm;
}

void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  for (std::size_t k = 0; k < cloud.dim(); ++k) out << (k ? "," : "") << 'x' << k;
  if (cloud.has_labels()) out << ",label";
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "," : "") << p[k];
    if (cloud.has_labels()) out << ',' << cloud.labels()[i];
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

PointCloud read_point_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const bool labelled = !header.empty() && header.back() == "label";
  const std::size_t dim = header.size() - (labelled ? 1 : 0);
  if (dim == 0) throw Error(ErrorCode::InvalidInput, "CSV header has no coordinate columns");
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k] != "x" + std::to_string(k)) {
      throw Error(ErrorCode::InvalidInput, "unexpected CSV column '" + header[k] + "'");
    }
  }
  std::vector<double> coords;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::InvalidInput, "wrong field count on line " + std::to_string(line_no));
    }
    try {
      for (std::size_t k = 0; k < dim; ++k) coords.push_back(std::stod(fields[k]));
      if (labelled) labels.push_back(std::stoi(fields[dim]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidInput, "unparsable number on line " + std::to_string(line_no));
    }
  }
  return PointCloud(dim, std::move(coords), std::move(labels));
}

}  // namespace actland
