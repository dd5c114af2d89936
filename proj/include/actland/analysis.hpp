#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "actland/landscape.hpp"

namespace actland {

// Landscape curves of independently trained networks under one condition.
struct CurveGroup {
  std::string label;
  std::vector<DiscretizedCurve> curves;
};

struct TestResult {
  double observed_statistic = 0.0;
  double p_value = 1.0;  // (1 + #{permuted >= observed}) / (1 + permutations)
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

// Two-sample permutation test on the distance between group-mean curves in
// the product Hilbert space. Group labels are permuted over the pooled curves
// with group sizes fixed; replicate r draws from its own stream, so the
// result does not depend on `threads`.
TestResult permutation_test(const CurveGroup& a, const CurveGroup& b, std::size_t permutations,
                            std::uint64_t seed, std::size_t threads = 1);

// Pairwise inner products of the curves.
std::vector<double> gram_matrix(std::span<const DiscretizedCurve> curves);

struct PcaResult {
  std::size_t components = 0;
  std::vector<double> coordinates;         // samples x components, row-major
  std::vector<double> explained_variance;  // per component, divided by (n - 1)
  double total_variance = 0.0;
  std::vector<double> loadings;            // components x dimension, unit rows

  double coordinate(std::size_t sample, std::size_t component) const {
    return coordinates[sample * components + component];
  }
};

// Principal components of equal-length vectors, through the Gram matrix when
// there are fewer samples than dimensions. Each component's first nonzero
// loading is positive. Throws DegenerateInput when all vectors coincide.
PcaResult pca_project(const std::vector<std::vector<double>>& vectors, std::size_t k = 2);

// Per-layer norms ("topological complexity") of a curve.
std::vector<double> complexity_curve(const DiscretizedCurve& curve);
std::vector<double> complexity_curve(const LandscapeCurve& curve);

// Layers concatenated; each layer padded to `levels_per_layer[i]` levels.
std::vector<double> flatten_curve(const DiscretizedCurve& curve,
                                  std::span<const std::size_t> levels_per_layer);

void write_test_results_csv(std::ostream& out,
                            std::span<const std::pair<std::pair<std::string, std::string>, TestResult>> rows);

}  // namespace actland
