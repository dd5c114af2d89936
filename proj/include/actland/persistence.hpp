#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "actland/geometry.hpp"

namespace actland {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Simplex {
  std::array<std::uint32_t, 3> vertices{};  // first dim+1 entries used, strictly increasing
  std::uint8_t dim = 0;
  double diameter = 0.0;

  std::span<const std::uint32_t> vertex_list() const { return {vertices.data(), dim + 1u}; }
};

// Strict total order refining the filtration: (diameter, dimension, lexicographic vertices).
bool filtration_less(const Simplex& a, const Simplex& b);

struct Filtration {
  std::vector<Simplex> simplices;
  double r_max = 0.0;
  int max_dim = 0;
  std::size_t num_points = 0;
};

struct PersistencePair {
  double birth = 0.0;
  double death = kInfinity;

  bool essential() const { return death == kInfinity; }
  double persistence() const { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
  friend auto operator<=>(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
  int degree = 0;
  std::vector<PersistencePair> pairs;

  std::size_t finite_count() const;
  std::size_t essential_count() const;
  // Pairs sorted; equal diagrams compare equal as multisets after this.
  PersistenceDiagram canonical() const;
};

struct FiltrationOptions {
  std::size_t simplex_budget = 200'000'000;
};

// All simplices of dimension <= max_dim (0..2) whose diameter is <= r_max,
// sorted by filtration_less. Throws CapacityExceeded past the budget.
Filtration build_vr_filtration(const DistanceMatrix& dm, int max_dim, double r_max,
                               const FiltrationOptions& options = {});

struct ReductionOptions {
  // Degree 0 from a union-find sweep instead of reducing the edge columns.
  bool union_find_degree0 = true;
  // Run both degree-0 routes and throw std::logic_error if they disagree.
  bool cross_check = false;
};

// Z/2 column reduction of the boundary matrix, highest dimension first, with
// clearing. Returns diagrams for degrees 0..max_degree. Requires
// max_degree + 1 <= filt.max_dim.
std::vector<PersistenceDiagram> compute_persistence(const Filtration& filt, int max_degree,
                                                    const ReductionOptions& options = {});

// Degree-0 diagram by Kruskal-style union-find over edges <= r_max.
PersistenceDiagram zero_dim_persistence(const DistanceMatrix& dm, double r_max);

// Same diagrams as build_vr_filtration + compute_persistence, without
// materialising triangles: edges are reduced against their coboundaries,
// which are enumerated on demand from the distance matrix.
std::vector<PersistenceDiagram> compute_persistence_implicit(const DistanceMatrix& dm,
                                                             int max_degree, double r_max);

enum class PersistenceEngine { Auto, Explicit, Implicit };

struct PersistenceOptions {
  PersistenceEngine engine = PersistenceEngine::Auto;
  double r_max = 1.0;
  // Auto uses the explicit filtration up to this many points.
  std::size_t explicit_max_points = 64;
  std::size_t simplex_budget = 200'000'000;
};

std::vector<PersistenceDiagram> vr_persistence(const DistanceMatrix& dm, int max_degree,
                                               const PersistenceOptions& options = {});

// Pairs with birth <= r < death.
std::size_t betti_at(const PersistenceDiagram& diag, double r);

// Rows "degree,birth,death" with death "inf" for essential classes.
void write_diagrams_csv(std::ostream& out, std::span<const PersistenceDiagram> diagrams);
std::vector<PersistenceDiagram> read_diagrams_csv(std::istream& in);

}  // namespace actland
