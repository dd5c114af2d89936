// Degree-1 persistence by reducing the coboundary matrix (the anti-transpose
// of the boundary matrix). Columns are edges visited from last to first in
// filtration order; entries are cofacet triangles; the pivot of a column is
// its earliest triangle. The pairing equals the one of the boundary-matrix
// reduction for the same total order, so diagrams agree exactly.
//
// Edges that merge components are cleared: their columns reduce to zero.
// Instead of reduced columns, the reduction matrix is stored (which edges were
// summed); the working column is rebuilt from their coboundaries in a heap.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "actland/error.hpp"
#include "actland/persistence.hpp"

namespace actland {
namespace {

struct Edge {
  double diameter;
  std::uint32_t i, j;
};

struct Triangle {
  double diameter;
  std::uint64_t code;  // i*n^2 + j*n + k with i < j < k: numeric order is lexicographic

  friend bool operator<(const Triangle& a, const Triangle& b) {
    return a.diameter != b.diameter ? a.diameter < b.diameter : a.code < b.code;
  }
  friend bool operator==(const Triangle& a, const Triangle& b) { return a.code == b.code; }
};

class CoboundaryReducer {
 public:
  CoboundaryReducer(const DistanceMatrix& dm, double r_max) : dm_(dm), r_max_(r_max) {
    n_ = dm.size();
  }

  // Unsorted cofacets of edge e.
  void coboundary(const Edge& e, std::vector<Triangle>& out) const {
    out.clear();
    const auto row_i = dm_.row(e.i);
    const auto row_j = dm_.row(e.j);
    const std::uint64_t n = n_;
    for (std::uint32_t k = 0; k < n_; ++k) {
      const double dik = row_i[k];
      const double djk = row_j[k];
      if (dik > r_max_ || djk > r_max_ || k == e.i || k == e.j) continue;
      std::uint64_t a = e.i, b = e.j, c = k;
      if (c < a) {
        std::swap(b, a);
        std::swap(a, c);  // k < i < j -> (k, i, j)
      } else if (c < b) {
        std::swap(b, c);  // i < k < j -> (i, k, j)
      }
      out.push_back({std::max({e.diameter, dik, djk}), (a * n + b) * n + c});
    }
  }

  std::size_t size() const { return n_; }

 private:
  const DistanceMatrix& dm_;
  double r_max_;
  std::size_t n_;
};

struct TriangleGreater {
  bool operator()(const Triangle& a, const Triangle& b) const { return b < a; }
};

// Sum of coboundaries kept as a min-heap with repeated entries; entries
// appearing an even number of times cancel when the pivot is extracted.
class WorkingColumn {
 public:
  void reset(const std::vector<Triangle>& entries) {
    heap_.assign(entries.begin(), entries.end());
    std::make_heap(heap_.begin(), heap_.end(), TriangleGreater{});
  }

  void add(const std::vector<Triangle>& entries) {
    for (const auto& t : entries) {
      heap_.push_back(t);
      std::push_heap(heap_.begin(), heap_.end(), TriangleGreater{});
    }
  }

  // Earliest triangle with odd multiplicity; cancelled entries are discarded.
  std::optional<Triangle> pivot() {
    while (!heap_.empty()) {
      const Triangle top = pop();
      bool odd = true;
      while (!heap_.empty() && heap_.front() == top) {
        pop();
        odd = !odd;
      }
      if (odd) {
        heap_.push_back(top);
        std::push_heap(heap_.begin(), heap_.end(), TriangleGreater{});
        return top;
      }
    }
    return std::nullopt;
  }

 private:
  Triangle pop() {
    std::pop_heap(heap_.begin(), heap_.end(), TriangleGreater{});
    const Triangle t = heap_.back();
    heap_.pop_back();
    return t;
  }

  std::vector<Triangle> heap_;
};

std::vector<std::uint32_t> cancel_pairs(std::vector<std::uint32_t> items) {
  std::sort(items.begin(), items.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j] == items[i]) ++j;
    if ((j - i) % 2 == 1) out.push_back(items[i]);
    i = j;
  }
  return out;
}

}  // namespace

std::vector<PersistenceDiagram> compute_persistence_implicit(const DistanceMatrix& dm,
                                                             int max_degree, double r_max) {
  if (max_degree < 0 || max_degree > 1) {
    throw Error(ErrorCode::InvalidInput, "max_degree must be 0 or 1");
  }
  if (!(r_max >= 0.0)) throw Error(ErrorCode::InvalidInput, "r_max must be nonnegative");
  const std::size_t n = dm.size();

  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto row = dm.row(i);
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (row[j] <= r_max) edges.push_back({row[j], i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.diameter != b.diameter) return a.diameter < b.diameter;
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });

  std::vector<PersistenceDiagram> diagrams{{0, {}}};
  std::vector<bool> negative(edges.size(), false);
  {
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    const auto find = [&](std::uint32_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto a = find(edges[e].i);
      const auto b = find(edges[e].j);
      if (a == b) continue;
      parent[std::max(a, b)] = std::min(a, b);
      negative[e] = true;
      diagrams[0].pairs.push_back({0.0, edges[e].diameter});
      --components;
    }
    for (std::size_t c = 0; c < components; ++c) diagrams[0].pairs.push_back({0.0, kInfinity});
  }
  if (max_degree == 0) return diagrams;

  diagrams.push_back({1, {}});
  auto& h1 = diagrams[1].pairs;
  const CoboundaryReducer reducer(dm, r_max);

  std::unordered_map<std::uint64_t, std::uint32_t> pivot_owner;  // triangle code -> edge
  // Reduction matrix columns, sorted, for the columns that needed additions.
  // Any other column is its own coboundary.
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> combination;
  std::vector<Triangle> column;
  WorkingColumn working;
  std::vector<std::uint32_t> summands;

  for (std::size_t idx = edges.size(); idx-- > 0;) {
    if (negative[idx]) continue;
    const auto e = static_cast<std::uint32_t>(idx);
    reducer.coboundary(edges[e], column);
    if (column.empty()) {
      h1.push_back({edges[e].diameter, kInfinity});
      continue;
    }
    const auto first = std::min_element(column.begin(), column.end());
    auto owner = pivot_owner.find(first->code);
    if (owner == pivot_owner.end()) {
      pivot_owner.emplace(first->code, e);
      h1.push_back({edges[e].diameter, first->diameter});
      continue;
    }

    working.reset(column);
    summands.assign(1, e);
    std::optional<Triangle> pivot = *first;
    while (pivot && owner != pivot_owner.end()) {
      const auto v = combination.find(owner->second);
      if (v == combination.end()) {
        summands.push_back(owner->second);
        reducer.coboundary(edges[owner->second], column);
        working.add(column);
      } else {
        for (const std::uint32_t s : v->second) {
          summands.push_back(s);
          reducer.coboundary(edges[s], column);
          working.add(column);
        }
      }
      pivot = working.pivot();
      if (pivot) owner = pivot_owner.find(pivot->code);
    }
    if (!pivot) {
      h1.push_back({edges[e].diameter, kInfinity});
      continue;
    }
    pivot_owner.emplace(pivot->code, e);
    h1.push_back({edges[e].diameter, pivot->diameter});
    combination.emplace(e, cancel_pairs(summands));
  }
  return diagrams;
}

}  // namespace actland
