#include "actland/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "actland/error.hpp"

namespace actland {

bool filtration_less(const Simplex& a, const Simplex& b) {
  if (a.diameter != b.diameter) return a.diameter < b.diameter;
  if (a.dim != b.dim) return a.dim < b.dim;
  return std::lexicographical_compare(a.vertices.begin(), a.vertices.begin() + a.dim + 1,
                                      b.vertices.begin(), b.vertices.begin() + b.dim + 1);
}

std::size_t PersistenceDiagram::finite_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return !p.essential(); }));
}

std::size_t PersistenceDiagram::essential_count() const { return pairs.size() - finite_count(); }

PersistenceDiagram PersistenceDiagram::canonical() const {
  PersistenceDiagram out = *this;
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

Filtration build_vr_filtration(const DistanceMatrix& dm, int max_dim, double r_max,
                               const FiltrationOptions& options) {
  if (max_dim < 0 || max_dim > 2) throw Error(ErrorCode::InvalidInput, "max_dim must be 0..2");
  if (!(r_max >= 0.0)) throw Error(ErrorCode::InvalidInput, "r_max must be nonnegative");
  const std::size_t n = dm.size();

  // Count first so an oversized request fails before allocating.
  std::size_t count = n;
  if (max_dim >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (dm(i, j) > r_max) continue;
        ++count;
        if (max_dim >= 2) {
          for (std::size_t k = j + 1; k < n; ++k) {
            if (dm(i, k) <= r_max && dm(j, k) <= r_max) ++count;
          }
        }
        if (count > options.simplex_budget) {
          throw Error(ErrorCode::CapacityExceeded,
                      "more than " + std::to_string(options.simplex_budget) + " simplices");
        }
      }
    }
  }

  Filtration filt;
  filt.r_max = r_max;
  filt.max_dim = max_dim;
  filt.num_points = n;
  filt.simplices.reserve(count);
  const auto u32 = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  for (std::size_t i = 0; i < n; ++i) filt.simplices.push_back({{u32(i), 0, 0}, 0, 0.0});
  if (max_dim >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dij = dm(i, j);
        if (dij > r_max) continue;
        filt.simplices.push_back({{u32(i), u32(j), 0}, 1, dij});
        if (max_dim < 2) continue;
        for (std::size_t k = j + 1; k < n; ++k) {
          const double dik = dm(i, k);
          const double djk = dm(j, k);
          if (dik <= r_max && djk <= r_max) {
            filt.simplices.push_back({{u32(i), u32(j), u32(k)}, 2, std::max({dij, dik, djk})});
          }
        }
      }
    }
  }
  std::sort(filt.simplices.begin(), filt.simplices.end(), filtration_less);
  return filt;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

using Column = std::vector<std::uint32_t>;

void add_column(Column& target, const Column& source, Column& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

std::uint64_t edge_key(std::uint32_t i, std::uint32_t j, std::size_t n) {
  return static_cast<std::uint64_t>(i) * n + j;
}

// Degree-0 diagram from the filtration's edges, in filtration order. Marks the
// edges that merge components.
PersistenceDiagram union_find_from_filtration(const Filtration& filt,
                                              std::vector<bool>& negative_edge) {
  UnionFind uf(filt.num_points);
  PersistenceDiagram diag{0, {}};
  std::size_t components = filt.num_points;
  for (std::size_t pos = 0; pos < filt.simplices.size(); ++pos) {
    const Simplex& s = filt.simplices[pos];
    if (s.dim != 1) continue;
    if (uf.unite(s.vertices[0], s.vertices[1])) {
      negative_edge[pos] = true;
      diag.pairs.push_back({0.0, s.diameter});
      --components;
    }
  }
  for (std::size_t c = 0; c < components; ++c) diag.pairs.push_back({0.0, kInfinity});
  return diag;
}

}  // namespace

std::vector<PersistenceDiagram> compute_persistence(const Filtration& filt, int max_degree,
                                                    const ReductionOptions& options) {
  if (max_degree < 0 || max_degree > 1) {
    throw Error(ErrorCode::InvalidInput, "max_degree must be 0 or 1");
  }
  if (max_degree + 1 > filt.max_dim) {
    throw Error(ErrorCode::InvalidInput, "filtration lacks the dimension needed for max_degree");
  }
  const std::size_t m = filt.simplices.size();
  const std::size_t n = filt.num_points;

  std::unordered_map<std::uint64_t, std::uint32_t> edge_position;
  edge_position.reserve(m);
  std::vector<std::uint32_t> vertex_position(n);
  for (std::size_t pos = 0; pos < m; ++pos) {
    const Simplex& s = filt.simplices[pos];
    if (s.dim == 0) vertex_position[s.vertices[0]] = static_cast<std::uint32_t>(pos);
    if (s.dim == 1) {
      edge_position.emplace(edge_key(s.vertices[0], s.vertices[1], n),
                            static_cast<std::uint32_t>(pos));
    }
  }
  const auto boundary = [&](const Simplex& s) {
    Column col;
    if (s.dim == 1) {
      col = {vertex_position[s.vertices[0]], vertex_position[s.vertices[1]]};
    } else if (s.dim == 2) {
      const auto& v = s.vertices;
      col = {edge_position.at(edge_key(v[1], v[2], n)), edge_position.at(edge_key(v[0], v[2], n)),
             edge_position.at(edge_key(v[0], v[1], n))};
    }
    std::sort(col.begin(), col.end());
    return col;
  };

  constexpr std::int64_t kNone = -1;
  std::vector<std::int64_t> pivot_column(m, kNone);  // row -> column whose low it is
  std::vector<bool> cleared(m, false);
  std::vector<bool> negative_edge(m, false);
  std::unordered_map<std::uint32_t, Column> reduced;
  Column scratch;

  const bool reduce_edges = !options.union_find_degree0 || options.cross_check;
  const int lowest_reduced_dim = reduce_edges ? 1 : 2;
  for (int dim = max_degree + 1; dim >= lowest_reduced_dim; --dim) {
    for (std::size_t j = 0; j < m; ++j) {
      const Simplex& s = filt.simplices[j];
      if (s.dim != dim || cleared[j]) continue;
      Column col = boundary(s);
      while (!col.empty() && pivot_column[col.back()] != kNone) {
        add_column(col, reduced.at(static_cast<std::uint32_t>(pivot_column[col.back()])),
                   scratch);
      }
      if (col.empty()) continue;
      const std::uint32_t low = col.back();
      pivot_column[low] = static_cast<std::int64_t>(j);
      cleared[low] = true;
      reduced.emplace(static_cast<std::uint32_t>(j), std::move(col));
    }
  }

  std::vector<PersistenceDiagram> diagrams;
  for (int degree = 0; degree <= max_degree; ++degree) diagrams.push_back({degree, {}});

  PersistenceDiagram uf_diagram{0, {}};
  if (options.union_find_degree0 || options.cross_check) {
    uf_diagram = union_find_from_filtration(filt, negative_edge);
  }

  for (std::size_t i = 0; i < m; ++i) {
    const Simplex& s = filt.simplices[i];
    if (s.dim > max_degree) continue;
    if (s.dim == 0 && !reduce_edges) continue;
    if (pivot_column[i] != kNone) {
      diagrams[s.dim].pairs.push_back(
          {s.diameter, filt.simplices[static_cast<std::size_t>(pivot_column[i])].diameter});
      continue;
    }
    // Unpaired creator. An edge is a creator iff its column reduced to zero.
    const bool creator = s.dim == 0 || (reduce_edges ? reduced.count(static_cast<std::uint32_t>(i)) == 0
                                                     : !negative_edge[i]);
    if (creator) diagrams[s.dim].pairs.push_back({s.diameter, kInfinity});
  }

  if (options.union_find_degree0) {
    if (options.cross_check && uf_diagram.canonical().pairs != diagrams[0].canonical().pairs) {
      throw std::logic_error("union-find and reduction disagree on the degree-0 diagram");
    }
    diagrams[0] = std::move(uf_diagram);
  } else if (options.cross_check &&
             uf_diagram.canonical().pairs != diagrams[0].canonical().pairs) {
    throw std::logic_error("union-find and reduction disagree on the degree-0 diagram");
  }
  return diagrams;
}

PersistenceDiagram zero_dim_persistence(const DistanceMatrix& dm, double r_max) {
  struct Edge {
    double diameter;
    std::uint32_t i, j;
  };
  const std::size_t n = dm.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dm(i, j) <= r_max) {
        edges.push_back({dm(i, j), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.diameter != b.diameter) return a.diameter < b.diameter;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  UnionFind uf(n);
  PersistenceDiagram diag{0, {}};
  std::size_t components = n;
  for (const auto& e : edges) {
    if (uf.unite(e.i, e.j)) {
      diag.pairs.push_back({0.0, e.diameter});
      --components;
    }
  }
  for (std::size_t c = 0; c < components; ++c) diag.pairs.push_back({0.0, kInfinity});
  return diag;
}

std::vector<PersistenceDiagram> vr_persistence(const DistanceMatrix& dm, int max_degree,
                                               const PersistenceOptions& options) {
  bool use_explicit = options.engine == PersistenceEngine::Explicit;
  if (options.engine == PersistenceEngine::Auto) {
    use_explicit = dm.size() <= options.explicit_max_points;
  }
  if (use_explicit) {
    const auto filt = build_vr_filtration(dm, std::min(max_degree + 1, 2), options.r_max,
                                          {options.simplex_budget});
    return compute_persistence(filt, max_degree);
  }
  return compute_persistence_implicit(dm, max_degree, options.r_max);
}

std::size_t betti_at(const PersistenceDiagram& diag, double r) {
  return static_cast<std::size_t>(std::count_if(
      diag.pairs.begin(), diag.pairs.end(),
      [r](const PersistencePair& p) { return p.birth <= r && r < p.death; }));
}

void write_diagrams_csv(std::ostream& out, std::span<const PersistenceDiagram> diagrams) {
  out << "degree,birth,death\n";
  const auto old_precision = out.precision(17);
  for (const auto& diag : diagrams) {
    for (const auto& p : diag.pairs) {
      out << diag.degree << ',' << p.birth << ',';
      if (p.essential()) {
        out << "inf";
      } else {
        out << p.death;
      }
      out << '\n';
    }
  }
  out.precision(old_precision);
}

std::vector<PersistenceDiagram> read_diagrams_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("degree,birth,death", 0) != 0) {
    throw Error(ErrorCode::InvalidInput, "missing diagram CSV header");
  }
  std::vector<PersistenceDiagram> diagrams;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string degree, birth, death;
    if (!std::getline(ss, degree, ',') || !std::getline(ss, birth, ',') ||
        !std::getline(ss, death, ',')) {
      throw Error(ErrorCode::InvalidInput, "malformed diagram row '" + line + "'");
    }
    const int k = std::stoi(degree);
    if (k < 0) throw Error(ErrorCode::InvalidInput, "negative degree");
    while (static_cast<int>(diagrams.size()) <= k) {
      diagrams.push_back({static_cast<int>(diagrams.size()), {}});
    }
    diagrams[k].pairs.push_back({std::stod(birth), death == "inf" ? kInfinity : std::stod(death)});
  }
  return diagrams;
}

}  // namespace actland
