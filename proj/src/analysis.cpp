#include "actland/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "actland/error.hpp"
#include "actland/random.hpp"

namespace actland {

std::vector<double> gram_matrix(std::span<const DiscretizedCurve> curves) {
  const std::size_t n = curves.size();
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = curve_inner_product(curves[i], curves[j]);
      gram[i * n + j] = v;
      gram[j * n + i] = v;
    }
  }
  return gram;
}

namespace {

void check_group(const CurveGroup& g, std::size_t length) {
  if (g.curves.empty()) throw Error(ErrorCode::EmptyInput, "group '" + g.label + "' is empty");
  for (const auto& c : g.curves) {
    if (c.size() != length) {
      throw Error(ErrorCode::IncompatibleCurves, "curves of different lengths in '" + g.label + "'");
    }
  }
}

// Squared distance between the means of the two sides of a split, from the
// Gram matrix: |mean_A|^2 + |mean_B|^2 - 2 <mean_A, mean_B>.
double split_statistic(const std::vector<double>& gram, std::size_t n,
                       const std::vector<std::uint8_t>& in_a, std::size_t size_a) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = gram.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_a[i] && in_a[j]) aa += row[j];
      else if (!in_a[i] && !in_a[j]) bb += row[j];
      else ab += row[j];
    }
  }
  const double na = static_cast<double>(size_a);
  const double nb = static_cast<double>(n - size_a);
  // ab counted both (i in A, j in B) and (i in B, j in A).
  const double sq = aa / (na * na) + bb / (nb * nb) - ab / (na * nb);
  return std::sqrt(std::max(0.0, sq));
}

}  // namespace

TestResult permutation_test(const CurveGroup& a_in, const CurveGroup& b_in, std::size_t permutations,
                            std::uint64_t seed, std::size_t threads) {
  if (a_in.curves.empty() || b_in.curves.empty()) {
    throw Error(ErrorCode::EmptyInput, "permutation test needs two nonempty groups");
  }
  const std::size_t length = a_in.curves.front().size();
  check_group(a_in, length);
  check_group(b_in, length);
  // Canonical argument order so that swapping the groups gives the same p.
  const bool swap = std::make_pair(b_in.label, b_in.curves.size()) <
                    std::make_pair(a_in.label, a_in.curves.size());
  const CurveGroup& a = swap ? b_in : a_in;
  const CurveGroup& b = swap ? a_in : b_in;

  std::vector<DiscretizedCurve> pooled = a.curves;
  pooled.insert(pooled.end(), b.curves.begin(), b.curves.end());
  const std::size_t n = pooled.size();
  const std::size_t size_a = a.curves.size();
  std::vector<double> gram;
  try {
    gram = gram_matrix(pooled);
  } catch (const Error& e) {
    throw Error(ErrorCode::IncompatibleCurves, e.what());
  }

  std::vector<std::uint8_t> observed_split(n, 0);
  std::fill(observed_split.begin(), observed_split.begin() + static_cast<std::ptrdiff_t>(size_a), 1);
  const double observed = split_statistic(gram, n, observed_split, size_a);
  // Permuted statistics within rounding of the observed one count as ties.
  const double tie_floor = observed - 1e-12 * std::max(1.0, observed);

  const auto run = [&](std::size_t first, std::size_t last) {
    std::size_t exceed = 0;
    std::vector<std::size_t> order(n);
    std::vector<std::uint8_t> in_a(n);
    for (std::size_t r = first; r < last; ++r) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(mix_seed(seed, r));
      rng.shuffle(std::span<std::size_t>(order));
      std::fill(in_a.begin(), in_a.end(), 0);
      for (std::size_t i = 0; i < size_a; ++i) in_a[order[i]] = 1;
      if (split_statistic(gram, n, in_a, size_a) >= tie_floor) ++exceed;
    }
    return exceed;
  };

  std::size_t exceed = 0;
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, permutations));
  if (workers == 1) {
    exceed = run(0, permutations);
  } else {
    std::vector<std::size_t> counts(workers, 0);
    std::vector<std::thread> pool;
    const std::size_t chunk = (permutations + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = std::min(permutations, w * chunk);
      const std::size_t last = std::min(permutations, first + chunk);
      pool.emplace_back([&, w, first, last] { counts[w] = run(first, last); });
    }
    for (auto& t : pool) t.join();
    exceed = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }
  return {observed, static_cast<double>(1 + exceed) / static_cast<double>(1 + permutations),
          permutations, seed};
}

PcaResult pca_project(const std::vector<std::vector<double>>& vectors, std::size_t k) {
  const std::size_t n = vectors.size();
  if (n < 2) throw Error(ErrorCode::InvalidInput, "PCA needs at least two vectors");
  const std::size_t dim = vectors.front().size();
  if (k == 0 || k > dim) throw Error(ErrorCode::InvalidInput, "PCA rank must be in 1..dimension");

  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != dim) throw Error(ErrorCode::InvalidInput, "PCA vectors differ in length");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(), static_cast<Eigen::Index>(dim));
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double denom = static_cast<double>(n - 1);
  const double total = x.squaredNorm() / denom;
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateInput, "all vectors coincide");

  // Eigenpairs of X X^T (n x n) or X^T X (dim x dim), whichever is smaller.
  // Both give the same nonzero spectrum; loadings follow from either side.
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd loadings(dim, static_cast<Eigen::Index>(k));
  const bool through_gram = n < dim;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(through_gram ? Eigen::MatrixXd(x * x.transpose())
                                                                     : Eigen::MatrixXd(x.transpose() * x));
  eigenvalues = solver.eigenvalues();
  const Eigen::Index m = eigenvalues.size();
  const std::size_t usable = std::min<std::size_t>(k, static_cast<std::size_t>(m));

  PcaResult out;
  out.components = k;
  out.total_variance = total;
  out.coordinates.assign(n * k, 0.0);
  out.explained_variance.assign(k, 0.0);
  out.loadings.assign(k * dim, 0.0);
  const double scale_tol = 1e-12 * std::max(1.0, eigenvalues(m - 1));
  for (std::size_t c = 0; c < usable; ++c) {
    const Eigen::Index col = m - 1 - static_cast<Eigen::Index>(c);  // descending
    const double lambda = std::max(0.0, eigenvalues(col));
    if (lambda <= scale_tol) continue;
    Eigen::VectorXd loading = through_gram ? Eigen::VectorXd(x.transpose() * solver.eigenvectors().col(col) / std::sqrt(lambda))
                                           : Eigen::VectorXd(solver.eigenvectors().col(col));
    for (Eigen::Index i = 0; i < loading.size(); ++i) {
      if (std::abs(loading(i)) > 1e-12) {
        if (loading(i) < 0) loading = -loading;
        break;
      }
    }
    const Eigen::VectorXd scores = x * loading;
    for (std::size_t i = 0; i < n; ++i) out.coordinates[i * k + c] = scores(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < dim; ++j) out.loadings[c * dim + j] = loading(static_cast<Eigen::Index>(j));
    out.explained_variance[c] = lambda / denom;
  }
  return out;
}

std::vector<double> complexity_curve(const DiscretizedCurve& curve) {
  std::vector<double> out;
  out.reserve(curve.size());
  for (const auto& ls : curve) out.push_back(norm(ls));
  return out;
}

std::vector<double> complexity_curve(const LandscapeCurve& curve) {
  std::vector<double> out;
  out.reserve(curve.size());
  for (const auto& ls : curve) out.push_back(norm(ls));
  return out;
}

std::vector<double> flatten_curve(const DiscretizedCurve& curve,
                                  std::span<const std::size_t> levels_per_layer) {
  if (levels_per_layer.size() != curve.size()) {
    throw Error(ErrorCode::LengthMismatch, "one level count per layer required");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& ls = curve[i];
    if (ls.levels > levels_per_layer[i]) throw Error(ErrorCode::InvalidInput, "layer deeper than padding");
    out.insert(out.end(), ls.values.begin(), ls.values.end());
    out.resize(out.size() + (levels_per_layer[i] - ls.levels) * ls.grid.count, 0.0);
  }
  return out;
}

void write_test_results_csv(std::ostream& out,
                            std::span<const std::pair<std::pair<std::string, std::string>, TestResult>> rows) {
  out << "groupA,groupB,observed,p,n_perm,seed\n";
  const auto old_precision = out.precision(17);
  for (const auto& [names, r] : rows) {
    out << names.first << ',' << names.second << ',' << r.observed_statistic << ',' << r.p_value
        << ',' << r.permutations << ',' << r.seed << '\n';
  }
  out.precision(old_precision);
}

}  // namespace actland
