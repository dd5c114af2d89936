#include <cmath>
#include <random>
#include <sstream>

#include "actland/analysis.hpp"
#include "actland/error.hpp"
#include "doctest.h"

using namespace actland;

namespace {

const Grid kGrid{0.0, 0.01, 101};

DiscretizedCurve tent_curve(double birth, double death, std::size_t layers = 2) {
  auto ls = discretize(landscape_from_diagram({1, {{birth, death}}}), kGrid);
  return DiscretizedCurve(layers, ls);
}

DiscretizedCurve zero_curve(std::size_t layers = 2) { return DiscretizedCurve(layers, zero_landscape(kGrid)); }

DiscretizedCurve random_curve(std::mt19937_64& rng, double shift = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 0.5);
  DiscretizedCurve c;
  for (int layer = 0; layer < 3; ++layer) {
    PersistenceDiagram d{1, {}};
    for (int i = 0; i < 3; ++i) {
      const double a = u(rng);
      d.pairs.push_back({a, a + u(rng) + shift});
    }
    c.push_back(discretize(landscape_from_diagram(d), kGrid));
  }
  return c;
}

double direct_statistic(const std::vector<DiscretizedCurve>& a, const std::vector<DiscretizedCurve>& b) {
  return curve_distance(average_curves(a), average_curves(b));
}

}  // namespace

TEST_CASE("identical singletons") {
  CurveGroup a{"a", {tent_curve(0.1, 0.6)}}, b{"b", {tent_curve(0.1, 0.6)}};
  auto r = permutation_test(a, b, 100, 1);
  CHECK(r.observed_statistic == 0.0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("zero curves against a large tent, checked by exhaustive relabelling") {
  CurveGroup a{"zero", {}}, b{"tent", {}};
  for (int i = 0; i < 5; ++i) {
    a.curves.push_back(zero_curve());
    b.curves.push_back(tent_curve(0.0, 1.0));
  }
  auto r = permutation_test(a, b, 10000, 1);
  CHECK(r.p_value <= 0.01);
  // The exact relabelling p-value is 2/252; the estimate sits within 4 binomial SDs.
  const double exact = 2.0 / 252.0;
  CHECK(std::abs(r.p_value - exact) < 4.0 * std::sqrt(exact * (1 - exact) / 10000.0) + 1e-4);
  CHECK(r.permutations == 10000);

  // All C(10, 5) = 252 balanced splits: the observed one attains the maximum.
  std::vector<DiscretizedCurve> pooled = a.curves;
  pooled.insert(pooled.end(), b.curves.begin(), b.curves.end());
  const double observed = direct_statistic(a.curves, b.curves);
  CHECK(r.observed_statistic == doctest::Approx(observed).epsilon(1e-10));
  int splits = 0, at_max = 0;
  for (unsigned mask = 0; mask < 1024; ++mask) {
    if (__builtin_popcount(mask) != 5) continue;
    ++splits;
    std::vector<DiscretizedCurve> x, y;
    for (int i = 0; i < 10; ++i) ((mask >> i) & 1 ? x : y).push_back(pooled[i]);
    const double s = direct_statistic(x, y);
    CHECK(s <= observed + 1e-12);
    at_max += s >= observed - 1e-12;
  }
  CHECK(splits == 252);
  CHECK(at_max == 2);
}

TEST_CASE("gram statistic equals the direct distance between averages") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    CurveGroup a{"a", {}}, b{"b", {}};
    for (int i = 0; i < 4; ++i) a.curves.push_back(random_curve(rng));
    for (int i = 0; i < 3 + trial % 3; ++i) b.curves.push_back(random_curve(rng, 0.1));
    auto r = permutation_test(a, b, 10, 1);
    CHECK(r.observed_statistic == doctest::Approx(direct_statistic(a.curves, b.curves)).epsilon(1e-9));
  }
}

TEST_CASE("determinism, thread independence and symmetry") {
  std::mt19937_64 rng(42);
  CurveGroup a{"low", {}}, b{"high", {}};
  for (int i = 0; i < 6; ++i) a.curves.push_back(random_curve(rng));
  for (int i = 0; i < 7; ++i) b.curves.push_back(random_curve(rng, 0.03));
  auto r1 = permutation_test(a, b, 2000, 9);
  auto r2 = permutation_test(a, b, 2000, 9);
  auto r4 = permutation_test(a, b, 2000, 9, 4);
  auto swapped = permutation_test(b, a, 2000, 9);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.p_value == r4.p_value);
  CHECK(r1.p_value == swapped.p_value);
  CHECK(r1.observed_statistic == swapped.observed_statistic);
  CHECK(r1.p_value > 0.0);
  CHECK(r1.p_value <= 1.0);
}

TEST_CASE("incompatible groups") {
  CurveGroup a{"a", {tent_curve(0, 1, 2)}}, b{"b", {tent_curve(0, 1, 3)}};
  CHECK_THROWS_AS(permutation_test(a, b, 10, 0), Error);
  CurveGroup empty{"e", {}};
  CHECK_THROWS_AS(permutation_test(a, empty, 10, 0), Error);
  CurveGroup other_grid{"g", {DiscretizedCurve(2, zero_landscape(Grid{0.0, 0.02, 51}))}};
  CHECK_THROWS_AS(permutation_test(a, other_grid, 10, 0), Error);
}

TEST_CASE("null p-values are close to uniform") {
  std::mt19937_64 rng(43);
  std::vector<DiscretizedCurve> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(random_curve(rng));
  int small = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    CurveGroup a{"a", {}}, b{"b", {}};
    for (int i = 0; i < 8; ++i) a.curves.push_back(pool[idx[i]]);
    for (int i = 8; i < 16; ++i) b.curves.push_back(pool[idx[i]]);
    small += permutation_test(a, b, 199, static_cast<std::uint64_t>(trial)).p_value <= 0.05;
  }
  const double fraction = small / 200.0;
  CHECK(fraction >= 0.01);
  CHECK(fraction <= 0.12);
}

TEST_CASE("pca on a line") {
  std::vector<double> dir(10);
  for (int i = 0; i < 10; ++i) dir[i] = (i % 3) - 1.0 + 0.1 * i;
  double len = 0.0;
  for (double d : dir) len += d * d;
  len = std::sqrt(len);
  for (auto& d : dir) d /= len;
  const std::vector<double> ts{-2.0, -0.5, 0.0, 1.0, 1.5};
  std::vector<std::vector<double>> v;
  for (double t : ts) {
    std::vector<double> p(10);
    for (int i = 0; i < 10; ++i) p[i] = 3.0 + t * dir[i];
    v.push_back(p);
  }
  auto r = pca_project(v, 2);
  CHECK(r.explained_variance[0] == doctest::Approx(r.total_variance).epsilon(1e-12));
  CHECK(std::abs(r.explained_variance[1]) < 1e-12);
  // Sign convention fixes the direction: first nonzero loading positive.
  const double sign = dir[0] > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(r.coordinate(i, 0) == doctest::Approx(sign * ts[i]).epsilon(1e-10));
  CHECK(r.loadings[0] > 0.0);
}

TEST_CASE("pca separates mirrored clusters and rejects duplicates") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 20; ++i) {
    const double side = i < 10 ? 1.0 : -1.0;
    v.push_back({side + g(rng), 0.5 * side + g(rng), g(rng)});
  }
  auto r = pca_project(v, 2);
  for (int i = 0; i < 10; ++i) {
    CHECK(r.coordinate(i, 0) * r.coordinate(19 - i, 0) < 0.0);
  }
  std::vector<std::vector<double>> dup(4, std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(pca_project(dup, 2), Error);
}

TEST_CASE("pca reconstruction error equals unexplained variance") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t dim : {5u, 40u}) {
    std::vector<std::vector<double>> v(12, std::vector<double>(dim));
    for (auto& row : v)
      for (std::size_t j = 0; j < dim; ++j) row[j] = g(rng) * (1.0 + static_cast<double>(j % 4));
    auto r = pca_project(v, 2);
    std::vector<double> mean(dim, 0.0);
    for (auto& row : v)
      for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j] / 12.0;
    double residual = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        double recon = 0.0;
        for (std::size_t c = 0; c < 2; ++c) recon += r.coordinate(i, c) * r.loadings[c * dim + j];
        residual += std::pow(v[i][j] - mean[j] - recon, 2);
      }
    }
    residual /= 11.0;
    CHECK(std::abs(residual - (r.total_variance - r.explained_variance[0] - r.explained_variance[1])) < 1e-8);
    CHECK(r.explained_variance[0] >= r.explained_variance[1]);
  }
}

TEST_CASE("complexity curves") {
  CHECK(complexity_curve(zero_curve(3)) == std::vector<double>{0, 0, 0});
  LandscapeCurve exact{landscape_from_diagram({1, {{0, 1}}}), Landscape{}};
  auto c = complexity_curve(exact);
  CHECK(c[0] == doctest::Approx(0.288675).epsilon(1e-6));
  CHECK(c[1] == 0.0);

  std::mt19937_64 rng(46);
  auto curve = random_curve(rng);
  auto base = complexity_curve(curve);
  DiscretizedCurve scaled;
  for (auto& ls : curve) scaled.push_back(scale(ls, 2.5));
  auto sc = complexity_curve(scaled);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(sc[i] == doctest::Approx(2.5 * base[i]));

  std::vector<DiscretizedCurve> many;
  for (int i = 0; i < 8; ++i) many.push_back(random_curve(rng));
  auto of_mean = complexity_curve(average_curves(many));
  std::vector<double> mean_of(3, 0.0);
  for (auto& m : many) {
    auto cc = complexity_curve(m);
    for (int i = 0; i < 3; ++i) mean_of[i] += cc[i] / 8.0;
  }
  for (int i = 0; i < 3; ++i) CHECK(of_mean[i] <= mean_of[i] + 1e-12);
}

TEST_CASE("flatten_curve pads levels and preserves the inner product") {
  std::mt19937_64 rng(47);
  auto a = random_curve(rng), b = random_curve(rng);
  std::vector<std::size_t> levels;
  for (std::size_t i = 0; i < a.size(); ++i) levels.push_back(std::max(a[i].levels, b[i].levels) + 1);
  auto fa = flatten_curve(a, levels), fb = flatten_curve(b, levels);
  REQUIRE(fa.size() == fb.size());
  // Interior samples only differ from the trapezoid weights at the ends, which are zero here.
  double dot = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) dot += fa[i] * fb[i];
  CHECK(dot * kGrid.step == doctest::Approx(curve_inner_product(a, b)).epsilon(1e-10));
}

TEST_CASE("test result csv") {
  std::vector<std::pair<std::pair<std::string, std::string>, TestResult>> rows{{{"0.55", "0.99"}, {0.5, 0.001, 999, 4}}};
  std::ostringstream out;
  write_test_results_csv(out, rows);
  CHECK(out.str() == "groupA,groupB,observed,p,n_perm,seed\n0.55,0.99,0.5,0.001,999,4\n");
}
