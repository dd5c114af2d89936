#include <cmath>
#include <random>
#include <sstream>

#include "actland/error.hpp"
#include "actland/landscape.hpp"
#include "doctest.h"
#include "oracles/landscape_oracle.hpp"

using namespace actland;

namespace {

PersistenceDiagram diagram(std::vector<PersistencePair> pairs) { return {1, std::move(pairs)}; }

PersistenceDiagram random_diagram(std::mt19937_64& rng, std::size_t max_pairs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(0, max_pairs);
  PersistenceDiagram d{1, {}};
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    d.pairs.push_back({a, b});
  }
  return d;
}

const double kTentNorm = 1.0 / std::sqrt(12.0);

}  // namespace

TEST_CASE("single and duplicate tents") {
  auto one = landscape_from_diagram(diagram({{0, 2}}));
  REQUIRE(one.depth() == 1);
  CHECK(one.value(0, 1.0) == 1.0);
  CHECK(one.value(0, 0.5) == 0.5);
  CHECK(one.value(0, 2.5) == 0.0);
  CHECK(one.support().first == 0.0);
  CHECK(one.support().second == 2.0);

  auto two = landscape_from_diagram(diagram({{0, 2}, {0, 2}}));
  REQUIRE(two.depth() == 2);
  for (double t : {0.25, 1.0, 1.7}) CHECK(two.value(0, t) == two.value(1, t));
}

TEST_CASE("square landscape peak") {
  const double a = 1.0 / std::sqrt(2.0);
  auto ls = landscape_from_diagram(diagram({{a, 1.0}}));
  REQUIRE(ls.depth() == 1);
  const double peak_t = (a + 1.0) / 2.0;
  CHECK(ls.value(0, peak_t) == doctest::Approx(0.146447).epsilon(1e-6));
  CHECK(peak_t == doctest::Approx(0.853553).epsilon(1e-6));
  auto dl = discretize(ls, Grid::covering(1.0, 0.001));
  CHECK(std::abs(dl.max_value() - (1.0 - a) / 2.0) < 0.001);
}

TEST_CASE("essential policy and zero-length bars") {
  PersistenceDiagram d{0, {{0.0, 0.4}, {0.0, kInfinity}, {0.3, 0.3}}};
  CHECK(landscape_from_diagram(d).depth() == 1);
  auto capped = landscape_from_diagram(d, EssentialPolicy::cap(1.0));
  CHECK(capped.depth() == 2);
  CHECK(capped.value(0, 0.5) == 0.5);
}

TEST_CASE("landscape matches the kmax oracle on random diagrams") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  for (int trial = 0; trial < 200; ++trial) {
    auto d = random_diagram(rng, 12);
    auto ls = landscape_from_diagram(d);
    CHECK(ls.depth() <= d.finite_count());
    for (int s = 0; s < 50; ++s) {
      const double t = u(rng);
      for (std::size_t k = 0; k < ls.depth() + 1; ++k)
        CHECK(std::abs(ls.value(k, t) - oracle::kmax_tent(d, k, t)) < 1e-12);
    }
    // Knot slopes lie in {-1, 0, 1}; levels are nonnegative.
    for (const auto& level : ls.levels()) {
      for (std::size_t i = 0; i + 1 < level.size(); ++i) {
        const double slope = (level[i + 1].value - level[i].value) / (level[i + 1].t - level[i].t);
        CHECK((std::abs(slope) < 1e-9 || std::abs(std::abs(slope) - 1.0) < 1e-9));
        CHECK(level[i].value >= 0.0);
      }
    }
  }
}

TEST_CASE("level one of a union is the pointwise max") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    auto d1 = random_diagram(rng, 5), d2 = random_diagram(rng, 5);
    auto both = d1;
    both.pairs.insert(both.pairs.end(), d2.pairs.begin(), d2.pairs.end());
    auto l1 = landscape_from_diagram(d1), l2 = landscape_from_diagram(d2), l = landscape_from_diagram(both);
    for (double t = 0.0; t <= 1.0; t += 0.01) CHECK(std::abs(l.value(0, t) - std::max(l1.value(0, t), l2.value(0, t))) < 1e-12);
  }
}

TEST_CASE("exact inner products") {
  auto tent = landscape_from_diagram(diagram({{0, 1}}));
  CHECK(std::abs(inner_product(tent, tent) - 1.0 / 12.0) < 1e-15);
  CHECK(std::abs(norm(tent) - kTentNorm) < 1e-12);
  CHECK(inner_product(tent, Landscape{}) == 0.0);

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = landscape_from_diagram(random_diagram(rng, 6));
    auto b = landscape_from_diagram(random_diagram(rng, 6));
    double expected = 0.0;
    for (std::size_t k = 0; k < std::max(a.depth(), b.depth()); ++k) {
      // Integrate between every knot of both functions so Simpson is exact.
      std::vector<double> ts{0.0, 1.0};
      if (k < a.depth())
        for (auto& kn : a.level(k)) ts.push_back(kn.t);
      if (k < b.depth())
        for (auto& kn : b.level(k)) ts.push_back(kn.t);
      std::sort(ts.begin(), ts.end());
      for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] <= ts[i]) continue;
        expected += oracle::simpson([&](double t) { return a.value(k, t) * b.value(k, t); }, ts[i], ts[i + 1], 2);
      }
    }
    CHECK(std::abs(inner_product(a, b) - expected) < 1e-12);
    CHECK(distance(a, a) == 0.0);
    CHECK(distance(a, b) == doctest::Approx(norm(subtract(a, b))));
  }
}

TEST_CASE("injectivity on distinct diagrams") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    auto d1 = random_diagram(rng, 4), d2 = random_diagram(rng, 4);
    if (d1.canonical().pairs == d2.canonical().pairs) continue;
    CHECK(distance(landscape_from_diagram(d1), landscape_from_diagram(d2)) > 0.0);
  }
}

TEST_CASE("discretization") {
  auto ls = landscape_from_diagram(diagram({{0, 2}}));
  auto dl = discretize(ls, Grid{0.0, 0.5, 5});
  REQUIRE(dl.levels == 1);
  std::vector<double> samples(dl.level(0).begin(), dl.level(0).end());
  CHECK(samples == std::vector<double>{0, 0.5, 1, 0.5, 0});
  CHECK_FALSE(dl.grid_too_coarse);

  auto empty = discretize(Landscape{}, Grid{0.0, 0.1, 11});
  CHECK(empty.max_value() == 0.0);

  auto narrow = discretize(landscape_from_diagram(diagram({{0.1, 0.15}})), Grid{0.0, 0.1, 11});
  CHECK(narrow.grid_too_coarse);

  auto tent = landscape_from_diagram(diagram({{0, 1}}));
  CHECK(std::abs(norm(discretize(tent, Grid::covering(1.0, 0.001))) - kTentNorm) < 2e-3);
}

TEST_CASE("exact and discretized inner products agree within the sampling bound") {
  std::mt19937_64 rng(25);
  const Grid grid = Grid::covering(1.0, 0.001);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = landscape_from_diagram(random_diagram(rng, 8));
    auto b = landscape_from_diagram(random_diagram(rng, 8));
    auto da = discretize(a, grid), db = discretize(b, grid);
    const double bound = 2.0 * grid.step * 1.0 * std::max({da.max_value(), db.max_value(), 1e-300}) *
                         static_cast<double>(std::max<std::size_t>({a.depth(), b.depth(), 1}));
    CHECK(std::abs(inner_product(a, b) - inner_product(da, db)) <= bound);
  }
}

TEST_CASE("grid mismatch") {
  auto a = zero_landscape(Grid{0.0, 0.1, 11});
  auto b = zero_landscape(Grid{0.0, 0.2, 11});
  CHECK_THROWS_AS(inner_product(a, b), Error);
}

TEST_CASE("averaging") {
  const Grid grid{0.0, 0.01, 301};
  auto l = landscape_from_diagram(diagram({{0, 2}, {0.5, 1.5}}));
  auto dl = discretize(l, grid);
  auto z = zero_landscape(grid);

  std::vector<DiscretizedLandscape> half{dl, z};
  auto avg = average(half);
  auto scaled = scale(dl, 0.5);
  for (std::size_t k = 0; k < dl.levels; ++k)
    for (std::size_t i = 0; i < grid.count; ++i) CHECK(avg.level(k)[i] == doctest::Approx(scaled.level(k)[i]));

  std::vector<DiscretizedLandscape> same{dl, dl, dl};
  CHECK(distance(average(same), dl) < 1e-12);

  std::vector<Landscape> exact{landscape_from_diagram(diagram({{0, 2}})), landscape_from_diagram(diagram({{1, 3}}))};
  CHECK(average(exact).value(0, 1.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(average(std::span<const Landscape>{}), Error);
  CHECK_THROWS_AS(average(std::span<const DiscretizedLandscape>{}), Error);

  std::mt19937_64 rng(26);
  std::vector<DiscretizedLandscape> many;
  double mean_norm = 0.0;
  for (int i = 0; i < 10; ++i) {
    many.push_back(discretize(landscape_from_diagram(random_diagram(rng, 5)), Grid::covering(1.0, 0.01)));
    mean_norm += norm(many.back()) / 10.0;
  }
  CHECK(norm(average(many)) <= mean_norm + 1e-12);
}

TEST_CASE("curve inner products") {
  auto tent = landscape_from_diagram(diagram({{0, 1}}));
  LandscapeCurve a{tent, tent};
  CHECK(std::abs(curve_inner_product(a, a) - 1.0 / 6.0) < 1e-15);
  CHECK(curve_inner_product(a, LandscapeCurve{Landscape{}, Landscape{}}) == 0.0);
  CHECK(curve_distance(a, a) == 0.0);
  CHECK_THROWS_AS(curve_distance(a, LandscapeCurve{tent}), Error);

  const Grid grid = Grid::covering(1.0, 0.001);
  DiscretizedCurve da{discretize(tent, grid), discretize(tent, grid)};
  CHECK(std::abs(curve_inner_product(da, da) - 1.0 / 6.0) < 1e-5);
  CHECK(curve_distance(da, da) == 0.0);
}

TEST_CASE("landscape csv round trips") {
  std::mt19937_64 rng(27);
  auto ls = landscape_from_diagram(random_diagram(rng, 6));
  std::stringstream ss;
  write_landscape_csv(ss, ls);
  auto back = read_landscape_csv(ss);
  CHECK(distance(ls, back) < 1e-12);

  auto dl = discretize(ls, Grid::covering(1.0, 0.001));
  std::stringstream ds;
  write_landscape_csv(ds, dl);
  auto dback = read_discretized_landscape_csv(ds);
  CHECK(dback.grid == dl.grid);
  CHECK(dback.values == dl.values);
}
