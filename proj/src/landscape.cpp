#include "actland/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "actland/error.hpp"
#include "actland/kernels.hpp"

namespace actland {

double evaluate(const LevelFunction& f, double t) {
  if (f.empty() || t < f.front().t || t > f.back().t) return 0.0;
  const auto hi = std::upper_bound(f.begin(), f.end(), t,
                                   [](double x, const Knot& k) { return x < k.t; });
  if (hi == f.end()) return f.back().value;
  const auto lo = hi - 1;
  const double span = hi->t - lo->t;
  const double w = span > 0.0 ? (t - lo->t) / span : 0.0;
  return lo->value + w * (hi->value - lo->value);
}

double Landscape::value(std::size_t k, double t) const {
  return k < levels_.size() ? evaluate(levels_[k], t) : 0.0;
}

std::pair<double, double> Landscape::support() const {
  bool any = false;
  double lo = 0.0, hi = 0.0;
  for (const auto& level : levels_) {
    if (level.empty()) continue;
    lo = any ? std::min(lo, level.front().t) : level.front().t;
    hi = any ? std::max(hi, level.back().t) : level.back().t;
    any = true;
  }
  return {lo, hi};
}

namespace {

struct Bar {
  double birth, death;
};

bool bar_order(const Bar& a, const Bar& b) {
  return a.birth != b.birth ? a.birth < b.birth : a.death > b.death;
}

void push_knot(LevelFunction& f, double t, double v) {
  if (!f.empty() && f.back().t == t) {
    f.back().value = v;
    return;
  }
  f.push_back({t, v});
}

}  // namespace

Landscape landscape_from_diagram(const PersistenceDiagram& diag, EssentialPolicy essential) {
  std::vector<Bar> bars;
  for (const auto& p : diag.pairs) {
    double death = p.death;
    if (p.essential()) {
      if (essential.kind == EssentialPolicy::Kind::Drop) continue;
      death = essential.cap_radius;
    }
    // Zero-length bars contribute nothing to any level.
    if (death > p.birth) bars.push_back({p.birth, death});
  }
  std::sort(bars.begin(), bars.end(), bar_order);

  // Bubenik-Dlotko sweep: each pass walks the upper envelope of the remaining
  // tents and re-inserts the clipped parts for the levels below.
  std::vector<LevelFunction> levels;
  while (!bars.empty()) {
    LevelFunction level;
    Bar current = bars.front();
    bars.erase(bars.begin());
    std::size_t p = 0;
    push_knot(level, current.birth, 0.0);
    push_knot(level, 0.5 * (current.birth + current.death), 0.5 * (current.death - current.birth));
    while (true) {
      std::size_t q = p;
      while (q < bars.size() && bars[q].death <= current.death) ++q;
      if (q == bars.size()) {
        push_knot(level, current.death, 0.0);
        break;
      }
      const Bar next = bars[q];
      bars.erase(bars.begin() + static_cast<std::ptrdiff_t>(q));
      p = q;
      if (next.birth > current.death) push_knot(level, current.death, 0.0);
      if (next.birth >= current.death) {
        push_knot(level, next.birth, 0.0);
      } else {
        push_knot(level, 0.5 * (next.birth + current.death), 0.5 * (current.death - next.birth));
        const Bar clipped{next.birth, current.death};
        const auto pos = std::lower_bound(bars.begin(), bars.end(), clipped, bar_order);
        if (static_cast<std::size_t>(pos - bars.begin()) < p) ++p;
        bars.insert(pos, clipped);
      }
      push_knot(level, 0.5 * (next.birth + next.death), 0.5 * (next.death - next.birth));
      current = next;
    }
    levels.push_back(std::move(level));
  }
  return Landscape(std::move(levels));
}

namespace {

std::vector<double> merged_breaks(const LevelFunction& f, const LevelFunction& g) {
  std::vector<double> ts;
  ts.reserve(f.size() + g.size());
  for (const auto& k : f) ts.push_back(k.t);
  for (const auto& k : g) ts.push_back(k.t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

LevelFunction combine(const LevelFunction& f, double alpha, const LevelFunction& g, double beta) {
  LevelFunction out;
  for (double t : merged_breaks(f, g)) out.push_back({t, alpha * evaluate(f, t) + beta * evaluate(g, t)});
  return out;
}

double integrate_product(const LevelFunction& f, const LevelFunction& g) {
  if (f.empty() || g.empty()) return 0.0;
  const double lo = std::max(f.front().t, g.front().t);
  const double hi = std::min(f.back().t, g.back().t);
  if (!(lo < hi)) return 0.0;
  std::vector<double> ts;
  for (double t : merged_breaks(f, g)) {
    if (t >= lo && t <= hi) ts.push_back(t);
  }
  double sum = 0.0;
  double f0 = evaluate(f, ts.front());
  double g0 = evaluate(g, ts.front());
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double f1 = evaluate(f, ts[i]);
    const double g1 = evaluate(g, ts[i]);
    // Exact for the product of two linear pieces.
    sum += (ts[i] - ts[i - 1]) / 6.0 * (2.0 * f0 * g0 + f0 * g1 + f1 * g0 + 2.0 * f1 * g1);
    f0 = f1;
    g0 = g1;
  }
  return sum;
}

Landscape combine(const Landscape& a, double alpha, const Landscape& b, double beta) {
  const std::size_t depth = std::max(a.depth(), b.depth());
  static const LevelFunction kZero;
  std::vector<LevelFunction> levels;
  levels.reserve(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    levels.push_back(combine(k < a.depth() ? a.level(k) : kZero, alpha,
                             k < b.depth() ? b.level(k) : kZero, beta));
  }
  return Landscape(std::move(levels));
}

}  // namespace

Landscape add(const Landscape& a, const Landscape& b) { return combine(a, 1.0, b, 1.0); }
Landscape subtract(const Landscape& a, const Landscape& b) { return combine(a, 1.0, b, -1.0); }

Landscape scale(const Landscape& a, double factor) {
  std::vector<LevelFunction> levels = a.levels();
  for (auto& level : levels) {
    for (auto& k : level) k.value *= factor;
  }
  return Landscape(std::move(levels));
}

double inner_product(const Landscape& a, const Landscape& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < std::min(a.depth(), b.depth()); ++k) {
    sum += integrate_product(a.level(k), b.level(k));
  }
  return sum;
}

double norm(const Landscape& a) { return std::sqrt(std::max(0.0, inner_product(a, a))); }

double distance(const Landscape& a, const Landscape& b) { return norm(subtract(a, b)); }

Landscape average(std::span<const Landscape> landscapes) {
  if (landscapes.empty()) throw Error(ErrorCode::EmptyInput, "average of no landscapes");
  Landscape sum = landscapes.front();
  for (std::size_t i = 1; i < landscapes.size(); ++i) sum = add(sum, landscapes[i]);
  return scale(sum, 1.0 / static_cast<double>(landscapes.size()));
}

Grid Grid::covering(double r_max, double step) {
  if (!(step > 0.0) || !(r_max > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "grid needs positive step and extent");
  }
  const auto count = static_cast<std::size_t>(std::ceil(r_max / step - 1e-9)) + 1;
  return {0.0, step, count};
}

double DiscretizedLandscape::max_value() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

namespace {

void check_grid(const Grid& grid) {
  if (!(grid.step > 0.0) || grid.count == 0 || !std::isfinite(grid.start)) {
    throw Error(ErrorCode::InvalidInput, "grid needs positive step and at least one sample");
  }
}

double narrowest_component(const Landscape& ls) {
  double narrowest = kInfinity;
  for (const auto& level : ls.levels()) {
    double start = 0.0;
    bool open = false;
    for (const auto& k : level) {
      if (k.value > 0.0 && !open) {
        open = true;
      } else if (k.value <= 0.0) {
        if (open) narrowest = std::min(narrowest, k.t - start);
        open = false;
        start = k.t;
      }
    }
  }
  return narrowest;
}

}  // namespace

DiscretizedLandscape discretize(const Landscape& ls, const Grid& grid) {
  check_grid(grid);
  DiscretizedLandscape out{grid, ls.depth(), std::vector<double>(ls.depth() * grid.count, 0.0)};
  for (std::size_t k = 0; k < ls.depth(); ++k) {
    const auto& level = ls.level(k);
    if (level.empty()) continue;
    auto row = out.level(k);
    for (std::size_t s = 0; s < grid.count; ++s) row[s] = evaluate(level, grid.at(s));
  }
  out.grid_too_coarse = grid.step > 0.5 * narrowest_component(ls);
  return out;
}

DiscretizedLandscape zero_landscape(const Grid& grid) {
  check_grid(grid);
  return {grid, 0, {}};
}

namespace {

bool same_grid(const Grid& a, const Grid& b) {
  return a.count == b.count && std::abs(a.start - b.start) <= 1e-12 &&
         std::abs(a.step - b.step) <= 1e-12 * std::max(1.0, std::abs(a.step));
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!same_grid(a, b)) throw Error(ErrorCode::GridMismatch, "landscapes sampled on different grids");
}

double trapezoid_dot(std::span<const double> a, std::span<const double> b, double step) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  const double interior = kernels::dot(a, b);
  return step * (interior - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]));
}

}  // namespace

double inner_product(const DiscretizedLandscape& a, const DiscretizedLandscape& b) {
  require_same_grid(a.grid, b.grid);
  double sum = 0.0;
  for (std::size_t k = 0; k < std::min(a.levels, b.levels); ++k) {
    sum += trapezoid_dot(a.level(k), b.level(k), a.grid.step);
  }
  return sum;
}

double norm(const DiscretizedLandscape& a) { return std::sqrt(std::max(0.0, inner_product(a, a))); }

std::vector<double> level_norms(const DiscretizedLandscape& a) {
  std::vector<double> out(a.levels);
  for (std::size_t k = 0; k < a.levels; ++k) {
    out[k] = std::sqrt(std::max(0.0, trapezoid_dot(a.level(k), a.level(k), a.grid.step)));
  }
  return out;
}

double distance(const DiscretizedLandscape& a, const DiscretizedLandscape& b) {
  require_same_grid(a.grid, b.grid);
  const std::size_t depth = std::max(a.levels, b.levels);
  std::vector<double> diff(a.grid.count);
  double sum = 0.0;
  for (std::size_t k = 0; k < depth; ++k) {
    std::fill(diff.begin(), diff.end(), 0.0);
    if (k < a.levels) kernels::axpy(1.0, a.level(k), diff);
    if (k < b.levels) kernels::axpy(-1.0, b.level(k), diff);
    sum += trapezoid_dot(diff, diff, a.grid.step);
  }
  return std::sqrt(std::max(0.0, sum));
}

DiscretizedLandscape average(std::span<const DiscretizedLandscape> landscapes) {
  if (landscapes.empty()) throw Error(ErrorCode::EmptyInput, "average of no landscapes");
  const Grid grid = landscapes.front().grid;
  std::size_t depth = 0;
  for (const auto& ls : landscapes) {
    require_same_grid(grid, ls.grid);
    depth = std::max(depth, ls.levels);
  }
  DiscretizedLandscape out{grid, depth, std::vector<double>(depth * grid.count, 0.0)};
  for (const auto& ls : landscapes) {
    kernels::axpy(1.0, ls.values, std::span<double>(out.values.data(), ls.values.size()));
    out.grid_too_coarse = out.grid_too_coarse || ls.grid_too_coarse;
  }
  kernels::scale(1.0 / static_cast<double>(landscapes.size()), out.values);
  return out;
}

DiscretizedLandscape scale(const DiscretizedLandscape& a, double factor) {
  DiscretizedLandscape out = a;
  kernels::scale(factor, out.values);
  return out;
}

namespace {

template <class Curve>
void require_same_length(const Curve& a, const Curve& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "curves differ in length");
}

}  // namespace

double curve_inner_product(const LandscapeCurve& a, const LandscapeCurve& b) {
  require_same_length(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += inner_product(a[i], b[i]);
  return sum;
}

double curve_inner_product(const DiscretizedCurve& a, const DiscretizedCurve& b) {
  require_same_length(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += inner_product(a[i], b[i]);
  return sum;
}

double curve_norm(const DiscretizedCurve& a) {
  return std::sqrt(std::max(0.0, curve_inner_product(a, a)));
}

double curve_distance(const DiscretizedCurve& a, const DiscretizedCurve& b) {
  require_same_length(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = distance(a[i], b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double curve_distance(const LandscapeCurve& a, const LandscapeCurve& b) {
  require_same_length(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = distance(a[i], b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

DiscretizedCurve average_curves(std::span<const DiscretizedCurve> curves) {
  if (curves.empty()) throw Error(ErrorCode::EmptyInput, "average of no curves");
  const std::size_t length = curves.front().size();
  DiscretizedCurve out;
  std::vector<DiscretizedLandscape> layer;
  for (std::size_t i = 0; i < length; ++i) {
    layer.clear();
    for (const auto& c : curves) {
      if (c.size() != length) throw Error(ErrorCode::LengthMismatch, "curves differ in length");
      layer.push_back(c[i]);
    }
    out.push_back(average(layer));
  }
  return out;
}

void write_landscape_csv(std::ostream& out, const Landscape& ls) {
  out << "level,t,value\n";
  const auto old_precision = out.precision(17);
  for (std::size_t k = 0; k < ls.depth(); ++k) {
    for (const auto& knot : ls.level(k)) out << k + 1 << ',' << knot.t << ',' << knot.value << '\n';
  }
  out.precision(old_precision);
}

namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

Landscape read_landscape_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("level,t,value", 0) != 0) {
    throw Error(ErrorCode::InvalidInput, "missing landscape CSV header");
  }
  std::vector<LevelFunction> levels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = fields_of(line);
    if (f.size() != 3) throw Error(ErrorCode::InvalidInput, "malformed landscape row");
    const auto k = std::stoul(f[0]);
    if (k == 0) throw Error(ErrorCode::InvalidInput, "levels are numbered from 1");
    if (levels.size() < k) levels.resize(k);
    levels[k - 1].push_back({std::stod(f[1]), std::stod(f[2])});
  }
  return Landscape(std::move(levels));
}

void write_landscape_csv(std::ostream& out, const DiscretizedLandscape& ls) {
  const auto old_precision = out.precision(17);
  out << "# grid start=" << ls.grid.start << ",step=" << ls.grid.step
      << ",count=" << ls.grid.count << ",levels=" << ls.levels << '\n';
  out << "level,sample_index,value\n";
  for (std::size_t k = 0; k < ls.levels; ++k) {
    const auto row = ls.level(k);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] != 0.0) out << k + 1 << ',' << s << ',' << row[s] << '\n';
    }
  }
  out.precision(old_precision);
}

DiscretizedLandscape read_discretized_landscape_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# grid ", 0) != 0) {
    throw Error(ErrorCode::InvalidInput, "missing grid metadata line");
  }
  DiscretizedLandscape ls;
  for (const auto& item : fields_of(line.substr(7))) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidInput, "bad grid metadata");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "start") ls.grid.start = std::stod(value);
    else if (key == "step") ls.grid.step = std::stod(value);
    else if (key == "count") ls.grid.count = std::stoul(value);
    else if (key == "levels") ls.levels = std::stoul(value);
    else throw Error(ErrorCode::InvalidInput, "unknown grid key '" + key + "'");
  }
  check_grid(ls.grid);
  if (!std::getline(in, line) || line.rfind("level,sample_index,value", 0) != 0) {
    throw Error(ErrorCode::InvalidInput, "missing landscape CSV header");
  }
  ls.values.assign(ls.levels * ls.grid.count, 0.0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = fields_of(line);
    if (f.size() != 3) throw Error(ErrorCode::InvalidInput, "malformed landscape row");
    const auto k = std::stoul(f[0]);
    const auto s = std::stoul(f[1]);
    if (k == 0 || k > ls.levels || s >= ls.grid.count) {
      throw Error(ErrorCode::InvalidInput, "landscape row outside the declared grid");
    }
    ls.level(k - 1)[s] = std::stod(f[2]);
  }
  return ls;
}

}  // namespace actland
