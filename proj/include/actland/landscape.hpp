#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "actland/persistence.hpp"

namespace actland {

struct Knot {
  double t = 0.0;
  double value = 0.0;
};

// Piecewise-linear function through its knots (strictly increasing t),
// zero outside [front().t, back().t]. An empty list is the zero function.
using LevelFunction = std::vector<Knot>;

double evaluate(const LevelFunction& f, double t);

// Exact persistence landscape: level k (0-based here) is the pointwise k-th
// largest tent max(0, min(t - birth, death - t)) over the diagram's pairs.
// Linear combinations of landscapes stay in this representation.
class Landscape {
 public:
  Landscape() = default;
  explicit Landscape(std::vector<LevelFunction> levels) : levels_(std::move(levels)) {}

  std::size_t depth() const { return levels_.size(); }
  const std::vector<LevelFunction>& levels() const { return levels_; }
  const LevelFunction& level(std::size_t k) const { return levels_[k]; }
  // Zero beyond depth().
  double value(std::size_t k, double t) const;

  // Smallest interval containing every level's support; {0, 0} when empty.
  std::pair<double, double> support() const;

 private:
  std::vector<LevelFunction> levels_;
};

struct EssentialPolicy {
  enum class Kind { Drop, Cap };
  Kind kind = Kind::Drop;
  double cap_radius = 0.0;

  static EssentialPolicy drop() { return {}; }
  static EssentialPolicy cap(double r) { return {Kind::Cap, r}; }
};

Landscape landscape_from_diagram(const PersistenceDiagram& diag,
                                 EssentialPolicy essential = EssentialPolicy::drop());

Landscape add(const Landscape& a, const Landscape& b);
Landscape scale(const Landscape& a, double factor);
Landscape subtract(const Landscape& a, const Landscape& b);

double inner_product(const Landscape& a, const Landscape& b);
double norm(const Landscape& a);
double distance(const Landscape& a, const Landscape& b);
Landscape average(std::span<const Landscape> landscapes);

struct Grid {
  double start = 0.0;
  double step = 0.001;
  std::size_t count = 1001;

  double at(std::size_t i) const { return start + static_cast<double>(i) * step; }
  double end() const { return at(count - 1); }
  // [0, r_max] at the given width.
  static Grid covering(double r_max, double step);
  friend bool operator==(const Grid&, const Grid&) = default;
};

// Samples of each level on a grid; values stored level-major.
struct DiscretizedLandscape {
  Grid grid;
  std::size_t levels = 0;
  std::vector<double> values;
  // Set when the grid step exceeds half the narrowest support component.
  bool grid_too_coarse = false;

  std::span<const double> level(std::size_t k) const {
    return {values.data() + k * grid.count, grid.count};
  }
  std::span<double> level(std::size_t k) { return {values.data() + k * grid.count, grid.count}; }
  double max_value() const;
};

DiscretizedLandscape discretize(const Landscape& ls, const Grid& grid);
DiscretizedLandscape zero_landscape(const Grid& grid);

// Trapezoidal rule; levels missing from the shallower argument are zero.
double inner_product(const DiscretizedLandscape& a, const DiscretizedLandscape& b);
double norm(const DiscretizedLandscape& a);
double distance(const DiscretizedLandscape& a, const DiscretizedLandscape& b);
DiscretizedLandscape average(std::span<const DiscretizedLandscape> landscapes);
DiscretizedLandscape scale(const DiscretizedLandscape& a, double factor);
// Norm of each level separately.
std::vector<double> level_norms(const DiscretizedLandscape& a);

// One landscape per layer, input layer first.
using LandscapeCurve = std::vector<Landscape>;
using DiscretizedCurve = std::vector<DiscretizedLandscape>;

double curve_inner_product(const LandscapeCurve& a, const LandscapeCurve& b);
double curve_inner_product(const DiscretizedCurve& a, const DiscretizedCurve& b);
double curve_norm(const DiscretizedCurve& a);
double curve_distance(const DiscretizedCurve& a, const DiscretizedCurve& b);
double curve_distance(const LandscapeCurve& a, const LandscapeCurve& b);
DiscretizedCurve average_curves(std::span<const DiscretizedCurve> curves);

// Exact: "level,t,value" rows of knots. Discretized: a "# grid start=..,step=..,count=.."
// line followed by "level,sample_index,value" rows. Levels are 1-based in files.
void write_landscape_csv(std::ostream& out, const Landscape& ls);
Landscape read_landscape_csv(std::istream& in);
void write_landscape_csv(std::ostream& out, const DiscretizedLandscape& ls);
DiscretizedLandscape read_discretized_landscape_csv(std::istream& in);

}  // namespace actland
