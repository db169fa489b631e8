#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace shotperc {

// Axis-aligned box [lower, upper] in R^d.
class BoxRegion {
 public:
  BoxRegion() = default;
  BoxRegion(std::vector<double> lower, std::vector<double> upper);

  static BoxRegion square(double lo, double hi) { return BoxRegion({lo, lo}, {hi, hi}); }
  static BoxRegion rect(double x0, double y0, double x1, double y1) {
    return BoxRegion({x0, y0}, {x1, y1});
  }

  int dimension() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double extent(int axis) const { return upper_[axis] - lower_[axis]; }
  double volume() const;

  bool contains(std::span<const double> x) const;
  // True when `other` lies inside this box up to an absolute slack.
  bool contains(const BoxRegion& other, double slack = 1e-9) const;

  // Euclidean distance between two boxes (0 when they intersect).
  static double distance(const BoxRegion& a, const BoxRegion& b);

  std::string to_string() const;

  friend bool operator==(const BoxRegion&, const BoxRegion&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

}  // namespace shotperc
