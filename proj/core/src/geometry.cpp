#include "shotperc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shotperc/errors.hpp"

namespace shotperc {

BoxRegion::BoxRegion(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw InvalidArgument("box corners must have the same nonzero dimension");
  }
  for (std::size_t a = 0; a < lower_.size(); ++a) {
    if (!std::isfinite(lower_[a]) || !std::isfinite(upper_[a]) || !(upper_[a] > lower_[a])) {
      throw InvalidArgument("box needs finite corners with upper > lower on every axis: " +
                            to_string());
    }
  }
}

double BoxRegion::volume() const {
  double v = 1.0;
  for (int a = 0; a < dimension(); ++a) v *= extent(a);
  return v;
}

bool BoxRegion::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dimension()) return false;
  for (int a = 0; a < dimension(); ++a) {
    if (x[a] < lower_[a] || x[a] > upper_[a]) return false;
  }
  return true;
}

bool BoxRegion::contains(const BoxRegion& other, double slack) const {
  if (other.dimension() != dimension()) return false;
  for (int a = 0; a < dimension(); ++a) {
    if (other.lower_[a] < lower_[a] - slack || other.upper_[a] > upper_[a] + slack) return false;
  }
  return true;
}

double BoxRegion::distance(const BoxRegion& a, const BoxRegion& b) {
  if (a.dimension() != b.dimension()) throw InvalidArgument("box dimension mismatch");
  double sum = 0.0;
  for (int i = 0; i < a.dimension(); ++i) {
    const double gap = std::max({0.0, b.lower_[i] - a.upper_[i], a.lower_[i] - b.upper_[i]});
    sum += gap * gap;
  }
  return std::sqrt(sum);
}

std::string BoxRegion::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (std::size_t a = 0; a < lower_.size(); ++a) {
    if (a) os << " x ";
    os << lower_[a] << "," << (a < upper_.size() ? upper_[a] : 0.0);
  }
  os << "]";
  return os.str();
}

}  // namespace shotperc
