#include "shotperc/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

constexpr double kSlack = 1e-9;

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (int a = static_cast<int>(shape.size()) - 2; a >= 0; --a) s[a] = s[a + 1] * shape[a + 1];
  return s;
}

// Visits every flat index inside a SiteBox in row-major order.
template <class F>
void for_each_site(const SiteBox& box, const std::vector<std::size_t>& shape, F&& f) {
  const std::size_t d = shape.size();
  const auto strides = strides_of(shape);
  std::vector<std::size_t> idx = box.first;
  for (;;) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < d; ++a) flat += idx[a] * strides[a];
    f(flat, idx);
    std::size_t a = d;
    while (a > 0) {
      --a;
      if (idx[a] < box.last[a]) {
        ++idx[a];
        break;
      }
      idx[a] = box.first[a];
      if (a == 0) return;
    }
  }
}

}  // namespace

GridSpec::GridSpec(BoxRegion r, double eps) : region(std::move(r)), spacing(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("grid spacing must be > 0");
}

std::vector<std::size_t> GridSpec::shape() const {
  std::vector<std::size_t> s(dimension());
  for (int a = 0; a < dimension(); ++a) {
    s[a] = static_cast<std::size_t>(std::ceil(region.extent(a) / spacing - kSlack)) + 1;
  }
  return s;
}

std::size_t GridSpec::site_count() const {
  std::size_t n = 1;
  for (std::size_t s : shape()) n *= s;
  return n;
}

std::string FieldLabel::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case FieldKind::shot_noise:
      os << "shot_noise(lambda=" << lambda << ")";
      break;
    case FieldKind::gaussian:
      os << "gaussian";
      break;
    case FieldKind::truncated_shot_noise:
      os << "truncated_shot_noise(lambda=" << lambda << ",r=" << range << ")";
      break;
    case FieldKind::truncated_gaussian:
      os << "truncated_gaussian(r=" << range << ")";
      break;
  }
  return os.str();
}

SiteBox sites_within(const GridSpec& grid, const BoxRegion& sub) {
  if (sub.dimension() != grid.dimension()) throw InvalidArgument("sub-region dimension mismatch");
  if (!grid.region.contains(sub, kSlack)) {
    throw InvalidArgument("sub-region " + sub.to_string() + " not inside grid region " +
                          grid.region.to_string());
  }
  const auto shape = grid.shape();
  SiteBox box{std::vector<std::size_t>(shape.size()), std::vector<std::size_t>(shape.size())};
  for (int a = 0; a < grid.dimension(); ++a) {
    const double lo = (sub.lower(a) - grid.region.lower(a)) / grid.spacing;
    const double hi = (sub.upper(a) - grid.region.lower(a)) / grid.spacing;
    const auto first = static_cast<long>(std::ceil(lo - kSlack));
    const auto last = std::min(static_cast<long>(std::floor(hi + kSlack)),
                               static_cast<long>(shape[a]) - 1);
    if (last < first) throw InvalidArgument("sub-region contains no lattice site on some axis");
    box.first[a] = static_cast<std::size_t>(std::max(0L, first));
    box.last[a] = static_cast<std::size_t>(last);
  }
  return box;
}

double sup_norm_diff(const GridField& a, const GridField& b, const BoxRegion& sub_region) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw InvalidArgument("sup_norm_diff: fields have different grid geometry");
  }
  const SiteBox box = sites_within(a.grid, sub_region);
  double sup = 0.0;
  for_each_site(box, a.grid.shape(), [&](std::size_t i, const auto&) {
    sup = std::max(sup, std::fabs(a.values[i] - b.values[i]));
  });
  return sup;
}

double c1_norm(const GridField& a, const BoxRegion& sub_region) {
  const SiteBox box = sites_within(a.grid, sub_region);
  for (std::size_t ax = 0; ax < box.first.size(); ++ax) {
    if (box.last[ax] == box.first[ax]) throw InvalidArgument("c1_norm: fewer than 2 sites on an axis");
  }
  const auto shape = a.grid.shape();
  const auto strides = strides_of(shape);
  const double h = a.grid.spacing;
  double sup = 0.0;
  for_each_site(box, shape, [&](std::size_t i, const std::vector<std::size_t>& idx) {
    sup = std::max(sup, std::fabs(a.values[i]));
    for (std::size_t ax = 0; ax < shape.size(); ++ax) {
      const std::size_t s = strides[ax];
      double deriv;
      if (idx[ax] == 0) {
        deriv = (a.values[i + s] - a.values[i]) / h;
      } else if (idx[ax] + 1 == shape[ax]) {
        deriv = (a.values[i] - a.values[i - s]) / h;
      } else {
        deriv = (a.values[i + s] - a.values[i - s]) / (2.0 * h);
      }
      sup = std::max(sup, std::fabs(deriv));
    }
  });
  return sup;
}

void dump_field(const GridField& field, const std::filesystem::path& path, std::uint64_t seed) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (double v : field.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  std::ofstream hdr(path.string() + ".hdr");
  if (!hdr) throw std::runtime_error("cannot open " + path.string() + ".hdr for writing");
  hdr.precision(17);
  hdr << "format = shotperc-field-v1\n";
  hdr << "dtype = float64-le\n";
  hdr << "order = row-major\n";
  hdr << "shape =";
  for (std::size_t s : field.grid.shape()) hdr << ' ' << s;
  hdr << "\nlower =";
  for (double v : field.grid.region.lower()) hdr << ' ' << v;
  hdr << "\nupper =";
  for (double v : field.grid.region.upper()) hdr << ' ' << v;
  hdr << "\nspacing = " << field.grid.spacing << '\n';
  hdr << "label = " << field.label.to_string() << '\n';
  hdr << "kind = " << static_cast<int>(field.label.kind) << '\n';
  hdr << "lambda = " << field.label.lambda << '\n';
  hdr << "range = " << field.label.range << '\n';
  hdr << "derivative = " << field.derivative.counts[0] << ' ' << field.derivative.counts[1] << ' '
      << field.derivative.counts[2] << '\n';
  hdr << "seed = " << seed << '\n';
  if (!hdr) throw std::runtime_error("write failed: " + path.string() + ".hdr");
}

GridField load_field(const std::filesystem::path& path) {
  std::ifstream hdr(path.string() + ".hdr");
  if (!hdr) throw std::runtime_error("cannot open " + path.string() + ".hdr");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto numbers = [&](const std::string& key) {
    std::istringstream is(kv.at(key));
    std::vector<double> v;
    double x;
    while (is >> x) v.push_back(x);
    return v;
  };
  GridField f;
  f.grid = GridSpec(BoxRegion(numbers("lower"), numbers("upper")), numbers("spacing").at(0));
  f.label.kind = static_cast<FieldKind>(static_cast<int>(numbers("kind").at(0)));
  f.label.lambda = numbers("lambda").at(0);
  f.label.range = numbers("range").at(0);
  const auto deriv = numbers("derivative");
  for (int a = 0; a < kMaxDimension; ++a) f.derivative.counts[a] = static_cast<int>(deriv.at(a));
  f.values.resize(f.grid.site_count());
  std::ifstream in(path, std::ios::binary);
  for (double& v : f.values) {
    std::uint64_t bits;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(&v, &bits, sizeof bits);
  }
  if (!in) throw std::runtime_error("short read: " + path.string());
  return f;
}

}  // namespace shotperc
