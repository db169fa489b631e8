#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shotperc/geometry.hpp"
#include "shotperc/kernel.hpp"

namespace shotperc {

// Lattice sites lower + i * spacing, i = 0 .. ceil(extent / spacing) per axis.
struct GridSpec {
  BoxRegion region;
  double spacing = 0.0;

  GridSpec() = default;
  GridSpec(BoxRegion r, double eps);

  int dimension() const { return region.dimension(); }
  std::vector<std::size_t> shape() const;
  std::size_t site_count() const;
  double coordinate(int axis, std::size_t index) const {
    return region.lower(axis) + spacing * static_cast<double>(index);
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class FieldKind { shot_noise, gaussian, truncated_shot_noise, truncated_gaussian };

struct FieldLabel {
  FieldKind kind = FieldKind::gaussian;
  double lambda = 0.0;  // shot-noise kinds only
  double range = 0.0;   // truncated kinds only
  std::string to_string() const;
};

// Row-major samples (last axis fastest).
struct GridField {
  GridSpec grid;
  std::vector<double> values;
  FieldLabel label;
  MultiIndex derivative;

  double at(std::size_t i) const { return values[i]; }
  double at(std::size_t i, std::size_t j) const { return values[i * grid.shape()[1] + j]; }
};

// Site ranges [first, last] per axis whose coordinates lie in `sub` (1e-9 slack).
struct SiteBox {
  std::vector<std::size_t> first;
  std::vector<std::size_t> last;
};
SiteBox sites_within(const GridSpec& grid, const BoxRegion& sub);

// max |a - b| over sites in sub_region.
double sup_norm_diff(const GridField& a, const GridField& b, const BoxRegion& sub_region);

// max(|f|, |D_i f|) over sites in sub_region, D_i central differences (one-sided at the
// lattice boundary).
double c1_norm(const GridField& a, const BoxRegion& sub_region);

// Raw little-endian float64 values at `path`, text header at `path` + ".hdr".
void dump_field(const GridField& field, const std::filesystem::path& path, std::uint64_t seed);
GridField load_field(const std::filesystem::path& path);

}  // namespace shotperc
