#pragma once

#include <cstdint>
#include <vector>

#include "dmd/core_model.hpp"

namespace dmd {

// Minutia Cylinder-Code baseline. Defaults follow the reference values of the
// original MCC publication where this library has no better information.
struct MccParams {
  double radius = 70.0;
  int spatial_divisions = 16;  // N_S
  int angular_divisions = 6;   // N_D
  double sigma_s = 7.0;
  double sigma_d = 0.436;
  double min_valid_fraction = 0.2;
  bool bit_mode = true;
  double hull_offset = 50.0;          // px added around the convex hull
  int min_neighbors = 2;              // contributing minutiae for a valid cylinder
  double max_direction_diff = kPi / 2;  // anchors further apart never match
};

class MccCylinder;

namespace detail {
MccCylinder BuildWithHull(const Minutia& anchor, const MinutiaSet& neighbors, const std::vector<Vec2>& hull,
                          const MccParams& p);
}  // namespace detail

class MccCylinder {
 public:
  const Minutia& anchor() const { return anchor_; }
  bool valid() const { return valid_; }
  bool bit_mode() const { return bit_mode_; }
  int spatial_divisions() const { return ns_; }
  int angular_divisions() const { return nd_; }
  std::size_t CellCount() const { return static_cast<std::size_t>(ns_) * ns_ * nd_; }

  /// Cell index: ((i * N_S) + j) * N_D + k for spatial (i, j), angular k.
  std::size_t Index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * ns_ + j) * nd_ + k; }
  double value(int i, int j, int k) const { return values_[Index(i, j, k)]; }
  bool bit(int i, int j, int k) const;
  bool cell_valid(int i, int j) const { return cell_valid_[static_cast<std::size_t>(i) * ns_ + j] != 0; }

  std::span<const double> values() const { return values_; }
  std::span<const std::uint64_t> bits() const { return bits_; }
  /// Validity expanded to every angular cell, packed like `bits()`.
  std::span<const std::uint64_t> validity_bits() const { return valid_bits_; }
  double ValidFraction() const;

 private:
  friend MccCylinder detail::BuildWithHull(const Minutia&, const MinutiaSet&, const std::vector<Vec2>&,
                                           const MccParams&);

  Minutia anchor_;
  int ns_ = 0;
  int nd_ = 0;
  bool bit_mode_ = true;
  bool valid_ = false;
  std::vector<double> values_;
  std::vector<std::uint8_t> cell_valid_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> valid_bits_;
};

/// `neighbors` is the whole minutia set of the fingerprint; entries that
/// coincide with the anchor are ignored.
MccCylinder BuildCylinder(const Minutia& anchor, const MinutiaSet& neighbors, const MccParams& p = {});

std::vector<MccCylinder> BuildCylinders(const MinutiaSet& minutiae, const MccParams& p = {});

/// Local similarity in [0,1]. Bit mode: 1 - |a xor b| / (|a| + |b|) over the
/// jointly valid cells. Float mode: 1 - ||a-b|| / (||a|| + ||b||).
double MccLocalSimilarity(const MccCylinder& a, const MccCylinder& b, const MccParams& p = {});

/// Counter-clockwise hull (monotone chain); collinear points dropped.
std::vector<Vec2> ConvexHull(std::vector<Vec2> points);
/// 0 inside the hull, else the distance to its boundary.
double DistanceOutsideHull(const std::vector<Vec2>& hull, Vec2 p);

}  // namespace dmd
