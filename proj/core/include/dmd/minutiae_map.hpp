#pragma once

#include <vector>

#include "dmd/core_model.hpp"

namespace dmd {

struct MapConfig {
  double sigma_pos = 1.0;  // map cells
  double sigma_ang = 1.0;  // channel units
  int channels = 6;
  int grid = 64;
  double scale = 2.0;  // patch pixels per map cell
};

// channels x grid x grid heatmap, channel-major then row then column.
class MinutiaeMap {
 public:
  MinutiaeMap(int channels = 6, int grid = 64, double scale = 2.0);

  int channels() const { return channels_; }
  int grid() const { return grid_; }
  double scale() const { return scale_; }

  double& at(int c, int row, int col) { return values_[Index(c, row, col)]; }
  double at(int c, int row, int col) const { return values_[Index(c, row, col)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  std::size_t Index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * grid_ + row) * grid_ + col;
  }

  int channels_;
  int grid_;
  double scale_;
  std::vector<double> values_;
};

/// Minutiae are in patch pixel coordinates, [0, grid*scale)^2.
MinutiaeMap EncodeMinutiaeMap(const MinutiaSet& minutiae, const MapConfig& cfg = {});

/// Local maxima above `threshold`, refined to sub-cell precision by a
/// three-point parabola fit on log values along each axis.
MinutiaSet DecodeMinutiaeMap(const MinutiaeMap& map, double threshold = 0.5);

}  // namespace dmd
