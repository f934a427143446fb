#include "dmd/minutiae_map.hpp"

#include <algorithm>
#include <tuple>

namespace dmd {

MinutiaeMap::MinutiaeMap(int channels, int grid, double scale) : channels_(channels), grid_(grid), scale_(scale) {
  if (channels <= 0 || grid <= 0 || !(scale > 0.0)) {
    throw Error(Errc::kInvalidArgument, "minutiae map needs positive channels, grid and scale");
  }
  values_.assign(static_cast<std::size_t>(channels) * grid * grid, 0.0);
}

namespace {

double CircularChannelDistance(double a, double b, int channels) {
  double d = std::fmod(std::abs(a - b), static_cast<double>(channels));
  return std::min(d, channels - d);
}

}  // namespace

MinutiaeMap EncodeMinutiaeMap(const MinutiaSet& minutiae, const MapConfig& cfg) {
  if (!(cfg.sigma_pos > 0.0) || !(cfg.sigma_ang > 0.0)) {
    throw Error(Errc::kInvalidArgument, "map sigmas must be positive");
  }
  MinutiaeMap map(cfg.channels, cfg.grid, cfg.scale);
  const double extent = cfg.grid * cfg.scale;
  // Contributions beyond this radius are below 1e-12 and skipped.
  const int reach = static_cast<int>(std::ceil(cfg.sigma_pos * 7.5));
  for (const auto& m : minutiae) {
    if (m.x() < 0.0 || m.y() < 0.0 || m.x() >= extent || m.y() >= extent) {
      throw Error(Errc::kOutOfBounds, "minutia outside the patch");
    }
    const double cx = m.x() / cfg.scale;
    const double cy = m.y() / cfg.scale;
    const double channel = m.theta() * cfg.channels / kTwoPi;
    const int col0 = std::max(0, static_cast<int>(std::floor(cx)) - reach);
    const int col1 = std::min(cfg.grid - 1, static_cast<int>(std::ceil(cx)) + reach);
    const int row0 = std::max(0, static_cast<int>(std::floor(cy)) - reach);
    const int row1 = std::min(cfg.grid - 1, static_cast<int>(std::ceil(cy)) + reach);
    for (int c = 0; c < cfg.channels; ++c) {
      const double dth = CircularChannelDistance(c, channel, cfg.channels);
      const double ang = dth * dth / (2.0 * cfg.sigma_ang * cfg.sigma_ang);
      for (int row = row0; row <= row1; ++row) {
        for (int col = col0; col <= col1; ++col) {
          const double d2 = (col - cx) * (col - cx) + (row - cy) * (row - cy);
          const double v = std::exp(-(d2 / (2.0 * cfg.sigma_pos * cfg.sigma_pos) + ang));
          double& cell = map.at(c, row, col);
          cell = std::max(cell, v);
        }
      }
    }
  }
  return map;
}

namespace {

// Vertex offset of the parabola through (-1, l), (0, c), (1, r).
double ParabolaOffset(double l, double c, double r) {
  const double denom = l - 2.0 * c + r;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

double SafeLog(double v) { return std::log(std::max(v, 1e-300)); }

}  // namespace

MinutiaSet DecodeMinutiaeMap(const MinutiaeMap& map, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(Errc::kInvalidArgument, "threshold must lie in (0,1)");
  const int nc = map.channels();
  const int g = map.grid();
  std::vector<Minutia> found;
  for (int c = 0; c < nc; ++c) {
    for (int row = 0; row < g; ++row) {
      for (int col = 0; col < g; ++col) {
        const double v = map.at(c, row, col);
        if (v < threshold) continue;
        bool is_max = true;
        for (int dc = -1; dc <= 1 && is_max; ++dc) {
          if (nc < 3 && dc != 0) continue;
          const int cc = (c + dc + nc) % nc;
          for (int dr = -1; dr <= 1 && is_max; ++dr) {
            for (int dq = -1; dq <= 1 && is_max; ++dq) {
              if (dc == 0 && dr == 0 && dq == 0) continue;
              const int rr = row + dr;
              const int qq = col + dq;
              if (rr < 0 || qq < 0 || rr >= g || qq >= g) continue;
              const double n = map.at(cc, rr, qq);
              // Plateaus resolve to the first cell in scan order.
              const bool earlier = std::tie(cc, rr, qq) < std::tie(c, row, col);
              if (n > v || (earlier && n == v)) is_max = false;
            }
          }
        }
        if (!is_max) continue;

        const double lc = SafeLog(v);
        double dx = 0.0;
        double dy = 0.0;
        if (col > 0 && col < g - 1) {
          dx = ParabolaOffset(SafeLog(map.at(c, row, col - 1)), lc, SafeLog(map.at(c, row, col + 1)));
        }
        if (row > 0 && row < g - 1) {
          dy = ParabolaOffset(SafeLog(map.at(c, row - 1, col)), lc, SafeLog(map.at(c, row + 1, col)));
        }
        double dth = 0.0;
        if (nc >= 3) {
          dth = ParabolaOffset(SafeLog(map.at((c + nc - 1) % nc, row, col)), lc,
                               SafeLog(map.at((c + 1) % nc, row, col)));
        }
        found.emplace_back((col + dx) * map.scale(), (row + dy) * map.scale(), (c + dth) * kTwoPi / nc);
      }
    }
  }
  // Duplicates can arise from symmetric plateaus; keep the first occurrence.
  std::vector<Minutia> unique;
  for (const auto& m : found) {
    if (std::none_of(unique.begin(), unique.end(), [&](const Minutia& u) { return IsDuplicate(u, m); })) {
      unique.push_back(m);
    }
  }
  return MinutiaSet(std::move(unique));
}

}  // namespace dmd
