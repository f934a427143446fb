#include "dmd/mcc.hpp"

#include <algorithm>
#include <bit>
#include <limits>

namespace dmd {

bool MccCylinder::bit(int i, int j, int k) const {
  const std::size_t idx = Index(i, j, k);
  return (bits_[idx / 64] >> (idx % 64)) & 1u;
}

double MccCylinder::ValidFraction() const {
  if (cell_valid_.empty()) return 0.0;
  const auto n = std::count(cell_valid_.begin(), cell_valid_.end(), std::uint8_t{1});
  return static_cast<double>(n) / static_cast<double>(cell_valid_.size());
}

std::vector<Vec2> ConvexHull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  points.erase(std::unique(points.begin(), points.end(), [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
               points.end());
  if (points.size() < 3) return points;
  auto cross = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

double SegmentDistance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return Distance(p, a);
  const double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
  return Distance(p, a + t * ab);
}

}  // namespace

double DistanceOutsideHull(const std::vector<Vec2>& hull, Vec2 p) {
  if (hull.empty()) return std::numeric_limits<double>::infinity();
  if (hull.size() == 1) return Distance(p, hull[0]);
  if (hull.size() == 2) return SegmentDistance(p, hull[0], hull[1]);
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i];
    const Vec2 b = hull[(i + 1) % hull.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0) inside = false;
    best = std::min(best, SegmentDistance(p, a, b));
  }
  return inside ? 0.0 : best;
}

MccCylinder BuildCylinder(const Minutia& anchor, const MinutiaSet& neighbors, const MccParams& p) {
  std::vector<Vec2> pts;
  pts.reserve(neighbors.size() + 1);
  for (const auto& m : neighbors) pts.push_back(m.position());
  pts.push_back(anchor.position());
  return detail::BuildWithHull(anchor, neighbors, ConvexHull(std::move(pts)), p);
}

std::vector<MccCylinder> BuildCylinders(const MinutiaSet& minutiae, const MccParams& p) {
  std::vector<Vec2> pts;
  for (const auto& m : minutiae) pts.push_back(m.position());
  const auto hull = ConvexHull(std::move(pts));
  std::vector<MccCylinder> out;
  out.reserve(minutiae.size());
  for (const auto& m : minutiae) out.push_back(detail::BuildWithHull(m, minutiae, hull, p));
  return out;
}

namespace detail {

MccCylinder BuildWithHull(const Minutia& anchor, const MinutiaSet& neighbors, const std::vector<Vec2>& hull,
                          const MccParams& p) {
  if (p.spatial_divisions < 1 || p.angular_divisions < 1 || !(p.radius > 0) || !(p.sigma_s > 0) ||
      !(p.sigma_d > 0)) {
    throw Error(Errc::kInvalidArgument, "MCC parameters must be positive");
  }
  MccCylinder c;
  c.anchor_ = anchor;
  c.ns_ = p.spatial_divisions;
  c.nd_ = p.angular_divisions;
  c.bit_mode_ = p.bit_mode;
  const int ns = c.ns_;
  const int nd = c.nd_;
  c.values_.assign(c.CellCount(), 0.0);
  c.cell_valid_.assign(static_cast<std::size_t>(ns) * ns, 0);

  const double cell_size = 2.0 * p.radius / ns;
  const double angle_step = kTwoPi / nd;
  const double cs = std::cos(anchor.theta());
  const double sn = std::sin(anchor.theta());

  std::vector<const Minutia*> near;
  for (const auto& m : neighbors) {
    if (m == anchor) continue;
    if (Distance(m.position(), anchor.position()) <= p.radius + 3.0 * p.sigma_s) near.push_back(&m);
  }

  int in_circle = 0;
  int valid_cells = 0;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      const double ox = (i - (ns - 1) / 2.0) * cell_size;
      const double oy = (j - (ns - 1) / 2.0) * cell_size;
      const Vec2 center{anchor.x() + cs * ox - sn * oy, anchor.y() + sn * ox + cs * oy};
      if (std::hypot(ox, oy) > p.radius) continue;
      ++in_circle;
      if (DistanceOutsideHull(hull, center) > p.hull_offset) continue;
      ++valid_cells;
      c.cell_valid_[static_cast<std::size_t>(i) * ns + j] = 1;
      for (const Minutia* m : near) {
        const double d = Distance(m->position(), center);
        const double spatial = std::exp(-d * d / (2.0 * p.sigma_s * p.sigma_s));
        const double rel = AngleDiff(m->theta(), anchor.theta());
        for (int k = 0; k < nd; ++k) {
          const double phi = -kPi + (k + 0.5) * angle_step;
          const double da = AngleDiff(phi, rel);
          c.values_[c.Index(i, j, k)] += spatial * std::exp(-da * da / (2.0 * p.sigma_d * p.sigma_d));
        }
      }
    }
  }

  const std::size_t words = (c.CellCount() + 63) / 64;
  c.bits_.assign(words, 0);
  c.valid_bits_.assign(words, 0);
  const double peak = *std::max_element(c.values_.begin(), c.values_.end());
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      if (!c.cell_valid(i, j)) continue;
      for (int k = 0; k < nd; ++k) {
        const std::size_t idx = c.Index(i, j, k);
        c.valid_bits_[idx / 64] |= std::uint64_t{1} << (idx % 64);
        if (peak > 0.0 && c.values_[idx] >= 0.5 * peak) c.bits_[idx / 64] |= std::uint64_t{1} << (idx % 64);
      }
    }
  }
  const double fraction = in_circle > 0 ? static_cast<double>(valid_cells) / in_circle : 0.0;
  c.valid_ = static_cast<int>(near.size()) >= p.min_neighbors && peak > 0.0 && fraction >= p.min_valid_fraction;
  return c;
}

}  // namespace detail

double MccLocalSimilarity(const MccCylinder& a, const MccCylinder& b, const MccParams& p) {
  if (!a.valid() || !b.valid()) throw Error(Errc::kInvalidCylinder, "similarity needs two valid cylinders");
  if (a.CellCount() != b.CellCount() || a.bit_mode() != b.bit_mode()) {
    throw Error(Errc::kShapeMismatch, "cylinders built with different parameters");
  }
  if (std::abs(AngleDiff(a.anchor().theta(), b.anchor().theta())) > p.max_direction_diff) return 0.0;

  const int ns = a.spatial_divisions();
  const int nd = a.angular_divisions();
  int in_circle = 0;
  int joint = 0;
  const double cell_size = 2.0 * p.radius / ns;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      if (std::hypot((i - (ns - 1) / 2.0) * cell_size, (j - (ns - 1) / 2.0) * cell_size) > p.radius) continue;
      ++in_circle;
      if (a.cell_valid(i, j) && b.cell_valid(i, j)) ++joint;
    }
  }
  if (in_circle == 0 || static_cast<double>(joint) / in_circle < p.min_valid_fraction) return 0.0;

  if (a.bit_mode()) {
    std::size_t diff = 0;
    std::size_t na = 0;
    std::size_t nb = 0;
    const auto va = a.validity_bits();
    const auto vb = b.validity_bits();
    for (std::size_t w = 0; w < va.size(); ++w) {
      const std::uint64_t both = va[w] & vb[w];
      diff += std::popcount((a.bits()[w] ^ b.bits()[w]) & both);
      na += std::popcount(a.bits()[w] & both);
      nb += std::popcount(b.bits()[w] & both);
    }
    if (na + nb == 0) return 0.0;
    return 1.0 - static_cast<double>(diff) / static_cast<double>(na + nb);
  }

  double diff2 = 0.0;
  double na2 = 0.0;
  double nb2 = 0.0;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      if (!a.cell_valid(i, j) || !b.cell_valid(i, j)) continue;
      for (int k = 0; k < nd; ++k) {
        const double x = a.value(i, j, k);
        const double y = b.value(i, j, k);
        diff2 += (x - y) * (x - y);
        na2 += x * x;
        nb2 += y * y;
      }
    }
  }
  const double denom = std::sqrt(na2) + std::sqrt(nb2);
  if (denom <= 0.0) return 0.0;
  return 1.0 - std::sqrt(diff2) / denom;
}

}  // namespace dmd
