#include "dmd/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <random>

namespace dmd {

Affine2D PatchToSource(const Minutia& anchor, int patch_size) {
  const double c = patch_size / 2.0;
  // source = anchor + R(theta) * (p - (c, c))
  return Affine2D::Translation(anchor.x(), anchor.y())
      .Compose(Affine2D::Rigid(anchor.theta()))
      .Compose(Affine2D::Translation(-c, -c));
}

Patch AlignToMinutia(const GrayImage& img, const Minutia& m, int patch_size) {
  if (patch_size <= 0) throw Error(Errc::kInvalidArgument, "patch size must be positive");
  if (m.x() < 0.0 || m.y() < 0.0 || m.x() > img.width() - 1 || m.y() > img.height() - 1) {
    throw Error(Errc::kOutOfBounds, "anchor minutia lies outside the image");
  }
  const Affine2D to_source = PatchToSource(m, patch_size);
  GrayImage out(patch_size, patch_size, kBackgroundValue, img.ppi());
  for (int v = 0; v < patch_size; ++v) {
    for (int u = 0; u < patch_size; ++u) {
      const Vec2 s = to_source.Apply({static_cast<double>(u), static_cast<double>(v)});
      out.at(u, v) = img.SampleBilinear(s.x, s.y, kBackgroundValue);
    }
  }
  return Patch{std::move(out), m};
}

std::size_t RansacResult::InlierCount() const {
  return static_cast<std::size_t>(std::count(inliers.begin(), inliers.end(), true));
}

namespace {

struct Solve {
  Affine2D transform;
  bool ok = false;
};

Solve LeastSquares(const std::vector<MinutiaPair>& pairs, const std::vector<std::size_t>& use) {
  // Unknowns: a00 a01 tx a10 a11 ty.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(use.size()), 6);
  Eigen::VectorXd b(2 * static_cast<Eigen::Index>(use.size()));
  Eigen::Index row = 0;
  for (std::size_t idx : use) {
    const auto& [src, dst] = pairs[idx];
    a.row(row) << src.x(), src.y(), 1.0, 0.0, 0.0, 0.0;
    b(row++) = dst.x();
    a.row(row) << 0.0, 0.0, 0.0, src.x(), src.y(), 1.0;
    b(row++) = dst.y();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 6) return {};
  const Eigen::VectorXd p = qr.solve(b);
  Affine2D t({p(0), p(1), p(3), p(4)}, {p(2), p(5)});
  if (t.IsSingular() || !p.allFinite()) return {};
  return {t, true};
}

bool IsInlier(const MinutiaPair& pair, const Affine2D& t, const RansacConfig& cfg) {
  const Vec2 mapped = t.Apply(pair.first.position());
  if (Distance(mapped, pair.second.position()) >= cfg.inlier_residual_px) return false;
  const double theta = pair.first.theta() + t.RotationAngle();
  return std::abs(AngleDiff(theta, pair.second.theta())) < cfg.inlier_angle_rad;
}

std::vector<bool> Classify(const std::vector<MinutiaPair>& pairs, const Affine2D& t, const RansacConfig& cfg) {
  std::vector<bool> flags(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) flags[i] = IsInlier(pairs[i], t, cfg);
  return flags;
}

}  // namespace

Affine2D FitAffineLeastSquares(const std::vector<MinutiaPair>& pairs) {
  if (pairs.size() < 3) throw Error(Errc::kUnderdetermined, "affine fit needs at least 3 pairs");
  std::vector<std::size_t> all(pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Solve s = LeastSquares(pairs, all);
  if (!s.ok) throw Error(Errc::kUnderdetermined, "correspondences are degenerate (collinear)");
  return s.transform;
}

RansacResult EstimateAffineRansac(const std::vector<MinutiaPair>& pairs, const RansacConfig& cfg) {
  if (cfg.iterations < 1 || !(cfg.inlier_residual_px > 0.0)) {
    throw Error(Errc::kInvalidArgument, "RANSAC needs iterations >= 1 and a positive residual threshold");
  }
  if (pairs.size() < 3) throw Error(Errc::kUnderdetermined, "RANSAC needs at least 3 pairs");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);

  std::size_t best_count = 0;
  Affine2D best;
  bool found = false;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<std::size_t> sample;
    while (sample.size() < 3) {
      const std::size_t i = pick(rng);
      if (std::find(sample.begin(), sample.end(), i) == sample.end()) sample.push_back(i);
    }
    const Solve s = LeastSquares(pairs, sample);
    if (!s.ok) continue;
    const auto flags = Classify(pairs, s.transform, cfg);
    const auto count = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    // Strict improvement keeps the earliest iteration on ties.
    if (count > best_count) {
      best_count = count;
      best = s.transform;
      found = true;
    }
  }
  if (!found || best_count < static_cast<std::size_t>(std::max(cfg.min_inliers, 3))) {
    throw Error(Errc::kNoConsensus, "no affine model reached the minimum inlier count");
  }

  RansacResult result{best, Classify(pairs, best, cfg)};
  std::vector<std::size_t> inlier_idx;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (result.inliers[i]) inlier_idx.push_back(i);
  }
  const Solve refit = LeastSquares(pairs, inlier_idx);
  if (refit.ok) {
    auto flags = Classify(pairs, refit.transform, cfg);
    if (static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)) >= best_count) {
      result.transform = refit.transform;
      result.inliers = std::move(flags);
    }
  }
  return result;
}

std::vector<std::size_t> FarthestPointSampling(const std::vector<Vec2>& points, std::size_t k, std::size_t start) {
  if (points.empty()) throw Error(Errc::kEmptyInput, "farthest point sampling needs at least one point");
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  if (start >= points.size()) throw Error(Errc::kOutOfBounds, "start index out of range");

  const std::size_t n = points.size();
  const std::size_t count = std::min(k, n);
  std::vector<std::size_t> picked{start};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[start] = true;
  while (picked.size() < count) {
    const Vec2 last = points[picked.back()];
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], Distance(points[i], last));
      if (best == n || nearest[i] > nearest[best]) best = i;
    }
    taken[best] = true;
    picked.push_back(best);
  }
  return picked;
}

std::vector<double> SquaredDistanceToZero(const SegMask& mask) {
  // Exact Euclidean distance transform (lower envelope of parabolas), run on
  // the mask padded by one ring of zeros so that the outside counts as 0.
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  constexpr double inf = 1e20;
  std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      grid[static_cast<std::size_t>(y + 1) * w + x + 1] = mask.IsSet(x, y) ? inf : 0.0;
    }
  }
  auto pass = [](std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(n);
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (int q = 1; q < n; ++q) {
      double s = 0.0;
      while (true) {
        const int p = v[k];
        s = ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) / (2.0 * (q - p));
        if (s <= z[k] && k > 0) {
          --k;
          continue;
        }
        break;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const double dq = q - v[k];
      d[q] = dq * dq + f[v[k]];
    }
    f = std::move(d);
  };
  std::vector<double> line;
  for (int x = 0; x < w; ++x) {
    line.resize(h);
    for (int y = 0; y < h; ++y) line[y] = grid[static_cast<std::size_t>(y) * w + x];
    pass(line);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = line[y];
  }
  for (int y = 0; y < h; ++y) {
    line.assign(grid.begin() + static_cast<std::ptrdiff_t>(y) * w, grid.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    pass(line);
    std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  std::vector<double> out(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      out[static_cast<std::size_t>(y) * mask.width() + x] = grid[static_cast<std::size_t>(y + 1) * w + x + 1];
    }
  }
  return out;
}

SegMask ErodeMask(const SegMask& mask, int radius) {
  if (radius < 0) throw Error(Errc::kInvalidArgument, "erosion radius must be non-negative");
  if (radius == 0) return mask;
  // A cell survives iff its nearest zero cell is farther than `radius`.
  const auto dist2 = SquaredDistanceToZero(mask);
  SegMask out(mask.width(), mask.height(), 0.0);
  const double r2 = static_cast<double>(radius) * radius;
  for (std::size_t i = 0; i < dist2.size(); ++i) out.values()[i] = dist2[i] > r2 ? 1.0 : 0.0;
  return out;
}

}  // namespace dmd
