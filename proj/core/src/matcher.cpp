#include "dmd/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace dmd {

void MatchConfig::Validate() const {
  if (!(overlap_reference > 0.0)) throw Error(Errc::kInvalidArgument, "H_o must be positive");
  if (min_nm <= 0 || min_nm > max_nm) throw Error(Errc::kInvalidArgument, "need 0 < min_nm <= max_nm");
  if (!(tau > 0.0)) throw Error(Errc::kInvalidArgument, "tau must be positive");
  if (relax_iterations < 0) throw Error(Errc::kInvalidArgument, "relax_iterations must be >= 0");
  if (!(relax_weight >= 0.0 && relax_weight <= 1.0)) throw Error(Errc::kInvalidArgument, "relax weight must be in [0,1]");
  if (!(relax_sigma_distance > 0.0 && relax_sigma_direction > 0.0 && relax_sigma_radial > 0.0)) {
    throw Error(Errc::kInvalidArgument, "relaxation scales must be positive");
  }
  if (overlap_grid < kDescriptorGrid) throw Error(Errc::kInvalidArgument, "overlap grid must be >= 8");
}

namespace {

// Overlap count on an arbitrary fine grid; the 64x64 case uses the bitmaps
// cached inside the descriptors instead.
int OverlapOnGrid(const std::array<float, kGridCells>& ha, const std::array<float, kGridCells>& hb, int grid) {
  const double ratio = static_cast<double>(grid) / kDescriptorGrid;
  auto sample = [](const std::array<float, kGridCells>& m, double u, double v) {
    u = std::clamp(u, 0.0, kDescriptorGrid - 1.0);
    v = std::clamp(v, 0.0, kDescriptorGrid - 1.0);
    const int x0 = std::min(static_cast<int>(u), kDescriptorGrid - 1);
    const int y0 = std::min(static_cast<int>(v), kDescriptorGrid - 1);
    const int x1 = std::min(x0 + 1, kDescriptorGrid - 1);
    const int y1 = std::min(y0 + 1, kDescriptorGrid - 1);
    const double wx = u - x0;
    const double wy = v - y0;
    const double top = m[y0 * kDescriptorGrid + x0] * (1.0 - wx) + m[y0 * kDescriptorGrid + x1] * wx;
    const double bottom = m[y1 * kDescriptorGrid + x0] * (1.0 - wx) + m[y1 * kDescriptorGrid + x1] * wx;
    return top * (1.0 - wy) + bottom * wy;
  };
  int count = 0;
  for (int fy = 0; fy < grid; ++fy) {
    const double v = (fy + 0.5) / ratio - 0.5;
    for (int fx = 0; fx < grid; ++fx) {
      const double u = (fx + 0.5) / ratio - 0.5;
      if (sample(ha, u, v) >= 0.5 && sample(hb, u, v) >= 0.5) ++count;
    }
  }
  return count;
}

std::array<float, kGridCells> MaskFromBits(std::uint64_t bits) {
  std::array<float, kGridCells> m{};
  for (int i = 0; i < kGridCells; ++i) m[i] = ((bits >> i) & 1u) ? 1.0f : 0.0f;
  return m;
}

double OverlapFactor(int overlap, const MatchConfig& cfg) {
  if (!cfg.overlap_normalization) return 1.0;
  return std::sqrt(overlap / cfg.overlap_reference);
}

}  // namespace

double LocalSimilarity(const DenseDescriptor& a, const DenseDescriptor& b, const MatchConfig& cfg) {
  if (a.depth() != b.depth()) throw Error(Errc::kShapeMismatch, "descriptors have different depth");
  const int overlap = cfg.overlap_grid == kOverlapGrid ? OverlapCount(a.overlap_bits(), b.overlap_bits())
                                                       : OverlapOnGrid(a.mask(), b.mask(), cfg.overlap_grid);
  if (overlap == 0) return 0.0;

  const auto fa = a.features();
  const auto fb = b.features();
  const auto& ha = a.mask();
  const auto& hb = b.mask();
  double dot = 0.0;
  double norm_a = 0.0;  // ||f_a ⊙ h_b||²
  double norm_b = 0.0;  // ||f_b ⊙ h_a||²
  for (int c = 0; c < a.depth(); ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * kGridCells;
    for (int cell = 0; cell < kGridCells; ++cell) {
      const double x = fa[base + cell];
      const double y = fb[base + cell];
      dot += x * y;
      const double xa = x * hb[cell];
      const double yb = y * ha[cell];
      norm_a += xa * xa;
      norm_b += yb * yb;
    }
  }
  const double da = std::sqrt(norm_a);
  const double db = std::sqrt(norm_b);
  if (da < 1e-9 || db < 1e-9) return 0.0;
  return dot / (da * db) * OverlapFactor(overlap, cfg);
}

double BinaryLocalSimilarity(const BinaryDescriptor& a, const BinaryDescriptor& b, const MatchConfig& cfg) {
  if (a.channels() != b.channels()) throw Error(Errc::kShapeMismatch, "binary descriptors have different C");
  const std::uint64_t joint = a.mask_bits() & b.mask_bits();
  const int cells = std::popcount(joint);
  if (cells == 0) return 0.0;
  const int overlap = cfg.overlap_grid == kOverlapGrid
                          ? OverlapCount(a.overlap_bits(), b.overlap_bits())
                          : OverlapOnGrid(MaskFromBits(a.mask_bits()), MaskFromBits(b.mask_bits()), cfg.overlap_grid);
  if (overlap == 0) return 0.0;
  // ±1 features restricted to the joint mask: agreements minus disagreements
  // over the same count for both cross-masked norms.
  int disagree = 0;
  const auto wa = a.feature_words();
  const auto wb = b.feature_words();
  for (std::size_t c = 0; c < wa.size(); ++c) disagree += std::popcount((wa[c] ^ wb[c]) & joint);
  const double total = static_cast<double>(a.depth()) * cells;
  return (total - 2.0 * disagree) / total * OverlapFactor(overlap, cfg);
}

SimilarityMatrix ComputeSimilarityMatrix(const Template& a, const Template& b, const MatchConfig& cfg) {
  if (a.format != b.format) throw Error(Errc::kFormat, "templates use different payload formats");
  if (a.channels != b.channels) throw Error(Errc::kShapeMismatch, "templates use different C");
  SimilarityMatrix s(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      s(i, j) = a.format == TemplateFormat::kFloat ? LocalSimilarity(a.dense[i], b.dense[j], cfg)
                                                   : BinaryLocalSimilarity(a.binary[i], b.binary[j], cfg);
    }
  }
  return s;
}

namespace {

struct PairGeometry {
  double distance;
  double direction;  // direction of k relative to i
  double radial;     // bearing of k seen from i, relative to i's direction
};

PairGeometry Geometry(const Minutia& from, const Minutia& to) {
  const Vec2 d = to.position() - from.position();
  return {d.Norm(), AngleDiff(to.theta(), from.theta()), AngleDiff(std::atan2(d.y, d.x), from.theta())};
}

// AngleDiff for inputs already in (−π, π].
double WrappedDiff(double a, double b) {
  double d = a - b;
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

double CompatibilityExponent(const PairGeometry& ga, const PairGeometry& gb, const MatchConfig& cfg) {
  const double dd = (ga.distance - gb.distance) / cfg.relax_sigma_distance;
  const double dr = WrappedDiff(ga.direction, gb.direction) / cfg.relax_sigma_direction;
  const double dq = WrappedDiff(ga.radial, gb.radial) / cfg.relax_sigma_radial;
  return 0.5 * (dd * dd + dr * dr + dq * dq);
}

std::vector<PairGeometry> AllGeometry(const MinutiaSet& s) {
  std::vector<PairGeometry> g(s.size() * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = 0; k < s.size(); ++k) g[i * s.size() + k] = Geometry(s[i], s[k]);
  }
  return g;
}

// Exponents beyond this make ρ < 5e-18 and are treated as zero.
constexpr double kNegligibleExponent = 40.0;

// Largest compatibility table kept in memory (doubles, 128 MiB).
constexpr std::size_t kRelaxCacheEntries = std::size_t{1} << 24;

}  // namespace

double RelaxCompatibility(const Minutia& ai, const Minutia& ak, const Minutia& bj, const Minutia& bl,
                          const MatchConfig& cfg) {
  return std::exp(-CompatibilityExponent(Geometry(ai, ak), Geometry(bj, bl), cfg));
}

SimilarityMatrix Relax(const SimilarityMatrix& s, const MinutiaSet& a, const MinutiaSet& b, const MatchConfig& cfg) {
  if (s.rows() != a.size() || s.cols() != b.size()) {
    throw Error(Errc::kShapeMismatch, "similarity matrix does not match the minutia sets");
  }
  SimilarityMatrix current = s;
  current.set_relaxed(true);
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = std::min(na, nb);
  if (n < 2 || cfg.relax_iterations == 0) return current;

  const auto ga = AllGeometry(a);
  const auto gb = AllGeometry(b);
  const std::size_t cells = na * nb;

  // B-side pair geometry as flat arrays, pre-scaled by the sigmas.
  std::vector<double> bd(nb * nb), br(nb * nb), bq(nb * nb);
  for (std::size_t q = 0; q < nb * nb; ++q) {
    bd[q] = gb[q].distance / cfg.relax_sigma_distance;
    br[q] = gb[q].direction;
    bq[q] = gb[q].radial;
  }
  const double inv_r = 1.0 / cfg.relax_sigma_direction;
  const double inv_q = 1.0 / cfg.relax_sigma_radial;

  // Row (i,j) of the compatibility table holds ρ for every (k,l), zero when
  // (k,l) == (i,j) or ρ is negligible.
  auto fill_row = [&](std::size_t i, std::size_t j, double* out) {
    std::fill(out, out + cells, 0.0);
    for (std::size_t k = 0; k < na; ++k) {
      const PairGeometry& gik = ga[i * na + k];
      const double ad = gik.distance / cfg.relax_sigma_distance;
      const std::size_t row = j * nb;
      for (std::size_t l = 0; l < nb; ++l) {
        if (k == i && l == j) continue;
        const double dd = ad - bd[row + l];
        double e = 0.5 * dd * dd;
        if (e > kNegligibleExponent) continue;
        const double dr = WrappedDiff(gik.direction, br[row + l]) * inv_r;
        e += 0.5 * dr * dr;
        if (e > kNegligibleExponent) continue;
        const double dq = WrappedDiff(gik.radial, bq[row + l]) * inv_q;
        e += 0.5 * dq * dq;
        if (e > kNegligibleExponent) continue;
        out[k * nb + l] = std::exp(-e);
      }
    }
  };

  // The table is cached when it fits the budget, otherwise rebuilt per round.
  const bool cached = cells * cells <= kRelaxCacheEntries;
  std::vector<double> table(cached ? cells * cells : cells);
  if (cached) {
    for (std::size_t p = 0; p < cells; ++p) fill_row(p / nb, p % nb, table.data() + p * cells);
  }

  const double w = cfg.relax_weight;
  const double norm = 1.0 / static_cast<double>(n - 1);
  std::vector<double> prev(cells);
  for (int it = 0; it < cfg.relax_iterations; ++it) {
    for (std::size_t p = 0; p < cells; ++p) prev[p] = current(p / nb, p % nb);
    for (std::size_t p = 0; p < cells; ++p) {
      const double* r = table.data();
      if (cached) {
        r += p * cells;
      } else {
        fill_row(p / nb, p % nb, table.data());
      }
      double support = 0.0;
      for (std::size_t q = 0; q < cells; ++q) support += r[q] * prev[q];
      current(p / nb, p % nb) = w * prev[p] + (1.0 - w) * support * norm;
    }
  }
  return current;
}

std::vector<std::pair<std::size_t, std::size_t>> LsaHungarian(const SimilarityMatrix& s) {
  const bool transpose = s.rows() > s.cols();
  const std::size_t n = transpose ? s.cols() : s.rows();
  const std::size_t m = transpose ? s.rows() : s.cols();
  std::vector<std::pair<std::size_t, std::size_t>> result;
  if (n == 0) return result;
  auto cost = [&](std::size_t r, std::size_t c) { return transpose ? -s(c, r) : -s(r, c); };
  for (double v : s.values()) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "assignment needs a finite matrix");
  }

  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0);
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = owner[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= m; ++c) {
        if (used[c]) continue;
        const double cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= m; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  for (std::size_t c = 1; c <= m; ++c) {
    if (owner[c] == 0) continue;
    if (transpose) {
      result.emplace_back(c - 1, owner[c] - 1);
    } else {
      result.emplace_back(owner[c] - 1, c - 1);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

int SelectNm(std::size_t na, std::size_t nb, const MatchConfig& cfg) {
  const double smaller = static_cast<double>(std::min(na, nb));
  const double sigmoid = 1.0 / (1.0 + std::exp(-cfg.tau * (smaller - cfg.mu)));
  // std::round rounds halves away from zero.
  return cfg.min_nm + static_cast<int>(std::round((cfg.max_nm - cfg.min_nm) * sigmoid));
}

MatchResult ScoreFromSimilarity(const SimilarityMatrix& raw, const MinutiaSet& a, const MinutiaSet& b,
                                const MatchConfig& cfg) {
  if (a.empty() || b.empty()) throw Error(Errc::kEmptyInput, "matching needs two nonempty minutia sets");
  cfg.Validate();
  const SimilarityMatrix relaxed = Relax(raw, a, b, cfg);
  const auto assignment = LsaHungarian(relaxed);

  MatchResult result;
  result.nm = SelectNm(a.size(), b.size(), cfg);
  std::vector<MatchedPair> pairs;
  pairs.reserve(assignment.size());
  for (const auto& [r, c] : assignment) pairs.push_back({r, c, relaxed(r, c)});
  // Assignment is sorted by row, so stable sorting keeps lexicographic order on ties.
  std::stable_sort(pairs.begin(), pairs.end(), [](const MatchedPair& x, const MatchedPair& y) {
    return x.score > y.score;
  });
  const std::size_t take = std::min(pairs.size(), static_cast<std::size_t>(result.nm));
  pairs.resize(take);
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.score;
  result.score = take > 0 ? sum / static_cast<double>(take) : 0.0;
  result.pairs = std::move(pairs);
  return result;
}

MatchResult MatchScore(const Template& a, const Template& b, const MatchConfig& cfg) {
  if (a.size() == 0 || b.size() == 0) throw Error(Errc::kEmptyInput, "matching needs two nonempty templates");
  return ScoreFromSimilarity(ComputeSimilarityMatrix(a, b, cfg), a.Minutiae(), b.Minutiae(), cfg);
}

std::vector<Candidate> Identify(const Template& probe, const std::vector<GalleryEntry>& gallery,
                                const MatchConfig& cfg, int workers) {
  if (gallery.empty()) throw Error(Errc::kEmptyInput, "identification needs a nonempty gallery");
  std::vector<Candidate> ranked(gallery.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(gallery.size());
  auto work = [&] {
    for (std::size_t i = next++; i < gallery.size(); i = next++) {
      try {
        ranked[i] = {i, gallery[i].id, MatchScore(probe, gallery[i].templ, cfg).score};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, static_cast<int>(gallery.size()));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Candidate& x, const Candidate& y) { return x.score > y.score; });
  return ranked;
}

}  // namespace dmd
