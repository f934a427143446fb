#include "dmd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dmd {
namespace {

using Rng = std::mt19937_64;

double Uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec2 UnitVector(double angle) { return {std::cos(angle), std::sin(angle)}; }

double Dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double Smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double CubicBSpline(double t) {
  t = std::abs(t);
  if (t < 1.0) return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  if (t < 2.0) {
    const double u = 2.0 - t;
    return u * u * u / 6.0;
  }
  return 0.0;
}

int RoundToInt(double v) { return static_cast<int>(std::lround(v)); }

bool MaskAt(const SegMask& mask, Vec2 p) { return mask.IsSet(RoundToInt(p.x), RoundToInt(p.y)); }

// Image, orientation, period and mask of the model seen through `to_model`.
// The map's Jacobian comes from differences over the pixel grid.
void Render(SynthFingerprint& fp) {
  const RidgeModel& model = *fp.model;
  const int w = fp.crop.width();
  const int h = fp.crop.height();
  std::vector<Vec2> grid(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = fp.to_model({double(x), double(y)});
  }
  auto at = [&](int x, int y) { return grid[static_cast<std::size_t>(y) * w + x]; };

  GrayImage image(w, h, kBackgroundValue);
  Raster orientation(w, h, 0.0);
  Raster period(w, h, model.period);
  SegMask mask(w, h, 0.0);
  const double k = kTwoPi / model.period;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 p = at(x, y);
      const double weight = model.Foreground(p) * fp.crop.at(x, y);
      const double ridge = 0.5 + 0.5 * std::cos(model.Phase(p));
      image.at(x, y) = 1.0 - weight * ridge;
      mask.at(x, y) = weight >= 0.5 ? 1.0 : 0.0;

      const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, w - 1);
      const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, h - 1);
      const Vec2 px = (1.0 / (x1 - x0)) * (at(x1, y) - at(x0, y));  // dP/dx
      const Vec2 py = (1.0 / (y1 - y0)) * (at(x, y1) - at(x, y0));  // dP/dy
      const Vec2 g = k * model.DistanceGradient(p);
      const double gx = g.x * px.x + g.y * px.y;
      const double gy = g.x * py.x + g.y * py.y;
      double ridge_angle = std::atan2(gy, gx) + 0.5 * kPi;
      ridge_angle = std::fmod(ridge_angle, kPi);
      if (ridge_angle < 0.0) ridge_angle += kPi;
      orientation.at(x, y) = ridge_angle;
      const double grad = std::hypot(gx, gy);
      period.at(x, y) = grad > 1e-9 ? kTwoPi / grad : model.period;
    }
  }
  image.ClampValues();
  fp.image = std::move(image);
  fp.orientation = std::move(orientation);
  fp.local_period = std::move(period);
  fp.mask = std::move(mask);
}

MinutiaSet KeepInsideMask(const std::vector<Minutia>& candidates, const SegMask& mask, const std::string& id) {
  std::vector<Minutia> kept;
  for (const Minutia& m : candidates) {
    if (MaskAt(mask, m.position())) kept.push_back(m);
  }
  return MinutiaSet(std::move(kept), id);
}

}  // namespace

double RidgeModel::Distance(Vec2 p) const {
  const Vec2 d = p - center;
  const double q = metric[0] * d.x * d.x + 2.0 * metric[1] * d.x * d.y + metric[2] * d.y * d.y;
  double g = std::sqrt(std::max(q, 0.0));
  for (const Wave& wv : waves) g += wv.amplitude * std::sin(Dot(wv.frequency, p) + wv.phase);
  return g;
}

Vec2 RidgeModel::DistanceGradient(Vec2 p) const {
  const Vec2 d = p - center;
  const double q = metric[0] * d.x * d.x + 2.0 * metric[1] * d.x * d.y + metric[2] * d.y * d.y;
  Vec2 grad{};
  if (q > 1e-12) {
    const double r = std::sqrt(q);
    grad = {(metric[0] * d.x + metric[1] * d.y) / r, (metric[1] * d.x + metric[2] * d.y) / r};
  }
  for (const Wave& wv : waves) grad = grad + (wv.amplitude * std::cos(Dot(wv.frequency, p) + wv.phase)) * wv.frequency;
  return grad;
}

double RidgeModel::ContinuousPhase(Vec2 p) const { return kTwoPi * Distance(p) / period; }

double RidgeModel::Phase(Vec2 p) const {
  double phase = ContinuousPhase(p);
  for (const Spiral& s : spirals) {
    const Vec2 d = p - s.position;
    const Vec2 normal{-s.tangent.y, s.tangent.x};
    phase += s.sign * std::atan2(Dot(d, normal), Dot(d, s.tangent));
  }
  return phase;
}

double RidgeModel::Foreground(Vec2 p) const {
  const double u = (p.x - fg_center.x) / fg_radii.x;
  const double v = (p.y - fg_center.y) / fg_radii.y;
  constexpr double kExponent = 2.5;
  const double rho = std::pow(std::pow(std::abs(u), kExponent) + std::pow(std::abs(v), kExponent), 1.0 / kExponent);
  const double phi = std::atan2(v, u);
  double boundary = 1.0;
  for (const auto& [order, amplitude, phase] : fg_wobble) boundary += amplitude * std::cos(order * phi + phase);
  const double signed_px = (boundary - rho) * std::min(fg_radii.x, fg_radii.y);
  return 1.0 / (1.0 + std::exp(-signed_px));
}

SynthFingerprint SynthesizeFingerprint(std::uint64_t seed, const SynthConfig& cfg) {
  if (cfg.size < 128) throw Error(Errc::kInvalidArgument, "synthetic canvas must be at least 128 px");
  const int n = cfg.size;
  const double size = n;
  Rng rng(seed);
  auto model = std::make_shared<RidgeModel>();
  model->width = n;
  model->height = n;
  model->period = Uniform(rng, cfg.min_period, cfg.max_period);

  const Vec2 canvas_center{0.5 * (size - 1), 0.5 * (size - 1)};
  const bool whorl = Uniform(rng, 0.0, 1.0) < 0.5;
  if (whorl) {
    model->center = canvas_center + Vec2{Uniform(rng, -0.12, 0.12) * size, Uniform(rng, -0.12, 0.12) * size};
  } else {
    model->center = canvas_center + Uniform(rng, 1.2, 3.0) * size * UnitVector(Uniform(rng, 0.0, kTwoPi));
  }
  const double ecc = Uniform(rng, 0.7, 1.0);
  const double alpha = Uniform(rng, 0.0, kPi);
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  // R diag(1, ecc) R^T
  model->metric = {ca * ca + ecc * sa * sa, (1.0 - ecc) * ca * sa, sa * sa + ecc * ca * ca};
  for (int k = 0; k < 2; ++k) {
    const double wavelength = Uniform(rng, 120.0, 200.0);
    model->waves.push_back({Uniform(rng, 1.5, 3.5), (kTwoPi / wavelength) * UnitVector(Uniform(rng, 0.0, kTwoPi)),
                            Uniform(rng, 0.0, kTwoPi)});
  }

  model->fg_center = canvas_center + Vec2{Uniform(rng, -0.04, 0.04) * size, Uniform(rng, -0.04, 0.04) * size};
  model->fg_radii = {Uniform(rng, 0.36, 0.44) * size, Uniform(rng, 0.40, 0.47) * size};
  for (int order = 2; order <= 4; ++order) {
    model->fg_wobble.push_back({static_cast<double>(order), Uniform(rng, 0.0, 0.04), Uniform(rng, 0.0, kTwoPi)});
  }

  SegMask fg(n, n, 0.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) fg.at(x, y) = model->Foreground({double(x), double(y)}) >= 0.5 ? 1.0 : 0.0;
  }
  const std::vector<double> dist2 = SquaredDistanceToZero(fg);
  const double area = fg.Coverage() * n * n;
  const auto target = static_cast<std::size_t>(std::max(1.0, std::round(area / cfg.minutia_area)));
  const double margin2 = static_cast<double>(cfg.border_margin) * cfg.border_margin;

  std::vector<Minutia> minutiae;
  for (std::size_t attempt = 0; attempt < 400 * target && minutiae.size() < target; ++attempt) {
    const Vec2 p{Uniform(rng, 0.0, size - 1), Uniform(rng, 0.0, size - 1)};
    const int sign = Uniform(rng, 0.0, 1.0) < 0.5 ? 1 : -1;
    const std::size_t cell = static_cast<std::size_t>(RoundToInt(p.y)) * n + RoundToInt(p.x);
    if (dist2[cell] < margin2) continue;
    if (whorl && Distance(p, model->center) < 20.0) continue;
    const Vec2 grad = model->DistanceGradient(p);
    if (grad.Norm() < 0.3) continue;
    const bool crowded = std::any_of(minutiae.begin(), minutiae.end(), [&](const Minutia& m) {
      return Distance(m.position(), p) < cfg.minutia_spacing;
    });
    if (crowded) continue;
    const Vec2 normal = (1.0 / grad.Norm()) * grad;
    const Vec2 tangent{normal.y, -normal.x};
    model->spirals.push_back({p, tangent, sign});
    minutiae.emplace_back(p.x, p.y, std::atan2(sign * tangent.y, sign * tangent.x));
  }

  SynthFingerprint fp;
  fp.frequency = model->period;
  fp.crop = SegMask(n, n, 1.0);
  fp.model = std::move(model);
  fp.to_model = [](Vec2 p) { return p; };
  Render(fp);
  fp.minutiae = KeepInsideMask(minutiae, fp.mask, "synth-" + std::to_string(seed));
  return fp;
}

DistortionField::DistortionField(int width, int height, const DistortionConfig& cfg)
    : width_(width), height_(height), nodes_(cfg.grid + 2) {
  if (width < 2 || height < 2) throw Error(Errc::kInvalidArgument, "distortion canvas too small");
  if (!std::isfinite(cfg.magnitude) || cfg.magnitude < 0.0) {
    throw Error(Errc::kInvalidArgument, "distortion magnitude must be finite and non-negative");
  }
  if (cfg.grid < 1) throw Error(Errc::kInvalidArgument, "distortion grid must have at least one node");
  spacing_x_ = (width - 1.0) / (cfg.grid + 1);
  spacing_y_ = (height - 1.0) / (cfg.grid + 1);
  if (cfg.magnitude > 0.25 * std::min(spacing_x_, spacing_y_)) {
    throw Error(Errc::kInvalidArgument, "distortion magnitude too large for the control grid (map would fold)");
  }
  offsets_.assign(static_cast<std::size_t>(nodes_) * nodes_, Vec2{});
  Rng rng(cfg.seed);
  for (int j = 1; j <= cfg.grid; ++j) {
    for (int i = 1; i <= cfg.grid; ++i) {
      const double r = cfg.magnitude * std::sqrt(Uniform(rng, 0.0, 1.0));
      offsets_[static_cast<std::size_t>(j) * nodes_ + i] = r * UnitVector(Uniform(rng, 0.0, kTwoPi));
    }
  }
}

Vec2 DistortionField::Displacement(Vec2 p) const {
  if (p.x <= 0.0 || p.y <= 0.0 || p.x >= width_ - 1.0 || p.y >= height_ - 1.0) return {};
  const double u = p.x / spacing_x_;
  const double v = p.y / spacing_y_;
  const int i0 = static_cast<int>(std::floor(u));
  const int j0 = static_cast<int>(std::floor(v));
  Vec2 d{};
  for (int j = j0 - 1; j <= j0 + 2; ++j) {
    if (j < 0 || j >= nodes_) continue;
    const double wy = CubicBSpline(v - j);
    for (int i = i0 - 1; i <= i0 + 2; ++i) {
      if (i < 0 || i >= nodes_) continue;
      d = d + (wy * CubicBSpline(u - i)) * offsets_[static_cast<std::size_t>(j) * nodes_ + i];
    }
  }
  const double tx = Smoothstep(std::min(p.x, width_ - 1.0 - p.x) / spacing_x_);
  const double ty = Smoothstep(std::min(p.y, height_ - 1.0 - p.y) / spacing_y_);
  return (tx * ty) * d;
}

Vec2 DistortionField::Inverse(Vec2 y) const {
  Vec2 x = y;
  for (int it = 0; it < 200; ++it) {
    const Vec2 next = y - Displacement(x);
    const double step = Distance(next, x);
    x = next;
    if (step < 1e-9) break;
  }
  return x;
}

SynthFingerprint WarpFingerprint(const SynthFingerprint& fp, const PointMap& forward, const PointMap& inverse) {
  if (!fp.model) throw Error(Errc::kInvalidArgument, "fingerprint has no ridge model");
  SynthFingerprint out;
  out.frequency = fp.frequency;
  out.model = fp.model;
  out.to_model = [old = fp.to_model, inverse](Vec2 p) { return old(inverse(p)); };
  const int w = fp.crop.width();
  const int h = fp.crop.height();
  out.crop = SegMask(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.crop.at(x, y) = MaskAt(fp.crop, inverse({double(x), double(y)})) ? 1.0 : 0.0;
  }
  Render(out);

  constexpr double kStep = 0.5;
  std::vector<Minutia> moved;
  for (const Minutia& m : fp.minutiae) {
    const Vec2 p = forward(m.position());
    const Vec2 dir = UnitVector(m.theta());
    const Vec2 dp = forward(m.position() + kStep * dir) - forward(m.position() - kStep * dir);
    moved.emplace_back(p.x, p.y, std::atan2(dp.y, dp.x));
  }
  out.minutiae = KeepInsideMask(moved, out.mask, fp.minutiae.source_id());
  return out;
}

SynthFingerprint ApplyDistortion(const SynthFingerprint& fp, const DistortionConfig& cfg) {
  if (!std::isfinite(cfg.magnitude)) throw Error(Errc::kInvalidArgument, "distortion magnitude must be finite");
  if (cfg.magnitude == 0.0) return fp;
  auto field = std::make_shared<DistortionField>(fp.image.width(), fp.image.height(), cfg);
  return WarpFingerprint(
      fp, [field](Vec2 p) { return field->Forward(p); }, [field](Vec2 p) { return field->Inverse(p); });
}

SynthFingerprint ApplyRigidMotion(const SynthFingerprint& fp, const Affine2D& motion) {
  const Affine2D inv = motion.Inverse();
  SynthFingerprint out = WarpFingerprint(
      fp, [motion](Vec2 p) { return motion.Apply(p); }, [inv](Vec2 p) { return inv.Apply(p); });
  // Exact directions for rigid motions.
  std::vector<Minutia> moved;
  for (const Minutia& m : fp.minutiae) {
    const Minutia t = TransformMinutia(m, motion);
    if (MaskAt(out.mask, t.position())) moved.push_back(t);
  }
  out.minutiae = MinutiaSet(std::move(moved), fp.minutiae.source_id());
  return out;
}

SynthFingerprint SimulatePlain(const SynthFingerprint& fp, const SegMask& crop_mask) {
  if (crop_mask.width() != fp.mask.width() || crop_mask.height() != fp.mask.height()) {
    throw Error(Errc::kShapeMismatch, "crop mask must cover the fingerprint canvas");
  }
  SynthFingerprint out = fp;
  for (int y = 0; y < fp.mask.height(); ++y) {
    for (int x = 0; x < fp.mask.width(); ++x) {
      if (crop_mask.IsSet(x, y)) continue;
      out.crop.at(x, y) = 0.0;
      out.mask.at(x, y) = 0.0;
      out.image.at(x, y) = kBackgroundValue;
    }
  }
  out.minutiae = KeepInsideMask({fp.minutiae.begin(), fp.minutiae.end()}, out.mask, fp.minutiae.source_id());
  return out;
}

SegMask RandomCropMask(const SynthFingerprint& fp, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::kInvalidArgument, "crop fraction must be in (0, 1]");
  const SegMask& mask = fp.mask;
  const int w = mask.width();
  const int h = mask.height();
  double total = 0.0;
  Vec2 centroid{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.IsSet(x, y)) continue;
      total += 1.0;
      centroid = centroid + Vec2{double(x), double(y)};
    }
  }
  if (total == 0.0) throw Error(Errc::kEmptyInput, "fingerprint has an empty mask");
  centroid = (1.0 / total) * centroid;

  Rng rng(seed);
  const double extent = std::sqrt(total / kPi);
  const Vec2 center = centroid + Vec2{Uniform(rng, -0.25, 0.25) * extent, Uniform(rng, -0.25, 0.25) * extent};
  const double aspect = Uniform(rng, 0.75, 1.3);
  const double angle = Uniform(rng, 0.0, kPi);
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);

  auto inside = [&](int x, int y, double scale) {
    const Vec2 d = Vec2{double(x), double(y)} - center;
    const double u = (ca * d.x + sa * d.y) / (scale * aspect);
    const double v = (-sa * d.x + ca * d.y) / (scale / aspect);
    return u * u + v * v <= 1.0;
  };
  auto kept = [&](double scale) {
    double count = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (mask.IsSet(x, y) && inside(x, y, scale)) count += 1.0;
      }
    }
    return count / total;
  };
  double lo = 0.0;
  double hi = 2.0 * std::hypot(double(w), double(h));
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kept(mid) < fraction ? lo : hi) = mid;
  }
  SegMask crop(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) crop.at(x, y) = inside(x, y, hi) ? 1.0 : 0.0;
  }
  return crop;
}

SynthFingerprint InjectSpuriousMinutiae(const SynthFingerprint& fp, std::size_t count, std::uint64_t seed,
                                        double min_separation) {
  std::vector<Minutia> all(fp.minutiae.begin(), fp.minutiae.end());
  Rng rng(seed);
  const double w = fp.mask.width();
  const double h = fp.mask.height();
  std::size_t added = 0;
  for (std::size_t attempt = 0; attempt < 2000 * (count + 1) && added < count; ++attempt) {
    const Vec2 p{Uniform(rng, 0.0, w - 1), Uniform(rng, 0.0, h - 1)};
    const double theta = Uniform(rng, 0.0, kTwoPi);
    if (!MaskAt(fp.mask, p)) continue;
    const bool crowded = std::any_of(all.begin(), all.end(), [&](const Minutia& m) {
      return Distance(m.position(), p) < min_separation;
    });
    if (crowded) continue;
    all.emplace_back(p.x, p.y, theta);
    ++added;
  }
  if (added < count) throw Error(Errc::kInvalidArgument, "no room for the requested spurious minutiae");
  SynthFingerprint out = fp;
  out.minutiae = MinutiaSet(std::move(all), fp.minutiae.source_id());
  return out;
}

SynthFingerprint MakeImpression(const SynthFingerprint& master, const ImpressionRecipe& recipe) {
  if (!(recipe.crop > 0.0 && recipe.crop <= 1.0)) throw Error(Errc::kInvalidArgument, "crop must be in (0, 1]");
  SynthFingerprint fp = recipe.distortion.magnitude > 0.0 ? ApplyDistortion(master, recipe.distortion) : master;
  if (recipe.rotation != 0.0 || recipe.shift.x != 0.0 || recipe.shift.y != 0.0) {
    const Vec2 center{fp.image.width() / 2.0, fp.image.height() / 2.0};
    fp = ApplyRigidMotion(fp, Affine2D::Rigid(recipe.rotation, center, recipe.shift));
  }
  if (recipe.crop < 1.0) fp = SimulatePlain(fp, RandomCropMask(fp, recipe.crop, recipe.seed));
  if (recipe.spurious > 0) fp = InjectSpuriousMinutiae(fp, recipe.spurious, recipe.seed + 1);
  return fp;
}

AugmentConfig AugmentConfig::None() {
  AugmentConfig cfg;
  cfg.max_translation = 0.0;
  cfg.max_rotation = 0.0;
  cfg.noise_sigma = 0.0;
  cfg.min_gamma = 1.0;
  cfg.max_gamma = 1.0;
  cfg.distortion = 0.0;
  return cfg;
}

AugmentParams DrawAugmentation(const AugmentConfig& cfg, std::uint64_t seed) {
  if (cfg.max_translation < 0.0 || cfg.max_rotation < 0.0 || cfg.noise_sigma < 0.0 || cfg.distortion < 0.0 ||
      cfg.min_gamma <= 0.0 || cfg.max_gamma < cfg.min_gamma) {
    throw Error(Errc::kInvalidArgument, "invalid augmentation ranges");
  }
  Rng rng(seed);
  AugmentParams p;
  p.tx = cfg.max_translation * Uniform(rng, -1.0, 1.0);
  p.ty = cfg.max_translation * Uniform(rng, -1.0, 1.0);
  p.rotation = cfg.max_rotation * Uniform(rng, -1.0, 1.0);
  p.gamma = std::exp(Uniform(rng, std::log(cfg.min_gamma), std::log(cfg.max_gamma)));
  if (cfg.min_gamma == cfg.max_gamma) p.gamma = cfg.min_gamma;
  p.noise_sigma = cfg.noise_sigma;
  p.distortion = cfg.distortion;
  p.seed = rng();
  return p;
}

Patch ApplyAugmentation(const Patch& patch, const AugmentParams& params) {
  const GrayImage& src = patch.image;
  const int n = src.width();
  if (n <= 0 || src.height() != n) throw Error(Errc::kInvalidArgument, "patch must be square and non-empty");
  const double c = n / 2.0;
  const double cr = std::cos(params.rotation);
  const double sr = std::sin(params.rotation);
  std::shared_ptr<DistortionField> field;
  if (params.distortion > 0.0) {
    field = std::make_shared<DistortionField>(n, n, DistortionConfig{params.distortion, 3, params.seed});
  }
  Rng rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);

  GrayImage out(n, n, kBackgroundValue, src.ppi());
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      // Inverse of "rotate about the center, then translate".
      const double dx = u - c - params.tx;
      const double dy = v - c - params.ty;
      Vec2 q{cr * dx + sr * dy + c, -sr * dx + cr * dy + c};
      if (field) q = q + field->Displacement({double(u), double(v)});
      double value = src.SampleBilinear(q.x, q.y, kBackgroundValue);
      if (params.gamma != 1.0) value = std::pow(std::max(value, 0.0), params.gamma);
      if (params.noise_sigma > 0.0) value += noise(rng);
      out.at(u, v) = std::clamp(value, 0.0, 1.0);
    }
  }
  return Patch{std::move(out), patch.anchor};
}

Patch Augment(const Patch& patch, const AugmentConfig& cfg, std::uint64_t seed) {
  return ApplyAugmentation(patch, DrawAugmentation(cfg, seed));
}

GroundTruth GroundTruthOf(const SynthFingerprint& fp) {
  return GroundTruth{fp.orientation, fp.local_period, fp.minutiae, fp.mask};
}

namespace {

std::vector<double> BoxBlur(const std::vector<double>& in, int w, int h, int r) {
  std::vector<double> tmp(in.size());
  std::vector<double> out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) s += in[static_cast<std::size_t>(y) * w + k];
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k) s += tmp[static_cast<std::size_t>(k) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  return out;
}

}  // namespace

GroundTruth EstimateGroundTruth(const GrayImage& image, const MinutiaSet& minutiae, const SegMask& mask,
                                double period) {
  const int w = image.width();
  const int h = image.height();
  if (w < 3 || h < 3) throw Error(Errc::kInvalidArgument, "image too small for orientation estimation");
  if (!(period > 0.0)) throw Error(Errc::kInvalidArgument, "ridge period must be positive");
  SegMask m = mask.empty() ? SegMask(w, h, 1.0) : mask.Thresholded();
  if (m.width() != w || m.height() != h) throw Error(Errc::kShapeMismatch, "mask does not match the image");

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> gxx(n, 0.0), gyy(n, 0.0), gxy(n, 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = 0.5 * (image.at(x + 1, y) - image.at(x - 1, y));
      const double gy = 0.5 * (image.at(x, y + 1) - image.at(x, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gxx[i] = gx * gx;
      gyy[i] = gy * gy;
      gxy[i] = gx * gy;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    gxx = BoxBlur(gxx, w, h, 4);
    gyy = BoxBlur(gyy, w, h, 4);
    gxy = BoxBlur(gxy, w, h, 4);
  }
  Raster orientation(w, h, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double angle = 0.5 * std::atan2(2.0 * gxy[i], gxx[i] - gyy[i]) + 0.5 * kPi;
    angle = std::fmod(angle, kPi);
    if (angle < 0.0) angle += kPi;
    orientation.values()[i] = angle;
  }
  return GroundTruth{std::move(orientation), Raster(w, h, period), minutiae, std::move(m)};
}

namespace {

// Weighted z-normalization of each channel over the foreground cells.
void NormalizeChannels(std::vector<float>& features, const std::array<float, kGridCells>& weight) {
  constexpr double kStdFloor = 0.05;
  double total = 0.0;
  for (float w : weight) total += w;
  if (total <= 0.0) {
    std::fill(features.begin(), features.end(), 0.0f);
    return;
  }
  for (int c = 0; c < kOracleChannels; ++c) {
    double mean = 0.0;
    for (int i = 0; i < kGridCells; ++i) mean += weight[i] * features[c * kGridCells + i];
    mean /= total;
    double var = 0.0;
    for (int i = 0; i < kGridCells; ++i) {
      const double d = features[c * kGridCells + i] - mean;
      var += weight[i] * d * d;
    }
    const double sd = std::max(std::sqrt(var / total), kStdFloor);
    for (int i = 0; i < kGridCells; ++i) {
      float& f = features[c * kGridCells + i];
      f = weight[i] > 0.0f ? static_cast<float>((f - mean) / sd) : 0.0f;
    }
  }
}

}  // namespace

OracleFeatures OracleExtract(const Patch& patch, const GroundTruth& gt) {
  const GrayImage& img = patch.image;
  const int n = img.width();
  if (n < kDescriptorGrid || n % kDescriptorGrid != 0 || img.height() != n) {
    throw Error(Errc::kInvalidArgument, "patch must be square with a side divisible by 8");
  }
  if (gt.orientation.empty() || gt.mask.empty() || gt.local_period.empty()) {
    throw Error(Errc::kEmptyInput, "ground truth fields are missing");
  }
  if (gt.orientation.width() != gt.mask.width() || gt.orientation.height() != gt.mask.height() ||
      gt.local_period.width() != gt.mask.width() || gt.local_period.height() != gt.mask.height()) {
    throw Error(Errc::kShapeMismatch, "ground truth rasters disagree in size");
  }
  const int cell = n / kDescriptorGrid;
  const Affine2D to_source = PatchToSource(patch.anchor, n);
  const double anchor_theta = patch.anchor.theta();

  struct Acc {
    double px = 0, fg = 0, c2 = 0, s2 = 0, freq = 0, sum = 0, sum2 = 0, jxx = 0, jyy = 0, jxy = 0;
  };
  std::array<Acc, kGridCells> acc{};
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      Acc& a = acc[(v / cell) * kDescriptorGrid + u / cell];
      a.px += 1.0;
      const Vec2 s = to_source.Apply({double(u), double(v)});
      const int sx = RoundToInt(s.x);
      const int sy = RoundToInt(s.y);
      if (!gt.mask.IsSet(sx, sy)) continue;
      a.fg += 1.0;
      const double rel = 2.0 * (gt.orientation.at(sx, sy) - anchor_theta);
      a.c2 += std::cos(rel);
      a.s2 += std::sin(rel);
      a.freq += 9.0 / gt.local_period.at(sx, sy);
      const double value = img.at(u, v);
      a.sum += value;
      a.sum2 += value * value;
      if (u > 0 && v > 0 && u + 1 < n && v + 1 < n) {
        const double gx = 0.5 * (img.at(u + 1, v) - img.at(u - 1, v));
        const double gy = 0.5 * (img.at(u, v + 1) - img.at(u, v - 1));
        a.jxx += gx * gx;
        a.jyy += gy * gy;
        a.jxy += gx * gy;
      }
    }
  }

  OracleFeatures out;
  out.texture.assign(static_cast<std::size_t>(kOracleChannels) * kGridCells, 0.0f);
  out.minutiae.assign(static_cast<std::size_t>(kOracleChannels) * kGridCells, 0.0f);
  for (int i = 0; i < kGridCells; ++i) {
    const Acc& a = acc[i];
    out.mask[i] = static_cast<float>(a.fg / a.px);
    if (a.fg == 0.0) continue;
    const double c2 = a.c2 / a.fg;
    const double s2 = a.s2 / a.fg;
    const double mean = a.sum / a.fg;
    const double energy = a.jxx + a.jyy;
    const double t[kOracleChannels] = {
        c2,
        s2,
        a.freq / a.fg,
        std::sqrt(std::max(a.sum2 / a.fg - mean * mean, 0.0)),
        std::hypot(c2, s2),
        energy > 1e-12 ? std::hypot(a.jxx - a.jyy, 2.0 * a.jxy) / energy : 0.0,
    };
    for (int c = 0; c < kOracleChannels; ++c) out.texture[c * kGridCells + i] = static_cast<float>(t[c]);
  }

  // Minutiae in the patch frame.
  const Affine2D to_patch = to_source.Inverse();
  struct Local {
    Vec2 p;
    double dtheta;
  };
  std::vector<Local> local;
  for (const Minutia& m : gt.minutiae) {
    const Vec2 p = to_patch.Apply(m.position());
    if (p.x < -n || p.y < -n || p.x > 2 * n || p.y > 2 * n) continue;
    local.push_back({p, AngleDiff(m.theta(), anchor_theta)});
  }
  const double reach = 0.375 * n;  // distance-transform cap, 48 px on a 128 patch
  const double s_small = n / 16.0;
  const double s_large = n / 6.4;
  const double s_near = n / 8.0;
  const double s_dir = n / 10.67;
  for (int r = 0; r < kDescriptorGrid; ++r) {
    for (int c = 0; c < kDescriptorGrid; ++c) {
      const int i = r * kDescriptorGrid + c;
      if (out.mask[i] == 0.0f) continue;
      const Vec2 q{(c + 0.5) * cell - 0.5, (r + 0.5) * cell - 0.5};
      double dens_small = 0.0, dens_large = 0.0, dir_weighted = 0.0;
      double nearest = std::numeric_limits<double>::infinity();
      double nearest_theta = 0.0;
      for (const Local& l : local) {
        const double d2 = (l.p.x - q.x) * (l.p.x - q.x) + (l.p.y - q.y) * (l.p.y - q.y);
        dens_small += std::exp(-d2 / (2.0 * s_small * s_small));
        dens_large += std::exp(-d2 / (2.0 * s_large * s_large));
        dir_weighted += std::exp(-d2 / (2.0 * s_dir * s_dir)) * std::cos(l.dtheta);
        if (d2 < nearest) {
          nearest = d2;
          nearest_theta = l.dtheta;
        }
      }
      double f[kOracleChannels] = {dens_small, dens_large, 0.0, 0.0, 1.0, dir_weighted};
      if (std::isfinite(nearest)) {
        const double dist = std::sqrt(nearest);
        const double w = std::exp(-nearest / (2.0 * s_near * s_near));
        f[2] = std::cos(nearest_theta) * w;
        f[3] = std::sin(nearest_theta) * w;
        f[4] = std::min(dist, reach) / reach;
      }
      for (int ch = 0; ch < kOracleChannels; ++ch) out.minutiae[ch * kGridCells + i] = static_cast<float>(f[ch]);
    }
  }

  NormalizeChannels(out.texture, out.mask);
  NormalizeChannels(out.minutiae, out.mask);
  return out;
}

std::vector<DenseDescriptor> ExtractDescriptors(const GrayImage& image, const GroundTruth& gt, int patch_size) {
  std::vector<DenseDescriptor> out;
  out.reserve(gt.minutiae.size());
  DescriptorConfig cfg;
  cfg.channels = kOracleChannels;
  for (const Minutia& m : gt.minutiae) {
    const Patch patch = AlignToMinutia(image, m, patch_size);
    const OracleFeatures f = OracleExtract(patch, gt);
    out.push_back(AssembleDmd(f.texture, f.minutiae, f.mask, m, cfg));
  }
  return out;
}

}  // namespace dmd
