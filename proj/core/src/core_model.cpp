#include "dmd/core_model.hpp"

#include <algorithm>

namespace dmd {

const char* ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kShapeMismatch: return "shape mismatch";
    case Errc::kSingularTransform: return "singular transform";
    case Errc::kOutOfBounds: return "out of bounds";
    case Errc::kUnderdetermined: return "underdetermined";
    case Errc::kNoConsensus: return "no consensus";
    case Errc::kEmptyInput: return "empty input";
    case Errc::kInvalidCylinder: return "invalid cylinder";
    case Errc::kNonFinite: return "non-finite value";
    case Errc::kFormat: return "format error";
    case Errc::kIo: return "i/o error";
  }
  return "unknown";
}

double NormalizeAngle(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2π.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double AngleDiff(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

Minutia::Minutia(double x, double y, double theta) : x_(x), y_(y), theta_(NormalizeAngle(theta)) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta)) {
    throw Error(Errc::kNonFinite, "minutia coordinates must be finite");
  }
}

bool IsDuplicate(const Minutia& a, const Minutia& b) {
  return Distance(a.position(), b.position()) <= kDuplicatePositionTol &&
         std::abs(AngleDiff(a.theta(), b.theta())) <= kDuplicateAngleTol;
}

MinutiaSet::MinutiaSet(std::vector<Minutia> minutiae, std::string source_id)
    : minutiae_(std::move(minutiae)), source_id_(std::move(source_id)) {
  for (std::size_t i = 0; i < minutiae_.size(); ++i) {
    for (std::size_t j = i + 1; j < minutiae_.size(); ++j) {
      if (IsDuplicate(minutiae_[i], minutiae_[j])) {
        throw Error(Errc::kInvalidArgument, "duplicate minutiae at indices " + std::to_string(i) +
                                                " and " + std::to_string(j));
      }
    }
  }
}

Affine2D::Affine2D() : a_{1.0, 0.0, 0.0, 1.0}, t_{} {}

Affine2D::Affine2D(std::array<double, 4> linear_row_major, Vec2 translation)
    : a_(linear_row_major), t_(translation) {}

Affine2D Affine2D::Translation(double tx, double ty) { return Affine2D({1.0, 0.0, 0.0, 1.0}, {tx, ty}); }

Affine2D Affine2D::Rigid(double angle, Vec2 center, Vec2 shift) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  // p' = R (p - center) + center + shift
  const Vec2 rc{c * center.x - s * center.y, s * center.x + c * center.y};
  return Affine2D({c, -s, s, c}, center - rc + shift);
}

Vec2 Affine2D::Apply(Vec2 p) const { return ApplyLinear(p) + t_; }

Vec2 Affine2D::ApplyLinear(Vec2 v) const { return {a_[0] * v.x + a_[1] * v.y, a_[2] * v.x + a_[3] * v.y}; }

double Affine2D::RotationAngle() const {
  // Rotation of the polar decomposition: angle of (a00 + a11, a10 - a01).
  return std::atan2(a_[2] - a_[1], a_[0] + a_[3]);
}

Affine2D Affine2D::Inverse() const {
  if (IsSingular()) throw Error(Errc::kSingularTransform, "cannot invert singular affine transform");
  const double det = Determinant();
  const std::array<double, 4> inv{a_[3] / det, -a_[1] / det, -a_[2] / det, a_[0] / det};
  Affine2D result(inv, {});
  const Vec2 t = result.ApplyLinear(t_);
  return Affine2D(inv, {-t.x, -t.y});
}

Affine2D Affine2D::Compose(const Affine2D& inner) const {
  const auto& b = inner.a_;
  const std::array<double, 4> m{a_[0] * b[0] + a_[1] * b[2], a_[0] * b[1] + a_[1] * b[3],
                                a_[2] * b[0] + a_[3] * b[2], a_[2] * b[1] + a_[3] * b[3]};
  return Affine2D(m, ApplyLinear(inner.t_) + t_);
}

Minutia TransformMinutia(const Minutia& m, const Affine2D& t) {
  if (t.IsSingular()) throw Error(Errc::kSingularTransform, "transform_minutia needs a non-singular transform");
  const Vec2 p = t.Apply(m.position());
  return Minutia(p.x, p.y, m.theta() + t.RotationAngle());
}

MinutiaSet TransformMinutiae(const MinutiaSet& set, const Affine2D& t) {
  std::vector<Minutia> out;
  out.reserve(set.size());
  for (const auto& m : set) out.push_back(TransformMinutia(m, t));
  return MinutiaSet(std::move(out), set.source_id());
}

Raster::Raster(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(Errc::kInvalidArgument, "negative raster size");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 0 || height < 0 || values_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::kShapeMismatch, "raster value count does not match width*height");
  }
}

double Raster::SampleBilinear(double x, double y, double outside) const {
  if (values_.empty() || x < -0.5 || y < -0.5 || x > width_ - 0.5 || y > height_ - 0.5) return outside;
  const double cx = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = std::min(static_cast<int>(cx), width_ - 1);
  const int y0 = std::min(static_cast<int>(cy), height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
  const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

GrayImage::GrayImage(int width, int height, double fill, int ppi) : Raster(width, height, fill), ppi_(ppi) {
  if (ppi <= 0) throw Error(Errc::kInvalidArgument, "ppi must be positive");
  if (!(fill >= 0.0 && fill <= 1.0)) throw Error(Errc::kInvalidArgument, "pixel values must lie in [0,1]");
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels, int ppi)
    : Raster(width, height, std::move(pixels)), ppi_(ppi) {
  if (ppi <= 0) throw Error(Errc::kInvalidArgument, "ppi must be positive");
  for (double v : values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::kInvalidArgument, "pixel values must lie in [0,1]");
  }
}

void GrayImage::ClampValues() {
  for (double& v : values()) v = std::clamp(v, 0.0, 1.0);
}

SegMask::SegMask(int width, int height, double fill) : Raster(width, height, fill) {
  if (!(fill >= 0.0 && fill <= 1.0)) throw Error(Errc::kInvalidArgument, "mask values must lie in [0,1]");
}

SegMask::SegMask(int width, int height, std::vector<double> values) : Raster(width, height, std::move(values)) {
  for (double v : this->values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::kInvalidArgument, "mask values must lie in [0,1]");
  }
}

bool SegMask::IsHard() const {
  return std::all_of(values().begin(), values().end(), [](double v) { return v == 0.0 || v == 1.0; });
}

SegMask SegMask::Thresholded(double threshold) const {
  SegMask out(width(), height());
  for (std::size_t i = 0; i < size(); ++i) out.values()[i] = values()[i] >= threshold ? 1.0 : 0.0;
  return out;
}

double SegMask::Coverage() const {
  if (empty()) return 0.0;
  double count = 0.0;
  for (double v : values()) count += v >= 0.5 ? 1.0 : 0.0;
  return count / static_cast<double>(size());
}

}  // namespace dmd
