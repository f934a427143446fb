#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dmd/error.hpp"

namespace dmd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Two minutiae closer than this (in position and direction) are duplicates.
inline constexpr double kDuplicatePositionTol = 1.0;
inline constexpr double kDuplicateAngleTol = 0.05;

/// Wraps an angle into [0, 2π).
double NormalizeAngle(double radians);

/// Signed minimal circular difference a − b, in (−π, π].
double AngleDiff(double a, double b);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  double Norm() const { return std::hypot(x, y); }
};

inline double Distance(Vec2 a, Vec2 b) { return (a - b).Norm(); }

// Direction convention: theta = 0 points along +x and grows towards +y. With
// image coordinates (y pointing down) that is a clockwise visual rotation, but
// every module uses the same formulas so matching is consistent.
class Minutia {
 public:
  Minutia() = default;
  Minutia(double x, double y, double theta);

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  Vec2 position() const { return {x_, y_}; }

  friend bool operator==(const Minutia&, const Minutia&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

bool IsDuplicate(const Minutia& a, const Minutia& b);

class MinutiaSet {
 public:
  MinutiaSet() = default;
  /// Throws kInvalidArgument if two entries are duplicates.
  explicit MinutiaSet(std::vector<Minutia> minutiae, std::string source_id = {});

  std::size_t size() const { return minutiae_.size(); }
  bool empty() const { return minutiae_.empty(); }
  const Minutia& operator[](std::size_t i) const { return minutiae_[i]; }
  std::span<const Minutia> items() const { return minutiae_; }
  auto begin() const { return minutiae_.begin(); }
  auto end() const { return minutiae_.end(); }
  const std::string& source_id() const { return source_id_; }

 private:
  std::vector<Minutia> minutiae_;
  std::string source_id_;
};

// Maps p -> linear * p + translation.
class Affine2D {
 public:
  Affine2D();  // identity
  Affine2D(std::array<double, 4> linear_row_major, Vec2 translation);

  static Affine2D Identity() { return Affine2D(); }
  static Affine2D Translation(double tx, double ty);
  /// Rotation by `angle` about `center`, followed by translation by `shift`.
  static Affine2D Rigid(double angle, Vec2 center = {}, Vec2 shift = {});

  const std::array<double, 4>& linear() const { return a_; }
  Vec2 translation() const { return t_; }
  double Determinant() const { return a_[0] * a_[3] - a_[1] * a_[2]; }
  bool IsSingular() const { return std::abs(Determinant()) <= 1e-9; }

  Vec2 Apply(Vec2 p) const;
  Vec2 ApplyLinear(Vec2 v) const;
  /// Angle of the rotation component of the linear part.
  double RotationAngle() const;
  Affine2D Inverse() const;

  /// (*this) ∘ inner: applies `inner` first.
  Affine2D Compose(const Affine2D& inner) const;

 private:
  std::array<double, 4> a_;
  Vec2 t_;
};

Minutia TransformMinutia(const Minutia& m, const Affine2D& t);
MinutiaSet TransformMinutiae(const MinutiaSet& set, const Affine2D& t);

// Row-major raster of doubles. GrayImage and SegMask share this layout and
// differ only in their value invariants.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double fill = 0.0);
  Raster(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  bool Contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// Bilinear sample with clamp-to-edge inside and `outside` beyond the
  /// half-pixel border.
  double SampleBilinear(double x, double y, double outside) const;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

class GrayImage : public Raster {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 1.0, int ppi = 500);
  GrayImage(int width, int height, std::vector<double> pixels, int ppi = 500);

  int ppi() const { return ppi_; }
  void ClampValues();

 private:
  int ppi_ = 500;
};

class SegMask : public Raster {
 public:
  SegMask() = default;
  SegMask(int width, int height, double fill = 0.0);
  SegMask(int width, int height, std::vector<double> values);

  bool IsHard() const;
  SegMask Thresholded(double threshold = 0.5) const;
  double Coverage() const;
  bool IsSet(int x, int y) const { return Contains(x, y) && at(x, y) >= 0.5; }
};

}  // namespace dmd
