#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace dmd {

struct LossConfig {
  double scale = 30.0;  // A
  double margin = 0.4;  // b
  double lambda_seg = 1.0;
  double lambda_mnt = 0.01;
  double lambda_sim = 0.00125;

  void Validate() const;
};

// Rows are samples (features) or classes (weights).
using Matrix = Eigen::MatrixXd;

struct CosFaceResult {
  double loss = 0.0;
  Matrix d_features;
  Matrix d_weights;
};

/// Large-margin cosine loss averaged over the batch. Features and class
/// weights are unit-normalized internally; log-sum-exp is max-shifted.
double CosFaceLoss(const Matrix& features, std::span<const int> labels, const Matrix& weights,
                   const LossConfig& cfg = {});
CosFaceResult CosFaceLossWithGradient(const Matrix& features, std::span<const int> labels, const Matrix& weights,
                                      const LossConfig& cfg = {});

/// Mean over overlapping cells of the squared channel-vector difference.
/// Tensors are depth x 8 x 8, channel-major; `overlap` is a hard 8x8 mask.
double SimilarityLoss(std::span<const double> plain, std::span<const double> rolled, std::span<const double> overlap);
/// Gradient with respect to `plain` (the gradient for `rolled` is its negation).
std::vector<double> SimilarityLossGradient(std::span<const double> plain, std::span<const double> rolled,
                                           std::span<const double> overlap);

inline constexpr double kProbabilityClamp = 1e-7;

double SegmentationLoss(std::span<const double> pred, std::span<const double> target);
std::vector<double> SegmentationLossGradient(std::span<const double> pred, std::span<const double> target);

double MinutiaeLoss(std::span<const double> pred, std::span<const double> target);
std::vector<double> MinutiaeLossGradient(std::span<const double> pred, std::span<const double> target);

struct LossComponents {
  double cls_texture = 0.0;
  double cls_minutiae = 0.0;
  double seg = 0.0;
  double mnt = 0.0;
  double sim = 0.0;
};

double TotalLoss(const LossComponents& c, const LossConfig& cfg = {});

// Everything the combined loss depends on, for end-to-end gradient checks.
struct TrainingBatch {
  Matrix texture_features;   // N x D
  Matrix minutia_features;   // N x D
  Matrix texture_weights;    // V x D
  Matrix minutia_weights;    // V x D
  std::vector<int> labels;   // N
  std::vector<double> seg_pred, seg_target;
  std::vector<double> map_pred, map_target;
  std::vector<double> plain, rolled, overlap;
};

struct TotalLossResult {
  double loss = 0.0;
  LossComponents components;
  // Gradient with respect to Flatten(batch).
  std::vector<double> gradient;
};

/// Differentiable inputs in a fixed order: texture features, minutia
/// features, texture weights, minutia weights (all row-major), seg_pred,
/// map_pred, plain.
std::vector<double> FlattenParameters(const TrainingBatch& batch);
TrainingBatch WithParameters(const TrainingBatch& batch, std::span<const double> flat);
TotalLossResult TotalLossWithGradient(const TrainingBatch& batch, const LossConfig& cfg = {});

struct Differentiable {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// Compares the analytic gradient against central differences. The error of
/// each coordinate is |g_a - g_n| / max(|g_a|, |g_n|, floor) where floor is
/// 1e-4 times the largest gradient magnitude; returns the maximum.
double FiniteDiffCheck(const Differentiable& fn, std::span<const double> point, double eps);

}  // namespace dmd
