#include "dmd/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dmd/error.hpp"

namespace dmd {

void LossConfig::Validate() const {
  if (!(scale > 0.0)) throw Error(Errc::kInvalidArgument, "scale A must be positive");
  if (!(margin >= 0.0 && margin < 1.0)) throw Error(Errc::kInvalidArgument, "margin b must lie in [0,1)");
  if (lambda_seg < 0.0 || lambda_mnt < 0.0 || lambda_sim < 0.0) {
    throw Error(Errc::kInvalidArgument, "loss weights must be non-negative");
  }
}

namespace {

void CheckCosFaceInputs(const Matrix& features, std::span<const int> labels, const Matrix& weights) {
  if (features.rows() == 0) throw Error(Errc::kEmptyInput, "empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(Errc::kShapeMismatch, "one label per feature row required");
  }
  if (weights.cols() != features.cols()) throw Error(Errc::kShapeMismatch, "weight and feature dimensions differ");
  for (int y : labels) {
    if (y < 0 || y >= weights.rows()) throw Error(Errc::kInvalidArgument, "label out of class range");
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    if (features.row(r).norm() == 0.0) throw Error(Errc::kInvalidArgument, "zero-norm feature");
  }
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    if (weights.row(r).norm() == 0.0) throw Error(Errc::kInvalidArgument, "zero-norm class weight");
  }
}

Matrix RowNormalized(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.row(r) /= m.row(r).norm();
  return out;
}

// d/dx of g·(x/|x|) for every row: (g - (g·x̂) x̂) / |x|.
Matrix BackpropNormalize(const Matrix& raw, const Matrix& unit, const Matrix& grad_unit) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double proj = grad_unit.row(r).dot(unit.row(r));
    out.row(r) = (grad_unit.row(r) - proj * unit.row(r)) / raw.row(r).norm();
  }
  return out;
}

void CheckSameSize(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, "tensor sizes differ");
  if (a.empty()) throw Error(Errc::kEmptyInput, "empty tensor");
}

}  // namespace

CosFaceResult CosFaceLossWithGradient(const Matrix& features, std::span<const int> labels, const Matrix& weights,
                                      const LossConfig& cfg) {
  cfg.Validate();
  CheckCosFaceInputs(features, labels, weights);
  const Matrix f = RowNormalized(features);
  const Matrix w = RowNormalized(weights);
  const Matrix cosines = f * w.transpose();  // N x V
  const Eigen::Index n = features.rows();
  const Eigen::Index v = weights.rows();

  Matrix d_cos = Matrix::Zero(n, v);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    Eigen::VectorXd logits = cfg.scale * cosines.row(i).transpose();
    logits(y) -= cfg.scale * cfg.margin;
    const double peak = logits.maxCoeff();
    const Eigen::VectorXd shifted = (logits.array() - peak).exp();
    const double sum = shifted.sum();
    total += std::log(sum) + peak - logits(y);
    Eigen::VectorXd prob = shifted / sum;
    prob(y) -= 1.0;
    d_cos.row(i) = cfg.scale * prob.transpose() / static_cast<double>(n);
  }

  CosFaceResult result;
  result.loss = total / static_cast<double>(n);
  result.d_features = BackpropNormalize(features, f, d_cos * w);
  result.d_weights = BackpropNormalize(weights, w, d_cos.transpose() * f);
  return result;
}

double CosFaceLoss(const Matrix& features, std::span<const int> labels, const Matrix& weights, const LossConfig& cfg) {
  return CosFaceLossWithGradient(features, labels, weights, cfg).loss;
}

namespace {

struct OverlapShape {
  std::size_t depth;
  double cells;
};

OverlapShape CheckSimilarityInputs(std::span<const double> plain, std::span<const double> rolled,
                                   std::span<const double> overlap) {
  CheckSameSize(plain, rolled);
  if (overlap.empty() || plain.size() % overlap.size() != 0) {
    throw Error(Errc::kShapeMismatch, "feature tensors must be depth x overlap cells");
  }
  double cells = 0.0;
  for (double o : overlap) cells += o >= 0.5 ? 1.0 : 0.0;
  if (cells == 0.0) throw Error(Errc::kEmptyInput, "empty overlap region");
  return {plain.size() / overlap.size(), cells};
}

}  // namespace

double SimilarityLoss(std::span<const double> plain, std::span<const double> rolled, std::span<const double> overlap) {
  const auto [depth, cells] = CheckSimilarityInputs(plain, rolled, overlap);
  const std::size_t area = overlap.size();
  double sum = 0.0;
  for (std::size_t c = 0; c < depth; ++c) {
    for (std::size_t k = 0; k < area; ++k) {
      if (overlap[k] < 0.5) continue;
      const double d = plain[c * area + k] - rolled[c * area + k];
      sum += d * d;
    }
  }
  return sum / cells;
}

std::vector<double> SimilarityLossGradient(std::span<const double> plain, std::span<const double> rolled,
                                           std::span<const double> overlap) {
  const auto [depth, cells] = CheckSimilarityInputs(plain, rolled, overlap);
  const std::size_t area = overlap.size();
  std::vector<double> grad(plain.size(), 0.0);
  for (std::size_t c = 0; c < depth; ++c) {
    for (std::size_t k = 0; k < area; ++k) {
      if (overlap[k] >= 0.5) grad[c * area + k] = 2.0 * (plain[c * area + k] - rolled[c * area + k]) / cells;
    }
  }
  return grad;
}

double SegmentationLoss(std::span<const double> pred, std::span<const double> target) {
  CheckSameSize(pred, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(pred.size());
}

std::vector<double> SegmentationLossGradient(std::span<const double> pred, std::span<const double> target) {
  CheckSameSize(pred, target);
  std::vector<double> grad(pred.size(), 0.0);
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    if (p <= kProbabilityClamp || p >= 1.0 - kProbabilityClamp) continue;  // flat under the clamp
    grad[i] = (p - target[i]) / (p * (1.0 - p)) / n;
  }
  return grad;
}

double MinutiaeLoss(std::span<const double> pred, std::span<const double> target) {
  CheckSameSize(pred, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]) * (pred[i] - target[i]);
  return sum / static_cast<double>(pred.size());
}

std::vector<double> MinutiaeLossGradient(std::span<const double> pred, std::span<const double> target) {
  CheckSameSize(pred, target);
  std::vector<double> grad(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = 2.0 * (pred[i] - target[i]) / n;
  return grad;
}

double TotalLoss(const LossComponents& c, const LossConfig& cfg) {
  for (double v : {c.cls_texture, c.cls_minutiae, c.seg, c.mnt, c.sim}) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "loss components must be finite");
  }
  return c.cls_texture + c.cls_minutiae + cfg.lambda_seg * c.seg + cfg.lambda_mnt * c.mnt + cfg.lambda_sim * c.sim;
}

namespace {

void AppendRowMajor(std::vector<double>& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
}

std::size_t ReadRowMajor(Matrix& m, std::span<const double> flat, std::size_t pos) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[pos++];
  }
  return pos;
}

std::size_t ReadVector(std::vector<double>& v, std::span<const double> flat, std::size_t pos) {
  for (double& x : v) x = flat[pos++];
  return pos;
}

}  // namespace

std::vector<double> FlattenParameters(const TrainingBatch& b) {
  std::vector<double> out;
  AppendRowMajor(out, b.texture_features);
  AppendRowMajor(out, b.minutia_features);
  AppendRowMajor(out, b.texture_weights);
  AppendRowMajor(out, b.minutia_weights);
  out.insert(out.end(), b.seg_pred.begin(), b.seg_pred.end());
  out.insert(out.end(), b.map_pred.begin(), b.map_pred.end());
  out.insert(out.end(), b.plain.begin(), b.plain.end());
  return out;
}

TrainingBatch WithParameters(const TrainingBatch& batch, std::span<const double> flat) {
  TrainingBatch b = batch;
  if (flat.size() != FlattenParameters(batch).size()) throw Error(Errc::kShapeMismatch, "parameter count differs");
  std::size_t pos = 0;
  pos = ReadRowMajor(b.texture_features, flat, pos);
  pos = ReadRowMajor(b.minutia_features, flat, pos);
  pos = ReadRowMajor(b.texture_weights, flat, pos);
  pos = ReadRowMajor(b.minutia_weights, flat, pos);
  pos = ReadVector(b.seg_pred, flat, pos);
  pos = ReadVector(b.map_pred, flat, pos);
  ReadVector(b.plain, flat, pos);
  return b;
}

TotalLossResult TotalLossWithGradient(const TrainingBatch& b, const LossConfig& cfg) {
  const auto tex = CosFaceLossWithGradient(b.texture_features, b.labels, b.texture_weights, cfg);
  const auto mnt = CosFaceLossWithGradient(b.minutia_features, b.labels, b.minutia_weights, cfg);

  TotalLossResult r;
  r.components = {tex.loss, mnt.loss, SegmentationLoss(b.seg_pred, b.seg_target),
                  MinutiaeLoss(b.map_pred, b.map_target), SimilarityLoss(b.plain, b.rolled, b.overlap)};
  r.loss = TotalLoss(r.components, cfg);

  AppendRowMajor(r.gradient, tex.d_features);
  AppendRowMajor(r.gradient, mnt.d_features);
  AppendRowMajor(r.gradient, tex.d_weights);
  AppendRowMajor(r.gradient, mnt.d_weights);
  for (double g : SegmentationLossGradient(b.seg_pred, b.seg_target)) r.gradient.push_back(cfg.lambda_seg * g);
  for (double g : MinutiaeLossGradient(b.map_pred, b.map_target)) r.gradient.push_back(cfg.lambda_mnt * g);
  for (double g : SimilarityLossGradient(b.plain, b.rolled, b.overlap)) r.gradient.push_back(cfg.lambda_sim * g);
  return r;
}

double FiniteDiffCheck(const Differentiable& fn, std::span<const double> point, double eps) {
  if (!(eps > 1e-7 && eps < 1e-3)) throw Error(Errc::kInvalidArgument, "eps must lie in (1e-7, 1e-3)");
  const std::vector<double> analytic = fn.gradient(point);
  if (analytic.size() != point.size()) throw Error(Errc::kShapeMismatch, "gradient size differs from point size");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> numeric(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = fn.value(x);
    x[i] = saved - eps;
    const double down = fn.value(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) throw Error(Errc::kNonFinite, "non-finite loss in stencil");
    numeric[i] = (up - down) / (2.0 * eps);
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  const double floor = std::max(1e-4 * scale, 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace dmd
