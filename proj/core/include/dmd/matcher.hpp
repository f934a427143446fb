#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dmd/descriptor.hpp"
#include "dmd/template_io.hpp"

namespace dmd {

struct MatchConfig {
  double overlap_reference = 1326.0;  // H_o
  int min_nm = 4;
  int max_nm = 12;
  double tau = 0.4;
  double mu = 20.0;
  int relax_iterations = 5;
  double relax_weight = 0.6;  // w
  double relax_sigma_distance = 10.0;
  double relax_sigma_direction = 0.26;
  double relax_sigma_radial = 0.26;
  int overlap_grid = kOverlapGrid;
  // Disable to score with the plain masked cosine (ablation).
  bool overlap_normalization = true;

  void Validate() const;
};

class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0, bool relaxed = false)
      : rows_(rows), cols_(cols), relaxed_(relaxed), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool relaxed() const { return relaxed_; }
  void set_relaxed(bool r) { relaxed_ = r; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool relaxed_ = false;
  std::vector<double> values_;
};

struct MatchedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;  // relaxed similarity S'(a, b)
};

struct MatchResult {
  double score = 0.0;  // Γ
  std::vector<MatchedPair> pairs;
  int nm = 0;  // n_m from the sigmoid rule
};

double LocalSimilarity(const DenseDescriptor& a, const DenseDescriptor& b, const MatchConfig& cfg = {});
double BinaryLocalSimilarity(const BinaryDescriptor& a, const BinaryDescriptor& b, const MatchConfig& cfg = {});

SimilarityMatrix ComputeSimilarityMatrix(const Template& a, const Template& b, const MatchConfig& cfg = {});

/// Geometric compatibility of pairing (a_i, b_j) together with (a_k, b_l).
double RelaxCompatibility(const Minutia& ai, const Minutia& ak, const Minutia& bj, const Minutia& bl,
                          const MatchConfig& cfg);

SimilarityMatrix Relax(const SimilarityMatrix& s, const MinutiaSet& a, const MinutiaSet& b, const MatchConfig& cfg = {});

/// Maximum-weight one-to-one assignment of min(rows, cols) pairs, returned
/// sorted by row index.
std::vector<std::pair<std::size_t, std::size_t>> LsaHungarian(const SimilarityMatrix& s);

int SelectNm(std::size_t na, std::size_t nb, const MatchConfig& cfg = {});

/// Γ from a raw similarity matrix: relax, assign, average the top n_m.
MatchResult ScoreFromSimilarity(const SimilarityMatrix& raw, const MinutiaSet& a, const MinutiaSet& b,
                                const MatchConfig& cfg = {});

MatchResult MatchScore(const Template& a, const Template& b, const MatchConfig& cfg = {});

struct Candidate {
  std::size_t index = 0;  // gallery position
  std::string id;
  double score = 0.0;
};

struct GalleryEntry {
  std::string id;
  Template templ;
};

/// Scores the probe against every gallery entry and ranks by Γ (descending,
/// ties by gallery index). `workers` > 1 spreads comparisons over threads;
/// the ranking does not depend on it.
std::vector<Candidate> Identify(const Template& probe, const std::vector<GalleryEntry>& gallery,
                                const MatchConfig& cfg = {}, int workers = 1);

}  // namespace dmd
