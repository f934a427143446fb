#include "dmd/cli/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>

#include "dmd/losses.hpp"
#include "dmd/matcher.hpp"
#include "dmd/minutiae_map.hpp"
#include "dmd/template_io.hpp"

namespace dmd::cli {

namespace {

using Rng = std::mt19937_64;

double U(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

DenseDescriptor RandomDescriptor(Rng& rng, bool signs) {
  std::vector<float> t(384), m(384), h(64);
  for (auto& v : t) v = signs ? (U(rng, 0, 1) < 0.5 ? -1.0f : 1.0f) : static_cast<float>(U(rng, -1, 1));
  for (auto& v : m) v = signs ? (U(rng, 0, 1) < 0.5 ? -1.0f : 1.0f) : static_cast<float>(U(rng, -1, 1));
  for (auto& v : h) v = U(rng, 0, 1) < 0.7 ? 1.0f : 0.0f;
  return AssembleDmd(t, m, h, Minutia(U(rng, 0, 200), U(rng, 0, 200), U(rng, 0, 6)));
}

bool SelectNmTable() {
  return SelectNm(20, 25) == 8 && SelectNm(30, 30) == 12 && SelectNm(10, 40) == 4 && SelectNm(1000, 1000) == 12;
}

bool SelfScore() {
  Rng rng(1);
  std::vector<float> t(384), h(64, 1.0f);
  for (auto& v : t) v = static_cast<float>(U(rng, -1, 1));
  const DenseDescriptor d = AssembleDmd(t, t, h, {});
  return std::abs(LocalSimilarity(d, d) - std::sqrt(4096.0 / 1326.0)) < 1e-9;
}

bool AssignmentOptimal() {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 5;
    SimilarityMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s(i, j) = U(rng, -1, 1);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -INFINITY;
    do {
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) total += s(i, perm[i]);
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double got = 0;
    for (const auto& [i, j] : LsaHungarian(s)) got += s(i, j);
    if (std::abs(got - best) > 1e-9) return false;
  }
  return true;
}

bool BinaryContract() {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseDescriptor a = RandomDescriptor(rng, true), b = RandomDescriptor(rng, true);
    const BinaryDescriptor ba = Binarize(a), bb = Binarize(b);
    if (ba.FeatureBytes() != 96) return false;
    if (std::abs(BinaryLocalSimilarity(ba, bb) - LocalSimilarity(a, b)) > 1e-6) return false;
  }
  return true;
}

bool TemplateRoundTrip() {
  Rng rng(4);
  std::vector<DenseDescriptor> ds;
  for (int i = 0; i < 5; ++i) ds.push_back(RandomDescriptor(rng, false));
  const Template f = MakeFloatTemplate(ds);
  const Template b = MakeBinaryTemplate(f);
  return SerializeTemplate(DeserializeTemplate(SerializeTemplate(f))) == SerializeTemplate(f) &&
         SerializeTemplate(DeserializeTemplate(SerializeTemplate(b))) == SerializeTemplate(b);
}

bool Gradients(const LossConfig& cfg) {
  Rng rng(5);
  TrainingBatch batch;
  auto mat = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = U(rng, -1, 1);
    return m;
  };
  auto vec = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = U(rng, lo, hi);
    return v;
  };
  batch.texture_features = mat(3, 5);
  batch.minutia_features = mat(3, 5);
  batch.texture_weights = mat(4, 5);
  batch.minutia_weights = mat(4, 5);
  batch.labels = {0, 2, 3};
  batch.seg_pred = vec(64, 0.1, 0.9);
  batch.seg_target.assign(64, 1.0);
  batch.map_pred = vec(24, 0, 1);
  batch.map_target = vec(24, 0, 1);
  batch.plain = vec(128, -1, 1);
  batch.rolled = vec(128, -1, 1);
  batch.overlap.assign(64, 1.0);
  const Differentiable fn{
      [&](std::span<const double> x) { return TotalLossWithGradient(WithParameters(batch, x), cfg).loss; },
      [&](std::span<const double> x) { return TotalLossWithGradient(WithParameters(batch, x), cfg).gradient; }};
  return FiniteDiffCheck(fn, FlattenParameters(batch), 1e-5) < 1e-4;
}

bool MapRoundTrip() {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Minutia m(U(rng, 8, 120), U(rng, 8, 120), U(rng, -3, 3));
    const MinutiaSet out = DecodeMinutiaeMap(EncodeMinutiaeMap(MinutiaSet({m})));
    if (out.size() != 1 || Distance(out[0].position(), m.position()) > 1.0 ||
        std::abs(AngleDiff(out[0].theta(), m.theta())) > 0.1) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool RunSelfTest(const RunConfig& cfg, std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<bool()>>> checks{
      {"select_nm table", SelectNmTable},
      {"full-mask self score", SelfScore},
      {"assignment optimality", AssignmentOptimal},
      {"binary payload and scoring", BinaryContract},
      {"template round trip", TemplateRoundTrip},
      {"loss gradients", [&] { return Gradients(cfg.loss); }},
      {"minutiae map round trip", MapRoundTrip},
  };
  bool ok = true;
  for (const auto& [name, check] : checks) {
    bool pass = false;
    try {
      pass = check();
    } catch (const std::exception&) {
      pass = false;
    }
    out << (pass ? "PASS " : "FAIL ") << name << "\n";
    ok = ok && pass;
  }
  return ok;
}

}  // namespace dmd::cli
