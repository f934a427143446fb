#include "dmd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "dmd/error.hpp"

namespace dmd {

std::size_t MateRank(const ProbeOutcome& probe) {
  const auto it = std::find(probe.ranked_ids.begin(), probe.ranked_ids.end(), probe.mate_id);
  return it == probe.ranked_ids.end() ? 0 : static_cast<std::size_t>(it - probe.ranked_ids.begin()) + 1;
}

std::vector<double> CmcCurve(const IdentificationRun& run, std::size_t max_rank) {
  if (run.probes.empty()) throw Error(Errc::kEmptyInput, "identification run has no probes");
  if (max_rank == 0) throw Error(Errc::kInvalidArgument, "max_rank must be positive");
  std::vector<double> hits(max_rank, 0.0);
  for (const ProbeOutcome& p : run.probes) {
    const std::size_t rank = MateRank(p);
    if (rank == 0 || rank > max_rank) continue;
    for (std::size_t k = rank - 1; k < max_rank; ++k) hits[k] += 1.0;
  }
  for (double& h : hits) h /= static_cast<double>(run.probes.size());
  return hits;
}

namespace {

void RequireScores(const ScoreSets& s) {
  if (s.genuine.empty() || s.impostor.empty()) throw Error(Errc::kEmptyInput, "genuine and impostor sets must be non-empty");
}

// Fraction of sorted values ≥ t.
double FractionAtLeast(const std::vector<double>& sorted, double t) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

}  // namespace

std::vector<DetPoint> DetCurve(const ScoreSets& s) {
  RequireScores(s);
  std::vector<double> gen = s.genuine;
  std::vector<double> imp = s.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds = gen;
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  std::vector<DetPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) points.push_back({t, FractionAtLeast(imp, t), 1.0 - FractionAtLeast(gen, t)});
  std::stable_sort(points.begin(), points.end(), [](const DetPoint& a, const DetPoint& b) {
    if (a.fmr != b.fmr) return a.fmr < b.fmr;
    return a.fnmr > b.fnmr;
  });
  return points;
}

double TarAtFar(const ScoreSets& s, double far) {
  RequireScores(s);
  if (!(far > 0.0 && far < 1.0)) throw Error(Errc::kInvalidArgument, "far must lie in (0, 1)");
  std::vector<double> gen = s.genuine;
  std::vector<double> imp = s.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  double threshold = std::nextafter(imp.back(), std::numeric_limits<double>::infinity());
  for (double t : imp) {
    if (FractionAtLeast(imp, t) <= far) {
      threshold = t;
      break;
    }
  }
  return FractionAtLeast(gen, threshold);
}

EvaluationReport EvaluateIdentification(const std::vector<EvalProbe>& probes, const std::vector<GalleryEntry>& gallery,
                                        const MatchConfig& cfg, int workers, std::size_t max_rank) {
  if (probes.empty() || gallery.empty()) throw Error(Errc::kEmptyInput, "evaluation needs probes and a gallery");
  std::set<std::string> ids;
  for (const auto& g : gallery) {
    if (!ids.insert(g.id).second) throw Error(Errc::kInvalidArgument, "duplicate gallery id " + g.id);
  }
  EvaluationReport report;
  for (const auto& p : probes) {
    if (!ids.count(p.mate_id)) throw Error(Errc::kInvalidArgument, "mate " + p.mate_id + " is not enrolled");
    const auto ranked = Identify(p.templ, gallery, cfg, workers);
    ProbeOutcome outcome{p.id, p.mate_id, {}};
    for (const auto& c : ranked) {
      outcome.ranked_ids.push_back(c.id);
      (c.id == p.mate_id ? report.scores.genuine : report.scores.impostor).push_back(c.score);
    }
    report.run.probes.push_back(std::move(outcome));
  }
  report.cmc = CmcCurve(report.run, std::min(max_rank, gallery.size()));
  report.rank1 = report.cmc.front();
  return report;
}

void WriteCmcCsv(std::ostream& out, const std::vector<double>& cmc) {
  out << "rank,rate\n";
  char buf[64];
  for (std::size_t k = 0; k < cmc.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", k + 1, cmc[k]);
    out << buf;
  }
}

void WriteDetCsv(std::ostream& out, const std::vector<DetPoint>& det) {
  out << "fmr,fnmr\n";
  char buf[64];
  for (const DetPoint& p : det) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", p.fmr, p.fnmr);
    out << buf;
  }
}

}  // namespace dmd
