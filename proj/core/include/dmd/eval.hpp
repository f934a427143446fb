#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dmd/matcher.hpp"

namespace dmd {

struct ScoreSets {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct ProbeOutcome {
  std::string probe_id;
  std::string mate_id;
  std::vector<std::string> ranked_ids;  // best first
};

struct IdentificationRun {
  std::vector<ProbeOutcome> probes;
};

/// 1-based rank of the mate, or 0 when it is not in the list.
std::size_t MateRank(const ProbeOutcome& probe);

/// Entry k-1 is the fraction of probes whose mate is ranked ≤ k.
std::vector<double> CmcCurve(const IdentificationRun& run, std::size_t max_rank);

struct DetPoint {
  double threshold = 0.0;
  double fmr = 0.0;   // impostor ≥ t
  double fnmr = 0.0;  // genuine < t
};

/// One point per distinct score plus one above every score, ordered by FMR
/// (ties: larger FNMR first).
std::vector<DetPoint> DetCurve(const ScoreSets& s);

/// TAR at the smallest impostor-score threshold whose FMR ≤ far; when no
/// impostor score qualifies the threshold sits just above the largest one.
double TarAtFar(const ScoreSets& s, double far);

struct EvalProbe {
  std::string id;
  std::string mate_id;
  Template templ;
};

struct EvaluationReport {
  IdentificationRun run;
  ScoreSets scores;  // genuine: probe vs mate; impostor: probe vs every other entry
  std::vector<double> cmc;
  double rank1 = 0.0;
};

/// Scores every probe against the whole gallery. Gallery ids must be unique
/// and every mate must be enrolled.
EvaluationReport EvaluateIdentification(const std::vector<EvalProbe>& probes, const std::vector<GalleryEntry>& gallery,
                                        const MatchConfig& cfg = {}, int workers = 1, std::size_t max_rank = 20);

void WriteCmcCsv(std::ostream& out, const std::vector<double>& cmc);
void WriteDetCsv(std::ostream& out, const std::vector<DetPoint>& det);

}  // namespace dmd
