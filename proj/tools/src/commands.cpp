#include "dmd/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "dmd/cli/output_guard.hpp"
#include "dmd/cli/records.hpp"
#include "dmd/cli/run_config.hpp"
#include "dmd/cli/selftest.hpp"
#include "dmd/error.hpp"
#include "dmd/eval.hpp"
#include "dmd/io.hpp"
#include "dmd/matcher.hpp"
#include "dmd/template_io.hpp"

namespace dmd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
  bool binary = false;
};

RunConfig Effective(const Common& c, const CLI::App& cmd) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : LoadRunConfig(c.config);
  if (cmd.count("--seed")) cfg.seed = c.seed;
  if (cmd.count("--workers")) cfg.workers = c.workers;
  cfg.Validate();
  return cfg;
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

void WriteText(OutputGuard& guard, const fs::path& path, const std::string& text) {
  std::ofstream out(guard.File(path), std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
}

// Splits a manifest into whitespace-separated fields, skipping blanks and comments.
std::vector<std::vector<std::string>> ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open manifest " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream fields(line);
    std::vector<std::string> row;
    for (std::string f; fields >> f;) row.push_back(f);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

int Synth(const RunConfig& cfg, int count, const fs::path& dir, std::ostream& out) {
  if (count < 0) throw Error(Errc::kInvalidArgument, "count must be >= 0");
  OutputGuard guard;
  guard.Directory(dir);
  std::string manifest;
  for (int i = 0; i < count; ++i) {
    const SynthRecord rec = RecordFor(cfg, cfg.seed + static_cast<std::uint64_t>(i));
    const SynthFingerprint fp = Regenerate(rec);
    SavePng(guard.File(dir / (rec.id + ".png")).string(), fp.image);
    SaveMinutiae(guard.File(dir / (rec.id + ".txt")).string(), fp.minutiae);
    SavePng(guard.File(dir / (rec.id + "_mask.png")).string(), fp.mask);
    WriteText(guard, dir / (rec.id + ".json"), RecordToJson(rec).dump(2) + "\n");
    manifest += rec.id + "  " + rec.id + ".png  " + rec.id + ".txt  " + rec.id + "_mask.png  " + rec.id + ".json\n";
  }
  WriteText(guard, dir / "manifest.txt", manifest);
  guard.Commit();
  out << "wrote " << count << " fingerprints to " << dir.string() << "\n";
  return 0;
}

int Enroll(const RunConfig& cfg, const fs::path& input, const fs::path& minutiae, const fs::path& mask, bool binary,
           const fs::path& dest, std::ostream& out) {
  const LoadedImpression loaded = LoadImpression(input, minutiae, mask);
  if (loaded.truth.minutiae.empty()) throw Error(Errc::kEmptyInput, "no minutiae to enroll");
  Template t = MakeFloatTemplate(ExtractDescriptors(loaded.impression.image, loaded.truth, cfg.traingen.patch_size));
  if (binary) t = MakeBinaryTemplate(t);
  OutputGuard guard;
  SaveTemplate(guard.File(dest), t);
  guard.Commit();
  out << "enrolled " << t.size() << " minutiae (" << (binary ? "binary" : "float") << ") to " << dest.string() << "\n";
  return 0;
}

int Match(const RunConfig& cfg, const fs::path& a, const fs::path& b, const fs::path& dest, std::ostream& out) {
  const Template ta = LoadTemplate(a), tb = LoadTemplate(b);
  if (ta.format != tb.format || ta.channels != tb.channels) {
    throw Error(Errc::kShapeMismatch, "templates differ in format or channel count");
  }
  const MatchResult r = MatchScore(ta, tb, cfg.match);
  json pairs = json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"a", p.a}, {"b", p.b}, {"score", p.score}});
  const json detail{{"score", r.score}, {"nm", r.nm}, {"pairs", pairs}};
  out << detail.dump(2) << "\n";
  if (!dest.empty()) {
    OutputGuard guard;
    WriteText(guard, dest, detail.dump(2) + "\n");
    guard.Commit();
  }
  return 0;
}

std::vector<GalleryEntry> LoadGalleryDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, "gallery directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".dmd") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GalleryEntry> gallery;
  for (const auto& f : files) gallery.push_back({f.stem().string(), LoadTemplate(f)});
  return gallery;
}

int IdentifyCmd(const RunConfig& cfg, const fs::path& probe, const fs::path& dir, const fs::path& dest,
                std::ostream& out) {
  const auto gallery = LoadGalleryDir(dir);
  const auto ranked = Identify(LoadTemplate(probe), gallery, cfg.match, cfg.workers);
  std::string csv = "id,score\n";
  for (const auto& c : ranked) csv += c.id + "," + Fmt("%.9f", c.score) + "\n";
  if (dest.empty()) {
    out << csv;
  } else {
    OutputGuard guard;
    WriteText(guard, dest, csv);
    guard.Commit();
  }
  return 0;
}

// Protocol lines: `gallery <id> <template>` and `probe <id> <template> <mate id>`.
void LoadProtocol(const fs::path& path, std::vector<EvalProbe>& probes, std::vector<GalleryEntry>& gallery) {
  const fs::path base = path.parent_path();
  for (const auto& row : ReadManifest(path)) {
    if (row[0] == "gallery" && row.size() == 3) {
      gallery.push_back({row[1], LoadTemplate(Resolve(base, row[2]))});
    } else if (row[0] == "probe" && row.size() == 4) {
      probes.push_back({row[1], row[3], LoadTemplate(Resolve(base, row[2]))});
    } else {
      throw Error(Errc::kFormat, "bad protocol line starting with '" + row[0] + "'");
    }
  }
  // Manifest order must not matter.
  std::sort(gallery.begin(), gallery.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  std::sort(probes.begin(), probes.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  for (std::size_t i = 1; i < probes.size(); ++i) {
    if (probes[i].id == probes[i - 1].id) throw Error(Errc::kInvalidArgument, "duplicate probe id " + probes[i].id);
  }
}

int Evaluate(const RunConfig& cfg, const fs::path& protocol, const fs::path& dir,
             std::ostream& out) {
  std::vector<EvalProbe> probes;
  std::vector<GalleryEntry> gallery;
  LoadProtocol(protocol, probes, gallery);
  const EvaluationReport report = EvaluateIdentification(probes, gallery, cfg.match, cfg.workers);
  MatchConfig flipped = cfg.match;
  flipped.overlap_normalization = !flipped.overlap_normalization;
  const double rank1_flipped = EvaluateIdentification(probes, gallery, flipped, cfg.workers).rank1;
  const double with_norm = cfg.match.overlap_normalization ? report.rank1 : rank1_flipped;
  const double without_norm = cfg.match.overlap_normalization ? rank1_flipped : report.rank1;

  const json summary{{"rank1", report.rank1},
                     {"rank1_normalized", with_norm},
                     {"rank1_unnormalized", without_norm},
                     {"tar_at_far_0.001", TarAtFar(report.scores, 0.001)},
                     {"tar_at_far_0.01", TarAtFar(report.scores, 0.01)},
                     {"probes", probes.size()},
                     {"gallery", gallery.size()},
                     {"genuine_scores", report.scores.genuine.size()},
                     {"impostor_scores", report.scores.impostor.size()},
                     {"config_hash", ConfigHash(cfg)}};
  OutputGuard guard;
  guard.Directory(dir);
  std::ostringstream cmc, det;
  WriteCmcCsv(cmc, report.cmc);
  WriteDetCsv(det, DetCurve(report.scores));
  WriteText(guard, dir / "cmc.csv", cmc.str());
  WriteText(guard, dir / "det.csv", det.str());
  WriteText(guard, dir / "summary.json", summary.dump(2) + "\n");
  guard.Commit();
  out << summary.dump(2) << "\n";
  return 0;
}

int GenPairs(const RunConfig& cfg, const fs::path& manifest, const fs::path& dir, std::ostream& out) {
  const fs::path base = manifest.parent_path();
  const auto rows = ReadManifest(manifest);
  OutputGuard guard;
  guard.Directory(dir / "patches");
  std::string lines;
  int next_class = 0;
  std::size_t skipped = 0;
  for (const auto& row : rows) {
    if (row.size() != 2) throw Error(Errc::kFormat, "dataset lines list two impressions");
    const LoadedImpression a = LoadImpression(Resolve(base, row[0]));
    const LoadedImpression b = LoadImpression(Resolve(base, row[1]));
    std::vector<MatedPair> pairs;
    try {
      pairs = SelectMatedMinutiae(a.impression, b.impression, cfg.traingen);
    } catch (const Error& e) {
      if (e.code() != Errc::kUnderdetermined) throw;
    }
    if (pairs.empty()) ++skipped;
    for (const auto& pp : GeneratePatchPairs(a.impression, b.impression, pairs, cfg.traingen, next_class)) {
      char name[32];
      std::snprintf(name, sizeof name, "c%06d", pp.class_id);
      const std::string pa = std::string("patches/") + name + "_a.png";
      const std::string pb = std::string("patches/") + name + "_b.png";
      SavePng(guard.File(dir / pa).string(), pp.a.image);
      SavePng(guard.File(dir / pb).string(), pp.b.image);
      lines += ManifestLine(pp.class_id, pa, pb, pp.a.anchor, pp.b.anchor) + "\n";
      ++next_class;
    }
  }
  WriteText(guard, dir / "pairs.txt", lines);
  guard.Commit();
  out << "wrote " << next_class << " patch pairs from " << rows.size() << " impression pairs (" << skipped
      << " skipped)\n";
  return 0;
}

void AddCommon(CLI::App* cmd, Common& c, bool with_out, bool out_required = false) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed override");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  if (with_out) {
    auto* o = cmd->add_option("--out", c.out, "Output path");
    if (out_required) o->required();
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dense minutia descriptor toolkit", "dmd"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "Generate synthetic fingerprints");
  int count = 1;
  synth->add_option("--count", count, "Number of fingerprints");
  AddCommon(synth, common, true, true);

  auto* enroll = app.add_subcommand("enroll", "Build a template from a record or an image");
  std::string input, minutiae, mask;
  enroll->add_option("input", input, "Record .json or image .png")->required()->check(CLI::ExistingFile);
  enroll->add_option("--minutiae", minutiae, "Minutiae text file for an image input");
  enroll->add_option("--mask", mask, "Mask PNG for an image input");
  enroll->add_flag("--binary", common.binary, "Write the binary form");
  AddCommon(enroll, common, true, true);

  auto* match = app.add_subcommand("match", "Score two templates");
  std::string ta, tb;
  match->add_option("a", ta)->required()->check(CLI::ExistingFile);
  match->add_option("b", tb)->required()->check(CLI::ExistingFile);
  AddCommon(match, common, true);

  auto* identify = app.add_subcommand("identify", "Rank a gallery directory against a probe");
  std::string probe, gallery;
  identify->add_option("probe", probe)->required()->check(CLI::ExistingFile);
  identify->add_option("gallery", gallery)->required();
  AddCommon(identify, common, true);

  auto* evaluate = app.add_subcommand("evaluate", "Run an identification protocol");
  std::string protocol;
  evaluate->add_option("protocol", protocol)->required()->check(CLI::ExistingFile);
  AddCommon(evaluate, common, true, true);

  auto* gen = app.add_subcommand("gen-pairs", "Generate mated patch pairs");
  std::string dataset;
  gen->add_option("dataset", dataset)->required()->check(CLI::ExistingFile);
  AddCommon(gen, common, true, true);

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");
  AddCommon(selftest, common, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) return Synth(Effective(common, *synth), count, common.out, out);
    if (*enroll) return Enroll(Effective(common, *enroll), input, minutiae, mask, common.binary, common.out, out);
    if (*match) return Match(Effective(common, *match), ta, tb, common.out, out);
    if (*identify) return IdentifyCmd(Effective(common, *identify), probe, gallery, common.out, out);
    if (*evaluate) return Evaluate(Effective(common, *evaluate), protocol, common.out, out);
    if (*gen) return GenPairs(Effective(common, *gen), dataset, common.out, out);
    if (*selftest) return RunSelfTest(Effective(common, *selftest), out) ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dmd::cli
