#include "dmd/cli/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "dmd/error.hpp"

namespace dmd::cli {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and complains about whatever is left.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(Errc::kFormat, "config section '" + path_ + "' must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error(Errc::kFormat, "config key '" + Where(key) + "' has the wrong type");
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string Where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(Errc::kFormat, "unknown config key '" + Where(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void WithChild(Section& parent, const char* key, Fn&& fn) {
  if (const json* child = parent.Child(key)) {
    Section s(*child, parent.Where(key));
    fn(s);
    s.Finish();
  }
}

// One list of fields per config struct, shared by parse and dump.
template <typename S>
void MatchFields(S& s, MatchConfig& c) {
  s.Get("overlap_reference", c.overlap_reference);
  s.Get("min_nm", c.min_nm);
  s.Get("max_nm", c.max_nm);
  s.Get("tau", c.tau);
  s.Get("mu", c.mu);
  s.Get("relax_iterations", c.relax_iterations);
  s.Get("relax_weight", c.relax_weight);
  s.Get("relax_sigma_distance", c.relax_sigma_distance);
  s.Get("relax_sigma_direction", c.relax_sigma_direction);
  s.Get("relax_sigma_radial", c.relax_sigma_radial);
  s.Get("overlap_grid", c.overlap_grid);
  s.Get("overlap_normalization", c.overlap_normalization);
}

template <typename S>
void MccFields(S& s, MccParams& c) {
  s.Get("radius", c.radius);
  s.Get("spatial_divisions", c.spatial_divisions);
  s.Get("angular_divisions", c.angular_divisions);
  s.Get("sigma_s", c.sigma_s);
  s.Get("sigma_d", c.sigma_d);
  s.Get("min_valid_fraction", c.min_valid_fraction);
  s.Get("bit_mode", c.bit_mode);
  s.Get("hull_offset", c.hull_offset);
  s.Get("min_neighbors", c.min_neighbors);
  s.Get("max_direction_diff", c.max_direction_diff);
}

template <typename S>
void RansacFields(S& s, RansacConfig& c) {
  s.Get("iterations", c.iterations);
  s.Get("inlier_residual_px", c.inlier_residual_px);
  s.Get("inlier_angle_rad", c.inlier_angle_rad);
  s.Get("min_inliers", c.min_inliers);
  s.Get("seed", c.seed);
}

template <typename S>
void TrainGenFields(S& s, TrainGenConfig& c) {
  s.Get("top_n", c.top_n);
  s.Get("fps_k", c.fps_k);
  s.Get("erosion_radius", c.erosion_radius);
  s.Get("patch_size", c.patch_size);
}

template <typename S>
void DistortionFields(S& s, DistortionConfig& c) {
  s.Get("magnitude", c.magnitude);
  s.Get("grid", c.grid);
  s.Get("seed", c.seed);
}

template <typename S>
void AugmentFields(S& s, AugmentConfig& c) {
  s.Get("max_translation", c.max_translation);
  s.Get("max_rotation", c.max_rotation);
  s.Get("noise_sigma", c.noise_sigma);
  s.Get("min_gamma", c.min_gamma);
  s.Get("max_gamma", c.max_gamma);
  s.Get("distortion", c.distortion);
}

template <typename S>
void DescriptorFields(S& s, DescriptorConfig& c) {
  s.Get("channels", c.channels);
  s.Get("grid", c.grid);
}

template <typename S>
void MapFields(S& s, MapConfig& c) {
  s.Get("sigma_pos", c.sigma_pos);
  s.Get("sigma_ang", c.sigma_ang);
  s.Get("channels", c.channels);
  s.Get("grid", c.grid);
  s.Get("scale", c.scale);
}

template <typename S>
void LossFields(S& s, LossConfig& c) {
  s.Get("scale", c.scale);
  s.Get("margin", c.margin);
  s.Get("lambda_seg", c.lambda_seg);
  s.Get("lambda_mnt", c.lambda_mnt);
  s.Get("lambda_sim", c.lambda_sim);
}

template <typename S>
void SynthFields(S& s, SynthConfig& c) {
  s.Get("size", c.size);
  s.Get("min_period", c.min_period);
  s.Get("max_period", c.max_period);
  s.Get("minutia_spacing", c.minutia_spacing);
  s.Get("minutia_area", c.minutia_area);
  s.Get("border_margin", c.border_margin);
}

template <typename S>
void ImpressionFields(S& s, ImpressionConfig& c) {
  s.Get("rotation_deg", c.rotation_deg);
  s.Get("tx", c.tx);
  s.Get("ty", c.ty);
  s.Get("crop", c.crop);
  s.Get("spurious", c.spurious);
  s.Get("seed", c.seed);
}

// Writer with the same Get interface.
class Dump {
 public:
  template <typename T>
  void Get(const char* key, T& v) {
    j[key] = v;
  }
  json j = json::object();
};

template <typename Fn, typename T>
json Dumped(Fn fn, T& value) {
  Dump d;
  fn(d, value);
  return d.j;
}

}  // namespace

void RunConfig::Validate() const {
  if (workers < 1) throw Error(Errc::kInvalidArgument, "workers must be at least 1");
  match.Validate();
  traingen.Validate();
  loss.Validate();
  if (descriptor.channels != kOracleChannels || descriptor.grid != kDescriptorGrid) {
    throw Error(Errc::kInvalidArgument, "the oracle extractor produces 6 channels on an 8x8 grid");
  }
  if (!(distortion.magnitude >= 0.0)) throw Error(Errc::kInvalidArgument, "distortion magnitude must be >= 0");
  if (!(impression.crop > 0.0 && impression.crop <= 1.0)) throw Error(Errc::kInvalidArgument, "crop must be in (0, 1]");
  if (impression.spurious < 0) throw Error(Errc::kInvalidArgument, "spurious count must be >= 0");
  if (synth.size < 128) throw Error(Errc::kInvalidArgument, "synthetic canvas must be at least 128 px");
}

RunConfig ParseRunConfig(const json& j) {
  RunConfig cfg;
  Section root(j, "");
  root.Get("seed", cfg.seed);
  root.Get("workers", cfg.workers);
  WithChild(root, "match", [&](Section& s) { MatchFields(s, cfg.match); });
  WithChild(root, "mcc", [&](Section& s) { MccFields(s, cfg.mcc); });
  WithChild(root, "traingen", [&](Section& s) {
    TrainGenFields(s, cfg.traingen);
    WithChild(s, "ransac", [&](Section& r) { RansacFields(r, cfg.traingen.ransac); });
  });
  WithChild(root, "distortion", [&](Section& s) { DistortionFields(s, cfg.distortion); });
  WithChild(root, "augment", [&](Section& s) { AugmentFields(s, cfg.augment); });
  WithChild(root, "descriptor", [&](Section& s) { DescriptorFields(s, cfg.descriptor); });
  WithChild(root, "map", [&](Section& s) { MapFields(s, cfg.map); });
  WithChild(root, "loss", [&](Section& s) { LossFields(s, cfg.loss); });
  WithChild(root, "synth", [&](Section& s) { SynthFields(s, cfg.synth); });
  WithChild(root, "impression", [&](Section& s) { ImpressionFields(s, cfg.impression); });
  root.Finish();
  cfg.traingen.mcc = cfg.mcc;
  cfg.Validate();
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::kFormat, "config " + path + " is not valid JSON: " + e.what());
  }
  return ParseRunConfig(j);
}

json ToJson(const RunConfig& c) {
  RunConfig cfg = c;
  json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["match"] = Dumped([](Dump& d, MatchConfig& v) { MatchFields(d, v); }, cfg.match);
  j["mcc"] = Dumped([](Dump& d, MccParams& v) { MccFields(d, v); }, cfg.mcc);
  j["traingen"] = Dumped([](Dump& d, TrainGenConfig& v) { TrainGenFields(d, v); }, cfg.traingen);
  j["traingen"]["ransac"] = Dumped([](Dump& d, RansacConfig& v) { RansacFields(d, v); }, cfg.traingen.ransac);
  j["distortion"] = Dumped([](Dump& d, DistortionConfig& v) { DistortionFields(d, v); }, cfg.distortion);
  j["augment"] = Dumped([](Dump& d, AugmentConfig& v) { AugmentFields(d, v); }, cfg.augment);
  j["descriptor"] = Dumped([](Dump& d, DescriptorConfig& v) { DescriptorFields(d, v); }, cfg.descriptor);
  j["map"] = Dumped([](Dump& d, MapConfig& v) { MapFields(d, v); }, cfg.map);
  j["loss"] = Dumped([](Dump& d, LossConfig& v) { LossFields(d, v); }, cfg.loss);
  j["synth"] = Dumped([](Dump& d, SynthConfig& v) { SynthFields(d, v); }, cfg.synth);
  j["impression"] = Dumped([](Dump& d, ImpressionConfig& v) { ImpressionFields(d, v); }, cfg.impression);
  return j;
}

std::string ConfigHash(const RunConfig& cfg) {
  json j = ToJson(cfg);
  j.erase("workers");  // never changes results
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dmd::cli
