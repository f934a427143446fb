#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "dmd/descriptor.hpp"
#include "dmd/losses.hpp"
#include "dmd/matcher.hpp"
#include "dmd/mcc.hpp"
#include "dmd/minutiae_map.hpp"
#include "dmd/synth.hpp"
#include "dmd/traingen.hpp"

namespace dmd::cli {

// How a synthetic impression is derived from its master print.
struct ImpressionConfig {
  double rotation_deg = 0.0;  // about the canvas center
  double tx = 0.0;
  double ty = 0.0;
  double crop = 1.0;  // fraction of foreground kept; 1 disables cropping
  int spurious = 0;
  std::uint64_t seed = 0;  // varies distortion and crop between impressions
};

struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  MatchConfig match;
  MccParams mcc;
  TrainGenConfig traingen;
  DistortionConfig distortion{0.0, 4, 1};
  AugmentConfig augment;
  DescriptorConfig descriptor;
  MapConfig map;
  LossConfig loss;
  SynthConfig synth;
  ImpressionConfig impression;

  void Validate() const;
};

/// Keys missing from `j` keep their defaults; unknown keys throw.
RunConfig ParseRunConfig(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::string& path);
nlohmann::json ToJson(const RunConfig& cfg);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string ConfigHash(const RunConfig& cfg);

}  // namespace dmd::cli
