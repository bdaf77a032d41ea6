#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "camf/nn.hpp"
#include "camf/optim.hpp"

namespace camf {

enum class TaskKind {
  Signal1D,
  ImageRegression,
  ImageGeneralization,
  SyntheticRay,
  SyntheticVideo,
};

enum class CamVariant { None, Cam, CamN };

const char* task_name(TaskKind t);
const char* variant_name(CamVariant v);

/// Everything needed to reproduce one run.
///
/// Text form is INI-like: `[section]` headers and `key = value` lines, `#`
/// comments. Sections: task, model, grid, optim, output. Unknown keys are
/// rejected with their line number.
struct TrainConfig {
  TaskKind task = TaskKind::Signal1D;

  // [task]
  std::string image;  // PPM path, or synthetic:<natural|checker|noise>:<size>
  std::size_t samples = 1000;  // signal1d sample count
  std::size_t rays = 512;      // synthetic-ray dataset size
  std::size_t frames = 16;     // synthetic-video frame count
  std::size_t frame_size = 8;  // synthetic-video frame side
  std::size_t iterations = 1500;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  int bits = 32;

  // [model] + [grid]
  MlpSpec model;
  CamVariant cam = CamVariant::Cam;

  // [optim]
  LrSchedule schedule;

  // [output]
  std::string out_dir;

  /// Task defaults before any key is applied.
  static TrainConfig defaults(TaskKind task);
  /// Cross-field checks; throws std::invalid_argument.
  void validate() const;
  /// Copy with the CAM variant switched (used by `ablate`).
  TrainConfig with_variant(CamVariant v) const;

  bool operator==(const TrainConfig&) const = default;
};

/// Parses config text. Errors carry "line N:" prefixes.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);
/// Serializes every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const TrainConfig& config);

}  // namespace camf
