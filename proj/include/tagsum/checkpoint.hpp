#pragma once

#include <filesystem>
#include <string>

#include "tagsum/model.hpp"

namespace tagsum::model {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointInfo {
  Mode mode = Mode::TAG;
  bool use_coverage = false;
  int epoch = 0;
  // Companion files, relative to the manifest's directory.
  std::string vocab_file;
  std::string topic_model_file;
};

struct Checkpoint {
  ModelParams params;
  CheckpointInfo info;
};

// Writes <manifest> (JSON) and <manifest stem>.bin holding every array
// row-major, little-endian float64, concatenated in ModelParams::named() order.
void save_checkpoint(const std::filesystem::path& manifest, const ModelParams& params,
                     const CheckpointInfo& info);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

}  // namespace tagsum::model
