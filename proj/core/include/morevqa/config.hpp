#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "morevqa/eval.hpp"

namespace morevqa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sets one field. Keys: n_context_frames, fps_caption, decode_temperature,
/// seed, trim_mode, grounding_to_reasoning, score_threshold, stage_mask
/// ("1,0,1"), frame_fraction, planner, prompt_template, workers.
void apply_setting(EvalConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; '#' starts a comment line.
void apply_config_text(EvalConfig& cfg, const std::string& text, const std::string& origin = "config");
EvalConfig load_config(const std::filesystem::path& path, EvalConfig base = {});

/// Round-trippable key=value rendering of every field.
std::string render_config(const EvalConfig& cfg);

}  // namespace morevqa
