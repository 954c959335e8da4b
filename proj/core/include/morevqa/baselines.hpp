#pragma once

#include <optional>
#include <string>

#include "morevqa/pipeline.hpp"
#include "morevqa/program.hpp"

namespace morevqa {

struct JcefConfig {
  double fps_caption = 1.0;
  /// Share of the captionable frames to use; 0 gives the LLM-only prompt.
  double frame_fraction = 1.0;

  void validate() const;
};

/// Video frames JCEF captions: round(fraction * count) picks spread uniformly
/// over the fps_caption index space, mapped back to video frame ids.
FrameWindow jcef_frames(const VideoMeta& video, const JcefConfig& cfg);

SystemOutput run_jcef(const VideoMeta& video, const QAItem& qa, const JcefConfig& cfg, ToolSession& tools);
SystemOutput run_llm_only(const QAItem& qa, ToolSession& tools);

/// Runs one extended-mode program over the whole video. When `program` is
/// empty the program is requested from the backend with a `#planner:single_stage` prompt.
SystemOutput run_single_stage(const VideoMeta& video, const QAItem& qa, ToolSession& tools,
                              const std::optional<lang::ProgramFile>& program = std::nullopt,
                              std::size_t step_budget = 10'000);

}  // namespace morevqa
