#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "morevqa/baselines.hpp"
#include "morevqa/fixture.hpp"
#include "morevqa/pipeline.hpp"

namespace morevqa {

namespace fs = std::filesystem;

struct EvalItem {
  std::string item_id;
  std::string video_id;
  QAItem qa;
  std::optional<std::string> qtype_label;
  std::optional<std::string> subset;
  std::optional<fs::path> program_path;
  /// Optional inline video metadata (frame_count, fps).
  std::optional<VideoMeta> video;
  int line = 0;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/// One item per non-blank line. Strict mode throws DatasetError on the first
/// bad line; lenient mode skips it and appends "line N: reason" to `skipped`.
/// Relative program_path values resolve against the dataset's directory.
std::vector<EvalItem> load_dataset(const fs::path& path, bool lenient = false,
                                   std::vector<std::string>* skipped = nullptr);
EvalItem parse_eval_item(const json& j, int line, const fs::path& base_dir = {});
json to_json(const EvalItem& item);

double score_mc(int pred_index, int gt_index);
/// min(m/2, 1) where m counts annotations equal to the prediction after normalization.
double score_open_ended(const std::string& pred, const std::vector<std::string>& gt_answers);

double interval_iou(const TimeWindow& a, const TimeWindow& b);
double interval_iop(const TimeWindow& pred, const TimeWindow& gt);

struct EvalResult {
  std::size_t index = 0;
  std::string item_id;
  std::string video_id;
  std::optional<std::string> subset;
  std::string predicted_answer;
  std::optional<int> mc_index;
  double credit = 0.0;
  bool correct = false;
  std::optional<TimeWindow> pred_window_s;
  std::optional<TimeWindow> gt_window_s;
  std::map<std::string, double> stage_ms;
  std::optional<Failure> failure;
};

/// Deterministic fields only; stage timings are written separately.
json to_json(const EvalResult& r);

struct GroundedMetrics {
  double miop = 0.0;
  double iop_at_05 = 0.0;
  double miou = 0.0;
  double iou_at_05 = 0.0;
  double acc_at_gqa = 0.0;
};

json to_json(const GroundedMetrics& m);

/// Throws std::invalid_argument when a result lacks a predicted or ground-truth window.
GroundedMetrics grounded_qa_metrics(const std::vector<EvalResult>& results);

enum class SystemName { morevqa, jcef, llm_only, single_stage };
std::string_view to_string(SystemName s);
std::optional<SystemName> parse_system_name(std::string_view s);
inline constexpr SystemName kAllSystems[] = {SystemName::morevqa, SystemName::jcef, SystemName::llm_only,
                                             SystemName::single_stage};

/// Resolves video metadata for items without inline metadata.
using VideoResolver = std::function<std::optional<VideoMeta>(const std::string& video_id)>;
VideoResolver resolver_for(std::shared_ptr<const FixtureCorpus> corpus);

struct EvalConfig {
  RunConfig run;
  JcefConfig jcef;
  Planner planner;
  int workers = 1;
};

struct SubsetScore {
  std::size_t n = 0;
  double accuracy = 0.0;
};

struct EvalSummary {
  SystemName system = SystemName::morevqa;
  std::size_t n_items = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  std::map<std::string, SubsetScore> subsets;
  std::size_t n_failures = 0;
  double failure_rate = 0.0;
  std::map<std::string, std::size_t> failure_kinds;
  std::optional<GroundedMetrics> grounded;
};

json to_json(const EvalSummary& s);
EvalSummary summarize(SystemName system, const std::vector<EvalResult>& results);

struct EvalRun {
  std::vector<EvalItem> items;
  std::vector<EvalResult> results;
  std::vector<SystemOutput> outputs;
  EvalSummary summary;
};

/// Answers one item with the chosen system. Item-level problems become a
/// Failure in the output; replay misses and unresolvable videos propagate.
SystemOutput answer_item(const EvalItem& item, const VideoMeta& video, SystemName system, const EvalConfig& cfg,
                         ToolSession& tools);
EvalResult score_item(const EvalItem& item, std::size_t index, const SystemOutput& out);

/// Evaluates items concurrently on cfg.workers threads; results keep input order.
EvalRun run_eval(const std::vector<EvalItem>& items, SystemName system, const EvalConfig& cfg,
                 const VideoResolver& resolve, ToolSession& tools);

/// results.jsonl, summary.json, traces/<index>_<item_id>.json and timing.jsonl.
void write_eval(const EvalRun& run, const fs::path& out_dir);

/// Trace file content for one item.
json item_trace(const EvalItem& item, std::size_t index, const SystemOutput& out);

struct AblationRow {
  StageMask mask;
  double accuracy = 0.0;
  std::size_t n_items = 0;
};

inline constexpr StageMask kAblationGrid[] = {
    {false, false, false}, {true, false, true}, {true, true, false}, {true, true, true}};

std::vector<AblationRow> run_ablation(const std::vector<EvalItem>& items, const EvalConfig& cfg,
                                      const VideoResolver& resolve, ToolSession& tools);
/// Header `m1,m2,m3,accuracy`, one row per mask.
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct TraceStat {
  QAType qa_type = QAType::other;
  TemporalConjunction conjunction = TemporalConjunction::none;
  std::optional<std::string> label;
};

/// Reads the stage-1 memory and optional dataset label from an item trace.
std::optional<TraceStat> trace_stat(const json& trace);

struct QTypeStats {
  std::size_t n = 0;
  std::map<std::string, double> qtype;
  std::map<std::string, double> conjunction;
  double p_conjunction = 0.0;
  /// label -> predicted type -> count; only items with labels.
  std::map<std::string, std::map<std::string, std::size_t>> agreement;
  std::size_t n_labeled = 0;
  double agreement_rate = 0.0;
};

QTypeStats qtype_stats(const std::vector<TraceStat>& traces);
json to_json(const QTypeStats& s);

}  // namespace morevqa
