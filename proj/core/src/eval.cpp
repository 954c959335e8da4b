#include "morevqa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "morevqa/text.hpp"

namespace morevqa {

DatasetError::DatasetError(int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

const std::set<std::string> kItemFields = {"id",          "video_id",  "question", "candidates", "answer_mc",
                                           "answer_open", "gt_window_s", "qtype",  "subset",     "program_path",
                                           "frame_count", "fps"};

std::optional<std::string> opt_string(const json& j, const char* key, int line) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw DatasetError(line, std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

}  // namespace

EvalItem parse_eval_item(const json& j, int line, const fs::path& base_dir) {
  if (!j.is_object()) throw DatasetError(line, "item must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kItemFields.count(key)) throw DatasetError(line, "unknown field '" + key + "'");
  EvalItem item;
  item.line = line;
  auto video_id = opt_string(j, "video_id", line);
  if (!video_id || video_id->empty()) throw DatasetError(line, "video_id is required");
  item.video_id = *video_id;
  auto question = opt_string(j, "question", line);
  if (!question || question->empty()) throw DatasetError(line, "question is required");
  item.qa.question = *question;
  item.item_id = opt_string(j, "id", line).value_or("L" + std::to_string(line));

  try {
    if (j.contains("candidates")) item.qa.candidates = j["candidates"].get<std::vector<std::string>>();
    if (j.contains("answer_mc") && !j["answer_mc"].is_null()) {
      if (!j["answer_mc"].is_number_integer()) throw DatasetError(line, "answer_mc must be an integer");
      item.qa.answer_mc = j["answer_mc"].get<int>();
    }
    if (j.contains("answer_open") && !j["answer_open"].is_null()) {
      const auto& a = j["answer_open"];
      item.qa.answer_open = a.is_string() ? std::vector<std::string>{a.get<std::string>()}
                                          : a.get<std::vector<std::string>>();
    }
    if (j.contains("gt_window_s") && !j["gt_window_s"].is_null()) {
      const auto w = j["gt_window_s"].get<std::vector<double>>();
      if (w.size() != 2) throw DatasetError(line, "gt_window_s must be [start, end]");
      item.qa.gt_window_s = TimeWindow{w[0], w[1]};
    }
    if (j.contains("frame_count") || j.contains("fps")) {
      if (!j.contains("frame_count") || !j.contains("fps"))
        throw DatasetError(line, "frame_count and fps must be given together");
      item.video = VideoMeta::make(item.video_id, j["frame_count"].get<int>(), j["fps"].get<double>());
    }
  } catch (const json::exception& e) {
    throw DatasetError(line, e.what());
  } catch (const InvariantError& e) {
    throw DatasetError(line, e.what());
  }
  if (item.qa.answer_mc && item.qa.candidates.empty()) throw DatasetError(line, "answer_mc needs candidates");
  try {
    item.qa.validate();
  } catch (const InvariantError& e) {
    throw DatasetError(line, e.what());
  }
  item.qtype_label = opt_string(j, "qtype", line);
  item.subset = opt_string(j, "subset", line);
  if (auto p = opt_string(j, "program_path", line)) {
    fs::path path(*p);
    item.program_path = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  }
  return item;
}

json to_json(const EvalItem& item) {
  json j{{"id", item.item_id}, {"video_id", item.video_id}, {"question", item.qa.question}};
  if (!item.qa.candidates.empty()) j["candidates"] = item.qa.candidates;
  if (item.qa.answer_mc) j["answer_mc"] = *item.qa.answer_mc;
  if (item.qa.answer_open) j["answer_open"] = *item.qa.answer_open;
  if (item.qa.gt_window_s) j["gt_window_s"] = {item.qa.gt_window_s->start, item.qa.gt_window_s->end};
  if (item.qtype_label) j["qtype"] = *item.qtype_label;
  if (item.subset) j["subset"] = *item.subset;
  if (item.program_path) j["program_path"] = item.program_path->generic_string();
  if (item.video) {
    j["frame_count"] = item.video->frame_count;
    j["fps"] = item.video->fps;
  }
  return j;
}

std::vector<EvalItem> load_dataset(const fs::path& path, bool lenient, std::vector<std::string>* skipped) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<EvalItem> items;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DatasetError(line_no, std::string("malformed JSON: ") + e.what());
      }
      auto item = parse_eval_item(j, line_no, path.parent_path());
      if (!ids.insert(item.item_id).second) throw DatasetError(line_no, "duplicate id '" + item.item_id + "'");
      items.push_back(std::move(item));
    } catch (const DatasetError& e) {
      if (!lenient) throw;
      if (skipped) skipped->push_back(e.what());
    }
  }
  return items;
}

// ---------------------------------------------------------------------------
// Scoring

double score_mc(int pred_index, int gt_index) { return pred_index == gt_index ? 1.0 : 0.0; }

double score_open_ended(const std::string& pred, const std::vector<std::string>& gt_answers) {
  if (gt_answers.empty()) throw std::invalid_argument("score_open_ended needs ground-truth answers");
  const auto p = text::normalize(pred);
  const auto m = std::count_if(gt_answers.begin(), gt_answers.end(),
                               [&](const std::string& g) { return text::normalize(g) == p; });
  return std::min(static_cast<double>(m) / 2.0, 1.0);
}

namespace {

double length(const TimeWindow& w) { return std::max(0.0, w.end - w.start); }

double intersection(const TimeWindow& a, const TimeWindow& b) {
  return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

void check_window(const TimeWindow& w) {
  if (w.start > w.end) throw std::invalid_argument("interval start after end");
}

}  // namespace

double interval_iou(const TimeWindow& a, const TimeWindow& b) {
  check_window(a);
  check_window(b);
  const double inter = intersection(a, b);
  const double uni = length(a) + length(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double interval_iop(const TimeWindow& pred, const TimeWindow& gt) {
  check_window(pred);
  check_window(gt);
  const double len = length(pred);
  return len > 0.0 ? intersection(pred, gt) / len : 0.0;
}

namespace {

json window_json(const std::optional<TimeWindow>& w) {
  return w ? json::array({w->start, w->end}) : json(nullptr);
}

}  // namespace

json to_json(const EvalResult& r) {
  return json{{"index", r.index},
              {"item_id", r.item_id},
              {"video_id", r.video_id},
              {"subset", r.subset ? json(*r.subset) : json(nullptr)},
              {"predicted_answer", r.predicted_answer},
              {"mc_index", r.mc_index ? json(*r.mc_index) : json(nullptr)},
              {"credit", r.credit},
              {"correct", r.correct},
              {"pred_window_s", window_json(r.pred_window_s)},
              {"gt_window_s", window_json(r.gt_window_s)},
              {"failure", r.failure ? json(*r.failure) : json(nullptr)}};
}

json to_json(const GroundedMetrics& m) {
  return json{{"mIoP", m.miop},
              {"IoP@0.5", m.iop_at_05},
              {"mIoU", m.miou},
              {"IoU@0.5", m.iou_at_05},
              {"Acc@GQA", m.acc_at_gqa}};
}

GroundedMetrics grounded_qa_metrics(const std::vector<EvalResult>& results) {
  GroundedMetrics m;
  if (results.empty()) return m;
  for (const auto& r : results) {
    if (!r.pred_window_s || !r.gt_window_s)
      throw std::invalid_argument("grounded metrics need predicted and ground-truth windows (item " + r.item_id +
                                  ")");
    const double iop = interval_iop(*r.pred_window_s, *r.gt_window_s);
    const double iou = interval_iou(*r.pred_window_s, *r.gt_window_s);
    m.miop += iop;
    m.miou += iou;
    if (iop >= 0.5) m.iop_at_05 += 1;
    if (iou >= 0.5) m.iou_at_05 += 1;
    if (r.correct && iop >= 0.5) m.acc_at_gqa += 1;
  }
  const double n = static_cast<double>(results.size());
  m.miop /= n;
  m.miou /= n;
  m.iop_at_05 /= n;
  m.iou_at_05 /= n;
  m.acc_at_gqa /= n;
  return m;
}

// ---------------------------------------------------------------------------
// Systems

std::string_view to_string(SystemName s) {
  switch (s) {
    case SystemName::morevqa: return "morevqa";
    case SystemName::jcef: return "jcef";
    case SystemName::llm_only: return "llm_only";
    case SystemName::single_stage: return "single_stage";
  }
  return "?";
}

std::optional<SystemName> parse_system_name(std::string_view s) {
  for (auto name : kAllSystems)
    if (to_string(name) == s) return name;
  return std::nullopt;
}

VideoResolver resolver_for(std::shared_ptr<const FixtureCorpus> corpus) {
  return [corpus](const std::string& id) -> std::optional<VideoMeta> {
    if (!corpus) return std::nullopt;
    const auto* f = corpus->find(id);
    if (f == nullptr) return std::nullopt;
    return f->meta();
  };
}

json to_json(const EvalSummary& s) {
  json subsets = json::object();
  for (const auto& [name, score] : s.subsets) subsets[name] = {{"n", score.n}, {"accuracy", score.accuracy}};
  return json{{"system", to_string(s.system)},
              {"n_items", s.n_items},
              {"n_correct", s.n_correct},
              {"accuracy", s.accuracy},
              {"open_ended_metric", "string-match"},
              {"subsets", subsets},
              {"failures", {{"count", s.n_failures}, {"rate", s.failure_rate}, {"by_kind", s.failure_kinds}}},
              {"grounded", s.grounded ? to_json(*s.grounded) : json(nullptr)}};
}

EvalSummary summarize(SystemName system, const std::vector<EvalResult>& results) {
  EvalSummary s;
  s.system = system;
  s.n_items = results.size();
  double total = 0.0;
  std::map<std::string, double> subset_credit;
  bool all_gt = !results.empty();
  bool any_pred = false;
  for (const auto& r : results) {
    total += r.credit;
    if (r.correct) ++s.n_correct;
    if (r.subset) {
      ++s.subsets[*r.subset].n;
      subset_credit[*r.subset] += r.credit;
    }
    if (r.failure) {
      ++s.n_failures;
      ++s.failure_kinds[r.failure->kind];
    }
    all_gt = all_gt && r.gt_window_s.has_value();
    any_pred = any_pred || r.pred_window_s.has_value();
  }
  if (!results.empty()) {
    s.accuracy = total / static_cast<double>(results.size());
    s.failure_rate = static_cast<double>(s.n_failures) / static_cast<double>(results.size());
  }
  for (auto& [name, score] : s.subsets) score.accuracy = subset_credit[name] / static_cast<double>(score.n);
  if (all_gt && any_pred) {
    auto filled = results;
    for (auto& r : filled)
      if (!r.pred_window_s) r.pred_window_s = TimeWindow{0.0, 0.0};
    s.grounded = grounded_qa_metrics(filled);
  }
  return s;
}

SystemOutput answer_item(const EvalItem& item, const VideoMeta& video, SystemName system, const EvalConfig& cfg,
                         ToolSession& tools) {
  switch (system) {
    case SystemName::morevqa: return run_morevqa(video, item.qa, cfg.run, cfg.planner, tools);
    case SystemName::jcef: return run_jcef(video, item.qa, cfg.jcef, tools);
    case SystemName::llm_only: return run_llm_only(item.qa, tools);
    case SystemName::single_stage: {
      std::optional<lang::ProgramFile> program;
      if (item.program_path) {
        try {
          program = lang::load_program_file(*item.program_path);
        } catch (const lang::ParseError& e) {
          SystemOutput out;
          out.failure = Failure{"parse_error", "single_stage", e.what()};
          return out;
        } catch (const std::exception& e) {
          SystemOutput out;
          out.failure = Failure{"program_error", "single_stage", e.what()};
          return out;
        }
      }
      return run_single_stage(video, item.qa, tools, program);
    }
  }
  throw std::logic_error("unknown system");
}

EvalResult score_item(const EvalItem& item, std::size_t index, const SystemOutput& out) {
  EvalResult r;
  r.index = index;
  r.item_id = item.item_id;
  r.video_id = item.video_id;
  r.subset = item.subset;
  r.predicted_answer = out.answer;
  r.mc_index = out.mc_index;
  r.pred_window_s = out.grounded_window_s;
  r.gt_window_s = item.qa.gt_window_s;
  r.stage_ms = out.stage_ms;
  r.failure = out.failure;
  if (!out.failure) {
    if (item.qa.answer_mc)
      r.credit = out.mc_index ? score_mc(*out.mc_index, *item.qa.answer_mc) : 0.0;
    else if (item.qa.answer_open)
      r.credit = score_open_ended(out.answer, *item.qa.answer_open);
  }
  r.correct = r.credit >= 1.0;
  return r;
}

namespace {

std::vector<VideoMeta> resolve_all(const std::vector<EvalItem>& items, const VideoResolver& resolve) {
  std::vector<VideoMeta> metas;
  metas.reserve(items.size());
  for (const auto& item : items) {
    if (item.video) {
      metas.push_back(*item.video);
      continue;
    }
    auto meta = resolve ? resolve(item.video_id) : std::nullopt;
    if (!meta) throw std::runtime_error("line " + std::to_string(item.line) + ": unknown video '" + item.video_id + "'");
    metas.push_back(*meta);
  }
  return metas;
}

}  // namespace

EvalRun run_eval(const std::vector<EvalItem>& items, SystemName system, const EvalConfig& cfg,
                 const VideoResolver& resolve, ToolSession& tools) {
  cfg.run.validate();
  cfg.jcef.validate();
  const auto metas = resolve_all(items, resolve);
  EvalRun run;
  run.items = items;
  run.outputs.resize(items.size());
  run.results.resize(items.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      {
        std::lock_guard lock(fatal_mu);
        if (fatal) return;
      }
      try {
        const auto start = std::chrono::steady_clock::now();
        run.outputs[i] = answer_item(items[i], metas[i], system, cfg, tools);
        run.outputs[i].stage_ms["total"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        run.results[i] = score_item(items[i], i, run.outputs[i]);
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(items.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  run.summary = summarize(system, run.results);
  return run;
}

json item_trace(const EvalItem& item, std::size_t index, const SystemOutput& out) {
  json j = trace_json(out);
  j["index"] = index;
  j["item_id"] = item.item_id;
  j["video_id"] = item.video_id;
  j["question"] = item.qa.question;
  j["qtype_label"] = item.qtype_label ? json(*item.qtype_label) : json(nullptr);
  return j;
}

namespace {

std::string trace_name(std::size_t index, const std::string& item_id) {
  std::string safe;
  for (char c : item_id) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  std::string idx = std::to_string(index);
  if (idx.size() < 4) idx.insert(0, 4 - idx.size(), '0');
  return idx + "_" + safe + ".json";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

void write_eval(const EvalRun& run, const fs::path& out_dir) {
  fs::create_directories(out_dir / "traces");
  std::string results;
  std::string timing;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    results += to_json(run.results[i]).dump() + "\n";
    timing += json{{"index", i}, {"item_id", run.results[i].item_id}, {"stage_ms", run.results[i].stage_ms}}.dump() +
              "\n";
    write_file(out_dir / "traces" / trace_name(i, run.items[i].item_id),
               item_trace(run.items[i], i, run.outputs[i]).dump(2) + "\n");
  }
  write_file(out_dir / "results.jsonl", results);
  write_file(out_dir / "timing.jsonl", timing);
  write_file(out_dir / "summary.json", to_json(run.summary).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationRow> run_ablation(const std::vector<EvalItem>& items, const EvalConfig& cfg,
                                      const VideoResolver& resolve, ToolSession& tools) {
  std::vector<AblationRow> rows;
  for (const auto& mask : kAblationGrid) {
    EvalConfig c = cfg;
    c.run.stage_mask = mask;
    const auto run = run_eval(items, SystemName::morevqa, c, resolve, tools);
    rows.push_back({mask, run.summary.accuracy, run.summary.n_items});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "m1,m2,m3,accuracy\n";
  for (const auto& r : rows) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), r.accuracy);
    out += std::to_string(int(r.mask.event_parsing)) + "," + std::to_string(int(r.mask.grounding)) + "," +
           std::to_string(int(r.mask.reasoning)) + "," + std::string(buf, res.ptr) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Question-type statistics

std::optional<TraceStat> trace_stat(const json& trace) {
  if (!trace.contains("stage_records") || !trace["stage_records"].is_array() || trace["stage_records"].empty())
    return std::nullopt;
  const auto& first = trace["stage_records"][0];
  if (first.value("stage_name", "") != "event_parsing" || first.value("emitted_program", "").empty())
    return std::nullopt;
  const auto& mem = first.at("memory_after");
  TraceStat s;
  auto type = parse_qa_type(mem.at("qa_type").get<std::string>());
  auto conj = parse_conjunction(mem.at("conjunction").get<std::string>());
  if (!type || !conj) throw std::invalid_argument("trace has an unknown qa_type or conjunction");
  s.qa_type = *type;
  s.conjunction = *conj;
  if (trace.contains("qtype_label") && trace["qtype_label"].is_string()) s.label = trace["qtype_label"].get<std::string>();
  return s;
}

QTypeStats qtype_stats(const std::vector<TraceStat>& traces) {
  QTypeStats s;
  s.n = traces.size();
  for (auto t : kAllQATypes) s.qtype[std::string(to_string(t))] = 0.0;
  for (auto c : {TemporalConjunction::before, TemporalConjunction::after, TemporalConjunction::while_,
                 TemporalConjunction::none})
    s.conjunction[std::string(to_string(c))] = 0.0;
  if (traces.empty()) return s;
  std::map<std::string, std::size_t> type_counts;
  std::map<std::string, std::size_t> conj_counts;
  std::size_t with_conj = 0;
  std::size_t agree = 0;
  for (const auto& t : traces) {
    const std::string type(to_string(t.qa_type));
    ++type_counts[type];
    ++conj_counts[std::string(to_string(t.conjunction))];
    if (t.conjunction != TemporalConjunction::none) ++with_conj;
    if (t.label) {
      ++s.n_labeled;
      ++s.agreement[*t.label][type];
      if (*t.label == type) ++agree;
    }
  }
  const double n = static_cast<double>(traces.size());
  for (const auto& [k, c] : type_counts) s.qtype[k] = static_cast<double>(c) / n;
  for (const auto& [k, c] : conj_counts) s.conjunction[k] = static_cast<double>(c) / n;
  s.p_conjunction = static_cast<double>(with_conj) / n;
  if (s.n_labeled > 0) s.agreement_rate = static_cast<double>(agree) / static_cast<double>(s.n_labeled);
  return s;
}

json to_json(const QTypeStats& s) {
  return json{{"n", s.n},
              {"qtype", s.qtype},
              {"conjunction", s.conjunction},
              {"p_conjunction", s.p_conjunction},
              {"n_labeled", s.n_labeled},
              {"agreement", s.agreement},
              {"agreement_rate", s.agreement_rate}};
}

}  // namespace morevqa
