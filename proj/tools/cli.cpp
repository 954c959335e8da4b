#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "morevqa/config.hpp"
#include "morevqa/eval.hpp"
#include "morevqa/fixture.hpp"
#include "morevqa/mock_backend.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/replay.hpp"
#include "morevqa/wire.hpp"

namespace morevqa::cli {

namespace {

struct Backend {
  std::shared_ptr<ToolBackend> backend;
  std::shared_ptr<const FixtureCorpus> corpus;
};

class FatalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::shared_ptr<const FixtureCorpus> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw FatalError("fixture directory '" + dir + "' does not exist");
  auto corpus = std::make_shared<FixtureCorpus>(FixtureCorpus::load_dir(dir));
  if (corpus->size() == 0) throw FatalError("no fixtures in '" + dir + "'");
  return corpus;
}

Backend open_backend(const std::string& spec, const std::string& fixtures, const std::string& record) {
  Backend b;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw FatalError("backend must be mock:DIR, remote:ADDR or replay:FILE");
  const auto kind = spec.substr(0, colon);
  const auto arg = spec.substr(colon + 1);
  if (kind == "mock") {
    b.corpus = load_corpus(arg);
    b.backend = std::make_shared<MockBackend>(b.corpus);
  } else if (kind == "remote") {
    auto remote = std::make_shared<RemoteBackend>(Endpoint::parse(arg));
    try {
      remote->connect();
    } catch (const std::exception& e) {
      throw FatalError(std::string("backend unreachable: ") + e.what());
    }
    b.backend = remote;
  } else if (kind == "replay") {
    if (!fs::is_regular_file(arg)) throw FatalError("recording '" + arg + "' does not exist");
    b.backend = replay_session(arg);
  } else {
    throw FatalError("unknown backend kind '" + kind + "'");
  }
  if (!fixtures.empty()) b.corpus = load_corpus(fixtures);
  if (!record.empty()) b.backend = record_session(b.backend, record);
  return b;
}

EvalConfig make_config(const std::string& path, const std::vector<std::string>& overrides, int workers) {
  EvalConfig cfg;
  if (!path.empty()) cfg = load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (workers > 0) cfg.workers = workers;
  cfg.run.validate();
  cfg.jcef.validate();
  return cfg;
}

std::vector<SystemName> parse_systems(const std::string& spec) {
  if (spec == "all") return {std::begin(kAllSystems), std::end(kAllSystems)};
  std::vector<SystemName> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto s = parse_system_name(part);
    if (!s) throw FatalError("unknown system '" + part + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw FatalError("no system given");
  return out;
}

std::string window_text(const FrameWindow& w) {
  if (w.empty()) return "[]";
  if (w.back() - w.front() + 1 == static_cast<int>(w.size()) && w.size() > 2)
    return "[" + std::to_string(w.front()) + ".." + std::to_string(w.back()) + "]";
  return json(w).dump();
}

std::string args_text(const json& args) {
  json shown = args;
  if (shown.contains("frames") && shown["frames"].is_array()) {
    try {
      shown["frames"] = window_text(FrameWindow(shown["frames"].get<std::vector<int>>()));
    } catch (const std::exception&) {
    }
  }
  if (shown.contains("prompt")) {
    const auto p = shown["prompt"].get<std::string>();
    shown["prompt"] = std::string(prompt::header_line(p)) + " ...";
  }
  return shown.dump();
}

}  // namespace

std::string render_trace_text(const SystemOutput& out, const std::vector<std::string>& candidates) {
  std::ostringstream os;
  for (const auto& r : out.stage_records) {
    os << "[" << to_string(r.stage_name) << "]\n";
    if (!r.emitted_program.empty()) {
      os << "  program:\n";
      std::istringstream lines(r.emitted_program);
      std::string line;
      while (std::getline(lines, line))
        if (!line.empty()) os << "    " << line << "\n";
    }
    if (!r.tool_calls.empty()) {
      os << "  calls:\n";
      for (const auto& c : r.tool_calls) {
        std::string result = c.result.dump();
        if (result.size() > 120) result = result.substr(0, 117) + "...";
        os << "    " << c.method << " " << args_text(c.args) << " -> " << result << "\n";
      }
    }
    const auto& m = r.memory_after;
    if (r.stage_name != StageName::prediction) {
      os << "  memory: frames=" << window_text(m.frame_ids) << " qa_type=" << to_string(m.qa_type)
         << " conjunction=" << to_string(m.conjunction) << " ocr=" << (m.require_ocr ? "true" : "false")
         << " events=" << json(m.event_queue).dump() << "\n";
      if (r.stage_name == StageName::event_parsing && m.question != r.memory_before.question)
        os << "  question: " << m.question << "\n";
      if (m.grounded_window && r.stage_name == StageName::grounding)
        os << "  grounded_window: " << window_text(*m.grounded_window) << "\n";
    }
  }
  if (out.failure) os << "failure: " << out.failure->kind << " in " << out.failure->stage << ": " << out.failure->message << "\n";
  if (out.grounded_window_s)
    os << "grounded_window_s: [" << out.grounded_window_s->start << ", " << out.grounded_window_s->end << ")\n";
  if (out.mc_index && *out.mc_index < static_cast<int>(candidates.size()))
    os << "answer: " << *out.mc_index << ": " << candidates[*out.mc_index] << "\n";
  else
    os << "answer: " << out.answer << "\n";
  return os.str();
}

namespace {

struct Common {
  std::string backend;
  std::string fixtures;
  std::string config;
  std::vector<std::string> overrides;
  std::string record;
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& c, bool backend_required = true) {
  auto* b = cmd->add_option("--backend", c.backend, "mock:DIR, remote:ADDR or replay:FILE");
  if (backend_required) b->required();
  cmd->add_option("--fixtures", c.fixtures, "fixture directory used for video metadata");
  cmd->add_option("--config", c.config, "key=value config file");
  cmd->add_option("--set", c.overrides, "config override key=value (repeatable)");
  cmd->add_option("--record", c.record, "append every backend exchange to this recording");
}

VideoResolver resolver(const Backend& b) { return resolver_for(b.corpus); }

int finish_eval(const std::vector<EvalRun>& runs, std::ostream& out) {
  bool failures = false;
  for (const auto& r : runs) {
    out << to_string(r.summary.system) << ": accuracy=" << r.summary.accuracy << " items=" << r.summary.n_items
        << " failures=" << r.summary.n_failures << "\n";
    failures = failures || r.summary.n_failures > 0;
  }
  return failures ? kItemFailures : kOk;
}

int do_eval(const std::string& dataset, const std::string& systems_spec, const Common& c, const std::string& out_dir,
            bool lenient, std::ostream& out, std::ostream& err) {
  std::vector<std::string> skipped;
  std::vector<EvalItem> items;
  try {
    items = load_dataset(dataset, lenient, &skipped);
  } catch (const std::exception& e) {
    throw FatalError("dataset " + dataset + ": " + e.what());
  }
  for (const auto& s : skipped) err << "skipped " << s << "\n";
  const auto systems = parse_systems(systems_spec);
  const auto cfg = make_config(c.config, c.overrides, c.workers);
  const auto backend = open_backend(c.backend, c.fixtures, c.record);
  ToolSession session(backend.backend);
  session.set_keep_trace(false);
  std::vector<EvalRun> runs;
  json rows = json::array();
  for (auto system : systems) {
    auto run = run_eval(items, system, cfg, resolver(backend), session);
    write_eval(run, systems.size() == 1 ? fs::path(out_dir) : fs::path(out_dir) / std::string(to_string(system)));
    rows.push_back(to_json(run.summary));
    runs.push_back(std::move(run));
  }
  if (systems.size() > 1) {
    std::ofstream f(fs::path(out_dir) / "summaries.json");
    f << rows.dump(2) << "\n";
  }
  return finish_eval(runs, out);
}

void block_signals(sigset_t& set) {
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-stage modular video question answering"};
  app.name("morevqa");
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate one or more systems over a dataset");
  std::string dataset, system = "morevqa", out_dir;
  bool lenient = false;
  Common ec;
  eval->add_option("--dataset", dataset, "JSONL dataset")->required();
  eval->add_option("--system", system, "morevqa, jcef, llm_only, single_stage, a comma list or all");
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--workers", ec.workers, "concurrent items");
  eval->add_flag("--lenient", lenient, "skip malformed dataset lines");
  add_common(eval, ec);

  // run
  auto* runc = app.add_subcommand("run", "answer one question and print the stage trace");
  std::string video, question, trace_out, run_system = "morevqa", program_path;
  std::vector<std::string> candidates;
  Common rc;
  runc->add_option("--video", video, "video id")->required();
  runc->add_option("--question", question, "question text")->required();
  runc->add_option("--candidates", candidates, "answer candidates");
  runc->add_option("--system", run_system, "system to run");
  runc->add_option("--program", program_path, "extended-mode program for single_stage");
  runc->add_option("--trace", trace_out, "write the JSON trace here");
  add_common(runc, rc);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the stage ablation grid");
  std::string ab_dataset, ab_out;
  Common ac;
  ablate->add_option("--dataset", ab_dataset, "JSONL dataset")->required();
  ablate->add_option("--out", ab_out, "CSV output file");
  ablate->add_option("--workers", ac.workers, "concurrent items");
  add_common(ablate, ac);

  // stats
  auto* stats = app.add_subcommand("stats", "question-type statistics over eval traces");
  std::string traces_dir, stats_out;
  stats->add_option("--traces", traces_dir, "traces directory written by eval")->required();
  stats->add_option("--out", stats_out, "JSON output file");

  // replay
  auto* replay = app.add_subcommand("replay", "re-run an eval against a recording");
  std::string rp_recording, rp_dataset, rp_system = "morevqa", rp_out;
  Common pc;
  replay->add_option("--recording", rp_recording, "recording file")->required();
  replay->add_option("--dataset", rp_dataset, "JSONL dataset")->required();
  replay->add_option("--system", rp_system, "system name");
  replay->add_option("--out", rp_out, "output directory")->required();
  replay->add_option("--fixtures", pc.fixtures, "fixture directory used for video metadata");
  replay->add_option("--config", pc.config, "key=value config file");
  replay->add_option("--set", pc.overrides, "config override key=value (repeatable)");
  replay->add_option("--workers", pc.workers, "concurrent items");

  // serve-mock
  auto* serve = app.add_subcommand("serve-mock", "serve the mock backend over the wire protocol");
  std::string serve_fixtures, listen = "127.0.0.1:7777";
  serve->add_option("--fixtures", serve_fixtures, "fixture directory")->required();
  serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");

  std::vector<std::string> argv_store{"morevqa"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }

  try {
    if (eval->parsed()) return do_eval(dataset, system, ec, out_dir, lenient, out, err);

    if (replay->parsed()) {
      pc.backend = "replay:" + rp_recording;
      return do_eval(rp_dataset, rp_system, pc, rp_out, false, out, err);
    }

    if (runc->parsed()) {
      const auto sys = parse_systems(run_system);
      if (sys.size() != 1) throw FatalError("run takes exactly one system");
      const auto cfg = make_config(rc.config, rc.overrides, 1);
      const auto backend = open_backend(rc.backend, rc.fixtures, rc.record);
      auto meta = resolver(backend)(video);
      if (!meta) throw FatalError("unknown video '" + video + "'");
      EvalItem item;
      item.item_id = "run";
      item.video_id = video;
      item.qa.question = question;
      item.qa.candidates = candidates;
      if (!program_path.empty()) item.program_path = program_path;
      ToolSession session(backend.backend);
      const auto result = answer_item(item, *meta, sys[0], cfg, session);
      out << render_trace_text(result, candidates);
      if (!trace_out.empty()) {
        std::ofstream f(trace_out);
        f << item_trace(item, 0, result).dump(2) << "\n";
      }
      return result.failure ? kItemFailures : kOk;
    }

    if (ablate->parsed()) {
      auto items = load_dataset(ab_dataset);
      const auto cfg = make_config(ac.config, ac.overrides, ac.workers);
      const auto backend = open_backend(ac.backend, ac.fixtures, ac.record);
      ToolSession session(backend.backend);
      session.set_keep_trace(false);
      const auto csv = ablation_csv(run_ablation(items, cfg, resolver(backend), session));
      out << csv;
      if (!ab_out.empty()) {
        if (fs::path(ab_out).has_parent_path()) fs::create_directories(fs::path(ab_out).parent_path());
        std::ofstream f(ab_out);
        f << csv;
      }
      return kOk;
    }

    if (stats->parsed()) {
      if (!fs::is_directory(traces_dir)) throw FatalError("traces directory '" + traces_dir + "' does not exist");
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(traces_dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      std::vector<TraceStat> traces;
      for (const auto& f : files) {
        std::ifstream in(f);
        if (auto s = trace_stat(json::parse(in))) traces.push_back(*s);
      }
      const auto text = to_json(qtype_stats(traces)).dump(2) + "\n";
      out << text;
      if (!stats_out.empty()) std::ofstream(stats_out) << text;
      return kOk;
    }

    if (serve->parsed()) {
      sigset_t set;
      block_signals(set);
      auto backend = std::make_shared<MockBackend>(load_corpus(serve_fixtures));
      WireServer server(backend, Endpoint::parse(listen));
      server.start();
      out << "listening on " << Endpoint{Endpoint::parse(listen).host, server.port()}.str() << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
      return kOk;
    }
  } catch (const FatalError& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const ReplayMissError& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}

}  // namespace morevqa::cli
