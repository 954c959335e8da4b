#include "morevqa/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace morevqa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": '" + value + "' is not a valid number");
  return out;
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

StageMask mask(const std::string& key, const std::string& value) {
  std::vector<bool> bits;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) bits.push_back(boolean(key, trim(part)));
  if (bits.size() != 3) throw ConfigError(key + ": expected three comma-separated flags");
  return {bits[0], bits[1], bits[2]};
}

std::string fmt(double d) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, r.ptr);
}

}  // namespace

void apply_setting(EvalConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const auto key = trim(key_in);
  const auto value = trim(value_in);
  auto& run = cfg.run;
  if (key == "n_context_frames") {
    run.n_context_frames = number<int>(key, value);
  } else if (key == "fps_caption") {
    run.fps_caption = number<double>(key, value);
    cfg.jcef.fps_caption = run.fps_caption;
  } else if (key == "decode_temperature") {
    run.decode_temperature = number<double>(key, value);
  } else if (key == "seed") {
    run.seed = number<std::uint64_t>(key, value);
  } else if (key == "trim_mode") {
    if (value == "keep") run.trim_mode = TrimMode::keep;
    else if (value == "remove") run.trim_mode = TrimMode::remove;
    else throw ConfigError(key + ": expected keep or remove");
  } else if (key == "grounding_to_reasoning") {
    run.grounding_to_reasoning = boolean(key, value);
  } else if (key == "score_threshold") {
    run.score_threshold = number<double>(key, value);
  } else if (key == "stage_mask") {
    run.stage_mask = mask(key, value);
  } else if (key == "frame_fraction") {
    cfg.jcef.frame_fraction = number<double>(key, value);
  } else if (key == "planner") {
    if (value == "rule_based") cfg.planner = Planner::rule_based();
    else if (value == "llm_backed") cfg.planner = Planner::llm_backed(cfg.planner.prompt_template_id.empty()
                                                                          ? "default"
                                                                          : cfg.planner.prompt_template_id);
    else throw ConfigError(key + ": expected rule_based or llm_backed");
  } else if (key == "prompt_template") {
    cfg.planner.prompt_template_id = value;
  } else if (key == "workers") {
    cfg.workers = number<int>(key, value);
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_config_text(EvalConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(cfg, t.substr(0, eq), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    cfg.run.validate();
    cfg.jcef.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

EvalConfig load_config(const std::filesystem::path& path, EvalConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str(), path.string());
  return base;
}

std::string render_config(const EvalConfig& cfg) {
  const auto& r = cfg.run;
  const auto& m = r.stage_mask;
  std::string out;
  out += "n_context_frames = " + std::to_string(r.n_context_frames) + "\n";
  out += "fps_caption = " + fmt(r.fps_caption) + "\n";
  out += "decode_temperature = " + fmt(r.decode_temperature) + "\n";
  out += "seed = " + std::to_string(r.seed) + "\n";
  out += std::string("trim_mode = ") + (r.trim_mode == TrimMode::keep ? "keep" : "remove") + "\n";
  out += std::string("grounding_to_reasoning = ") + (r.grounding_to_reasoning ? "true" : "false") + "\n";
  out += "score_threshold = " + fmt(r.score_threshold) + "\n";
  out += "stage_mask = " + std::to_string(int(m.event_parsing)) + "," + std::to_string(int(m.grounding)) + "," +
         std::to_string(int(m.reasoning)) + "\n";
  out += "frame_fraction = " + fmt(cfg.jcef.frame_fraction) + "\n";
  out += std::string("planner = ") + (cfg.planner.kind == Planner::Kind::rule_based ? "rule_based" : "llm_backed") +
         "\n";
  if (!cfg.planner.prompt_template_id.empty()) out += "prompt_template = " + cfg.planner.prompt_template_id + "\n";
  out += "workers = " + std::to_string(cfg.workers) + "\n";
  return out;
}

}  // namespace morevqa
