#include "morevqa/tools.hpp"

namespace morevqa {

namespace {

constexpr std::pair<ToolMethod, std::string_view> kMethodNames[] = {
    {ToolMethod::caption, "caption"},         {ToolMethod::vqa, "vqa"},
    {ToolMethod::localize, "localize"},       {ToolMethod::verify_action, "verify_action"},
    {ToolMethod::score, "score"},             {ToolMethod::complete, "complete"},
};

bool needs_frame(ToolMethod m) {
  return m == ToolMethod::caption || m == ToolMethod::vqa || m == ToolMethod::score ||
         m == ToolMethod::verify_action;
}

std::string require_string_arg(const json& args, const char* key) {
  if (!args.contains(key)) return std::string("missing args.") + key;
  if (!args[key].is_string()) return std::string("args.") + key + " must be a string";
  return {};
}

bool valid_box(const json& b) {
  if (!b.is_array() || b.size() != 4) return false;
  for (const auto& v : b)
    if (!v.is_number()) return false;
  const double x0 = b[0], y0 = b[1], x1 = b[2], y1 = b[3];
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return unit(x0) && unit(y0) && unit(x1) && unit(y1) && x0 < x1 && y0 < y1;
}

}  // namespace

std::string_view to_string(ToolMethod m) {
  for (const auto& [value, name] : kMethodNames)
    if (value == m) return name;
  return "?";
}

std::optional<ToolMethod> parse_tool_method(std::string_view s) {
  for (const auto& [value, name] : kMethodNames)
    if (name == s) return value;
  return std::nullopt;
}

ToolResponse ToolResponse::success(std::int64_t id, json result) {
  return ToolResponse{id, true, std::move(result), std::nullopt};
}

ToolResponse ToolResponse::failure(std::int64_t id, std::string_view prefix, const std::string& message) {
  return ToolResponse{id, false, nullptr, std::string(prefix) + message};
}

std::string validate_request(const ToolRequest& req) {
  if (!req.args.is_object()) return "args must be an object";
  if (req.method != ToolMethod::complete && (!req.video_id || req.video_id->empty()))
    return std::string(to_string(req.method)) + " requires video_id";
  if (needs_frame(req.method)) {
    if (!req.frame_id) return std::string(to_string(req.method)) + " requires frame_id";
    if (*req.frame_id < 0) return "frame_id must be non-negative";
  }
  switch (req.method) {
    case ToolMethod::caption: return {};
    case ToolMethod::vqa: {
      auto e = require_string_arg(req.args, "question");
      if (!e.empty()) return e;
      if (req.args.contains("prefix") && !req.args["prefix"].is_string()) return "args.prefix must be a string";
      return {};
    }
    case ToolMethod::localize: {
      auto e = require_string_arg(req.args, "phrase");
      if (!e.empty()) return e;
      if (!req.args.contains("frames") || !req.args["frames"].is_array()) return "localize requires args.frames list";
      for (const auto& f : req.args["frames"])
        if (!f.is_number_integer() || f.get<int>() < 0) return "args.frames must hold non-negative integers";
      return {};
    }
    case ToolMethod::verify_action: return require_string_arg(req.args, "action");
    case ToolMethod::score: return require_string_arg(req.args, "text");
    case ToolMethod::complete: {
      auto e = require_string_arg(req.args, "prompt");
      if (!e.empty()) return e;
      if (req.args["prompt"].get<std::string>().empty()) return "args.prompt must not be empty";
      return {};
    }
  }
  return "unknown method";
}

std::string validate_response(ToolMethod method, const ToolResponse& resp) {
  if (!resp.ok) {
    if (!resp.error || resp.error->empty()) return "failed response without error text";
    return {};
  }
  if (resp.error) return "successful response carries an error";
  const json& r = resp.result;
  switch (method) {
    case ToolMethod::caption:
    case ToolMethod::vqa:
    case ToolMethod::complete:
      return r.is_string() ? "" : "result must be text";
    case ToolMethod::score:
      if (!r.is_number()) return "score result must be a number";
      if (r.get<double>() < 0.0 || r.get<double>() > 1.0) return "score result must lie in [0, 1]";
      return {};
    case ToolMethod::verify_action:
      return r.is_boolean() ? "" : "verify_action result must be a boolean";
    case ToolMethod::localize:
      if (!r.is_array()) return "localize result must be a list";
      for (const auto& item : r) {
        if (!item.is_object() || !item.contains("frame_id") || !item["frame_id"].is_number_integer())
          return "localize entries need an integer frame_id";
        if (!item.contains("box") || !valid_box(item["box"])) return "localize entries need a valid box";
      }
      return {};
  }
  return "unknown method";
}

json to_wire(const ToolRequest& req) {
  return json{{"id", req.id},
              {"method", to_string(req.method)},
              {"video_id", req.video_id ? json(*req.video_id) : json(nullptr)},
              {"frame_id", req.frame_id ? json(*req.frame_id) : json(nullptr)},
              {"args", req.args}};
}

json to_wire(const ToolResponse& resp) {
  return json{{"id", resp.id},
              {"ok", resp.ok},
              {"result", resp.result},
              {"error", resp.error ? json(*resp.error) : json(nullptr)}};
}

ToolRequest request_from_wire(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("request must be a JSON object");
  if (!j.contains("id") || !j["id"].is_number_integer()) throw std::invalid_argument("request needs an integer id");
  if (!j.contains("method") || !j["method"].is_string()) throw std::invalid_argument("request needs a method");
  ToolRequest req;
  req.id = j["id"].get<std::int64_t>();
  auto m = parse_tool_method(j["method"].get<std::string>());
  if (!m) throw std::invalid_argument("unknown method '" + j["method"].get<std::string>() + "'");
  req.method = *m;
  if (j.contains("video_id") && !j["video_id"].is_null()) {
    if (!j["video_id"].is_string()) throw std::invalid_argument("video_id must be a string or null");
    req.video_id = j["video_id"].get<std::string>();
  }
  if (j.contains("frame_id") && !j["frame_id"].is_null()) {
    if (!j["frame_id"].is_number_integer()) throw std::invalid_argument("frame_id must be an integer or null");
    req.frame_id = j["frame_id"].get<int>();
  }
  if (!j.contains("args") || !j["args"].is_object()) throw std::invalid_argument("request needs an args object");
  req.args = j["args"];
  return req;
}

ToolResponse response_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean())
    throw std::invalid_argument("response needs a boolean ok field");
  ToolResponse resp;
  resp.id = j.contains("id") && j["id"].is_number_integer() ? j["id"].get<std::int64_t>() : -1;
  resp.ok = j["ok"].get<bool>();
  resp.result = j.contains("result") ? j["result"] : json(nullptr);
  if (j.contains("error") && !j["error"].is_null()) resp.error = j["error"].get<std::string>();
  return resp;
}

std::string request_key(const ToolRequest& req) {
  json k = {{"method", to_string(req.method)},
            {"video_id", req.video_id ? json(*req.video_id) : json(nullptr)},
            {"frame_id", req.frame_id ? json(*req.frame_id) : json(nullptr)},
            {"args", req.args}};
  return k.dump();
}

ToolSession::ToolSession(std::shared_ptr<ToolBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) throw std::invalid_argument("tool session needs a backend");
}

ToolResponse ToolSession::dispatch(ToolMethod method, std::optional<std::string> video_id,
                                   std::optional<int> frame_id, json args) {
  ToolRequest req{next_id_.fetch_add(1), method, std::move(video_id), frame_id, std::move(args)};
  ToolResponse resp;
  if (auto why = validate_request(req); !why.empty()) {
    resp = ToolResponse::failure(req.id, kInvalidPrefix, why);
  } else {
    resp = backend_->handle(req);
    if (resp.id != req.id) {
      resp = ToolResponse::failure(req.id, kTransportPrefix,
                                   "response id " + std::to_string(resp.id) + " does not match request");
    } else if (auto bad = validate_response(method, resp); !bad.empty()) {
      resp = ToolResponse::failure(req.id, kBackendPrefix, "malformed response: " + bad);
    }
  }
  count_.fetch_add(1);
  if (keep_trace_) {
    std::lock_guard lock(trace_mu_);
    trace_.push_back({req, resp});
  }
  return resp;
}

std::vector<Exchange> ToolSession::trace() const {
  std::lock_guard lock(trace_mu_);
  return trace_;
}

std::size_t ToolSession::dispatch_count() const { return count_.load(); }

json ToolSession::checked(ToolMethod method, std::optional<std::string> video_id, std::optional<int> frame_id,
                          json args) {
  auto resp = dispatch(method, std::move(video_id), frame_id, std::move(args));
  if (!resp.ok) throw ToolError(std::string(to_string(method)) + ": " + resp.error.value_or("unknown error"));
  return std::move(resp.result);
}

std::string ToolSession::caption(const std::string& video_id, int frame) {
  return checked(ToolMethod::caption, video_id, frame, json::object()).get<std::string>();
}

std::string ToolSession::vqa(const std::string& video_id, int frame, const std::string& question, bool ocr) {
  json args{{"question", question}};
  if (ocr) args["prefix"] = "ocr";
  return checked(ToolMethod::vqa, video_id, frame, std::move(args)).get<std::string>();
}

std::vector<Localization> ToolSession::localize(const std::string& video_id, const std::string& phrase,
                                                const std::vector<int>& frames) {
  json r = checked(ToolMethod::localize, video_id, std::nullopt,
                   json{{"phrase", phrase}, {"frames", frames}, {"stage", "grounding"}});
  std::vector<Localization> out;
  for (const auto& item : r) out.push_back({item["frame_id"].get<int>(), item["box"]});
  return out;
}

bool ToolSession::verify_action(const std::string& video_id, int frame, const std::string& action) {
  return checked(ToolMethod::verify_action, video_id, frame, json{{"action", action}}).get<bool>();
}

double ToolSession::score(const std::string& video_id, int frame, const std::string& text) {
  return checked(ToolMethod::score, video_id, frame, json{{"text", text}}).get<double>();
}

std::string ToolSession::complete(const std::string& prompt, const std::optional<std::string>& video_id) {
  return checked(ToolMethod::complete, video_id, std::nullopt, json{{"prompt", prompt}}).get<std::string>();
}

}  // namespace morevqa
