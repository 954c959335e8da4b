#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morevqa/types.hpp"

namespace morevqa {

enum class ToolMethod { caption, vqa, localize, verify_action, score, complete };

std::string_view to_string(ToolMethod m);
std::optional<ToolMethod> parse_tool_method(std::string_view s);

inline constexpr ToolMethod kAllToolMethods[] = {ToolMethod::caption, ToolMethod::vqa,
                                                 ToolMethod::localize, ToolMethod::verify_action,
                                                 ToolMethod::score, ToolMethod::complete};

// Error text prefixes that keep failure sources distinguishable.
inline constexpr std::string_view kTransportPrefix = "transport: ";
inline constexpr std::string_view kBackendPrefix = "backend: ";
inline constexpr std::string_view kInvalidPrefix = "invalid: ";

/// One call against the module library.
///
/// Method-specific arguments:
///   caption        frame_id
///   vqa            frame_id, args.question, optional args.prefix ("ocr")
///   localize       args.phrase, args.frames (list of frame ids), optional args.stage
///   verify_action  frame_id, args.action
///   score          frame_id, args.text
///   complete       args.prompt
///
/// Every method except complete also requires video_id.
struct ToolRequest {
  std::int64_t id = 0;
  ToolMethod method = ToolMethod::complete;
  std::optional<std::string> video_id;
  std::optional<int> frame_id;
  json args = json::object();

  bool operator==(const ToolRequest&) const = default;
};

struct ToolResponse {
  std::int64_t id = 0;
  bool ok = false;
  json result;
  std::optional<std::string> error;

  static ToolResponse success(std::int64_t id, json result);
  static ToolResponse failure(std::int64_t id, std::string_view prefix, const std::string& message);

  bool operator==(const ToolResponse&) const = default;
};

/// Empty string when the request is well-formed, otherwise the reason.
std::string validate_request(const ToolRequest& req);
/// Empty string when the response carries a well-shaped result for `method`.
std::string validate_response(ToolMethod method, const ToolResponse& resp);

// Wire format: {"id","method","video_id","frame_id","args"} and {"id","ok","result","error"}.
json to_wire(const ToolRequest& req);
json to_wire(const ToolResponse& resp);
/// Throws std::invalid_argument with a human-readable reason.
ToolRequest request_from_wire(const json& j);
ToolResponse response_from_wire(const json& j);

/// Key identifying a request independent of its id: method, video, frame and canonical args.
std::string request_key(const ToolRequest& req);

/// Raised by typed helpers when a call returns ok == false.
class ToolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ToolBackend {
 public:
  virtual ~ToolBackend() = default;
  /// Must be safe for concurrent callers.
  virtual ToolResponse handle(const ToolRequest& req) = 0;
};

struct Exchange {
  ToolRequest request;
  ToolResponse response;
};

struct Localization {
  int frame_id = 0;
  json box;
};

/// Dispatch surface over one backend. Assigns request ids, validates both
/// directions and keeps the ordered session trace. Thread-safe.
class ToolSession {
 public:
  explicit ToolSession(std::shared_ptr<ToolBackend> backend);

  ToolResponse dispatch(ToolMethod method, std::optional<std::string> video_id, std::optional<int> frame_id,
                        json args);

  std::vector<Exchange> trace() const;
  std::size_t dispatch_count() const;
  void set_keep_trace(bool keep) { keep_trace_ = keep; }

  // Typed helpers; throw ToolError when the backend reports a failure.
  std::string caption(const std::string& video_id, int frame);
  std::string vqa(const std::string& video_id, int frame, const std::string& question, bool ocr);
  std::vector<Localization> localize(const std::string& video_id, const std::string& phrase,
                                     const std::vector<int>& frames);
  bool verify_action(const std::string& video_id, int frame, const std::string& action);
  double score(const std::string& video_id, int frame, const std::string& text);
  std::string complete(const std::string& prompt, const std::optional<std::string>& video_id = std::nullopt);

 private:
  json checked(ToolMethod method, std::optional<std::string> video_id, std::optional<int> frame_id, json args);

  std::shared_ptr<ToolBackend> backend_;
  std::atomic<std::int64_t> next_id_{1};
  std::atomic<std::size_t> count_{0};
  mutable std::mutex trace_mu_;
  std::vector<Exchange> trace_;
  bool keep_trace_ = true;
};

}  // namespace morevqa
