#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "morevqa/tools.hpp"
#include "morevqa/types.hpp"

namespace morevqa {

/// Typed tool calls that append a ToolCallRecord for each call, failed ones included.
class LoggedTools {
 public:
  LoggedTools(ToolSession& session, std::string video_id, std::vector<ToolCallRecord>& log)
      : session_(session), video_(std::move(video_id)), log_(log) {}

  std::string caption(int frame) {
    return logged("caption", {{"frame_id", frame}}, [&] { return json(session_.caption(video_, frame)); });
  }
  std::string vqa(int frame, const std::string& question, bool ocr) {
    json args{{"frame_id", frame}, {"question", question}};
    if (ocr) args["prefix"] = "ocr";
    return logged("vqa", std::move(args), [&] { return json(session_.vqa(video_, frame, question, ocr)); });
  }
  std::vector<int> localize(const std::string& phrase, const FrameWindow& frames) {
    json r = logged_json("localize", {{"phrase", phrase}, {"frames", frames}}, [&] {
      json out = json::array();
      for (const auto& l : session_.localize(video_, phrase, frames.ids()))
        out.push_back({{"frame_id", l.frame_id}, {"box", l.box}});
      return out;
    });
    std::set<int> ids;
    for (const auto& item : r) ids.insert(item["frame_id"].get<int>());
    return {ids.begin(), ids.end()};
  }
  bool verify_action(int frame, const std::string& action) {
    return logged_json("verify_action", {{"frame_id", frame}, {"action", action}},
                       [&] { return json(session_.verify_action(video_, frame, action)); })
        .get<bool>();
  }
  double score(int frame, const std::string& text) {
    return logged_json("score", {{"frame_id", frame}, {"text", text}},
                       [&] { return json(session_.score(video_, frame, text)); })
        .get<double>();
  }
  std::string complete(const std::string& prompt_text, bool with_video) {
    return logged("complete", {{"prompt", prompt_text}}, [&] {
      return json(session_.complete(prompt_text, with_video ? std::optional<std::string>(video_) : std::nullopt));
    });
  }

 private:
  template <typename F>
  std::string logged(const char* method, json args, F&& call) {
    return logged_json(method, std::move(args), std::forward<F>(call)).template get<std::string>();
  }

  template <typename F>
  json logged_json(const char* method, json args, F&& call) {
    try {
      json r = call();
      log_.push_back({method, std::move(args), r});
      return r;
    } catch (const ToolError& e) {
      log_.push_back({method, std::move(args), json{{"error", e.what()}}});
      throw;
    }
  }

  ToolSession& session_;
  std::string video_;
  std::vector<ToolCallRecord>& log_;
};

}  // namespace morevqa
