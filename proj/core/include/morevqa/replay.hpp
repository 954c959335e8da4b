#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "morevqa/tools.hpp"

namespace morevqa {

/// A request absent from the recording. Deliberately not a tool failure:
/// a replay that diverges from its recording is a hard error.
class ReplayMissError : public std::runtime_error {
 public:
  explicit ReplayMissError(const ToolRequest& req);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Forwards to a live backend and appends every (request, response) pair to
/// a JSON-lines file, request line first.
class RecordingBackend : public ToolBackend {
 public:
  RecordingBackend(std::shared_ptr<ToolBackend> inner, const std::filesystem::path& path);
  ToolResponse handle(const ToolRequest& req) override;
  std::size_t recorded() const;

 private:
  std::shared_ptr<ToolBackend> inner_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

/// Answers requests from a recording, matched on method, video, frame and
/// canonical args. Order-independent.
class ReplayBackend : public ToolBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);
  ToolResponse handle(const ToolRequest& req) override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, ToolResponse> responses_;
};

std::shared_ptr<ToolBackend> record_session(std::shared_ptr<ToolBackend> live, const std::filesystem::path& path);
std::shared_ptr<ToolBackend> replay_session(const std::filesystem::path& path);

}  // namespace morevqa
