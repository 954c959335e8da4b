#include "morevqa/replay.hpp"

namespace morevqa {

ReplayMissError::ReplayMissError(const ToolRequest& req)
    : std::runtime_error("replay miss: no recorded response for " + request_key(req)), key_(request_key(req)) {}

RecordingBackend::RecordingBackend(std::shared_ptr<ToolBackend> inner, const std::filesystem::path& path)
    : inner_(std::move(inner)), out_(path, std::ios::trunc) {
  if (!inner_) throw std::invalid_argument("recording needs a live backend");
  if (!out_) throw std::runtime_error("cannot open recording file " + path.string());
}

ToolResponse RecordingBackend::handle(const ToolRequest& req) {
  auto resp = inner_->handle(req);
  std::lock_guard lock(mu_);
  out_ << to_wire(req).dump() << '\n' << to_wire(resp).dump() << '\n';
  out_.flush();
  ++count_;
  return resp;
}

std::size_t RecordingBackend::recorded() const {
  std::lock_guard lock(mu_);
  return count_;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open recording " + path.string());
  std::string req_line;
  std::string resp_line;
  std::size_t line_no = 0;
  while (std::getline(in, req_line)) {
    ++line_no;
    if (req_line.empty()) continue;
    if (!std::getline(in, resp_line))
      throw std::runtime_error("recording " + path.string() + ": request on line " + std::to_string(line_no) +
                               " has no response");
    ++line_no;
    auto req = request_from_wire(json::parse(req_line));
    auto resp = response_from_wire(json::parse(resp_line));
    responses_.try_emplace(request_key(req), std::move(resp));
  }
}

ToolResponse ReplayBackend::handle(const ToolRequest& req) {
  auto it = responses_.find(request_key(req));
  if (it == responses_.end()) throw ReplayMissError(req);
  ToolResponse resp = it->second;
  resp.id = req.id;
  return resp;
}

std::shared_ptr<ToolBackend> record_session(std::shared_ptr<ToolBackend> live, const std::filesystem::path& path) {
  return std::make_shared<RecordingBackend>(std::move(live), path);
}

std::shared_ptr<ToolBackend> replay_session(const std::filesystem::path& path) {
  return std::make_shared<ReplayBackend>(path);
}

}  // namespace morevqa
