#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "morevqa/tools.hpp"

namespace morevqa {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;

  /// Parses "host:port" (or ":port").
  static Endpoint parse(std::string_view addr);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Answers one newline-delimited request line. Malformed lines produce an
/// `invalid:` error response instead of throwing.
std::string handle_wire_line(ToolBackend& backend, std::string_view line);

/// Client for the newline-delimited JSON protocol. One connection, calls
/// serialized; socket failures and timeouts become `transport:` errors.
class RemoteBackend : public ToolBackend {
 public:
  explicit RemoteBackend(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~RemoteBackend() override;
  RemoteBackend(const RemoteBackend&) = delete;
  RemoteBackend& operator=(const RemoteBackend&) = delete;

  ToolResponse handle(const ToolRequest& req) override;
  /// Sends a raw line and returns the raw reply line.
  std::string exchange_line(const std::string& line);
  /// Opens the connection now; throws std::runtime_error when unreachable.
  void connect();

 private:
  void connect_locked();
  void close_locked();
  std::string exchange_locked(const std::string& line);

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  int fd_ = -1;
  std::string buffer_;
};

/// Serves a backend over TCP; one thread per connection, requests on a
/// connection handled in arrival order.
class WireServer {
 public:
  WireServer(std::shared_ptr<ToolBackend> backend, Endpoint listen);
  ~WireServer();
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  /// Binds and starts accepting in a background thread.
  void start();
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();
  /// Bound port (resolves port 0 after start()).
  int port() const { return port_; }

 private:
  void accept_loop();
  void serve_connection(int fd);

  std::shared_ptr<ToolBackend> backend_;
  Endpoint listen_;
  int port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<int> conn_fds_;
  std::vector<std::thread> conn_threads_;
};

}  // namespace morevqa
