#include "morevqa/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace morevqa {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Reads one '\n'-terminated line into `line`; false on EOF or error.
bool read_line(int fd, std::string& buffer, std::string& line) {
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

Endpoint Endpoint::parse(std::string_view addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("address must be host:port");
  Endpoint e;
  if (colon > 0) e.host = std::string(addr.substr(0, colon));
  const auto port = addr.substr(colon + 1);
  try {
    std::size_t used = 0;
    e.port = std::stoi(std::string(port), &used);
    if (used != port.size() || e.port < 0 || e.port > 65535) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid port in address '" + std::string(addr) + "'");
  }
  return e;
}

std::string handle_wire_line(ToolBackend& backend, std::string_view line) {
  json parsed;
  try {
    parsed = json::parse(line);
  } catch (const json::parse_error& e) {
    json resp = to_wire(ToolResponse::failure(0, kInvalidPrefix, std::string("malformed JSON: ") + e.what()));
    resp["id"] = nullptr;
    return resp.dump();
  }
  const json id = parsed.is_object() && parsed.contains("id") && parsed["id"].is_number_integer() ? parsed["id"]
                                                                                                    : json(nullptr);
  ToolRequest req;
  try {
    req = request_from_wire(parsed);
  } catch (const std::exception& e) {
    json resp = to_wire(ToolResponse::failure(0, kInvalidPrefix, e.what()));
    resp["id"] = id;
    return resp.dump();
  }
  if (auto why = validate_request(req); !why.empty())
    return to_wire(ToolResponse::failure(req.id, kInvalidPrefix, why)).dump();
  try {
    return to_wire(backend.handle(req)).dump();
  } catch (const std::exception& e) {
    return to_wire(ToolResponse::failure(req.id, kBackendPrefix, e.what())).dump();
  }
}

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteBackend::RemoteBackend(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

RemoteBackend::~RemoteBackend() {
  std::lock_guard lock(mu_);
  close_locked();
}

void RemoteBackend::close_locked() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void RemoteBackend::connect_locked() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto port = std::to_string(endpoint_.port);
  if (int rc = ::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve " + endpoint_.str() + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw std::runtime_error(errno_text(("cannot connect to " + endpoint_.str()).c_str()));
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout_.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout_.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
}

std::string RemoteBackend::exchange_locked(const std::string& line) {
  if (fd_ < 0) connect_locked();
  if (!send_all(fd_, line + "\n")) {
    close_locked();
    throw std::runtime_error(errno_text("send failed"));
  }
  std::string reply;
  if (!read_line(fd_, buffer_, reply)) {
    const bool timed_out = errno == EAGAIN || errno == EWOULDBLOCK;
    close_locked();
    throw std::runtime_error(timed_out ? "timed out waiting for response" : "connection closed by server");
  }
  return reply;
}

void RemoteBackend::connect() {
  std::lock_guard lock(mu_);
  if (fd_ < 0) connect_locked();
}

std::string RemoteBackend::exchange_line(const std::string& line) {
  std::lock_guard lock(mu_);
  return exchange_locked(line);
}

ToolResponse RemoteBackend::handle(const ToolRequest& req) {
  std::string reply;
  try {
    std::lock_guard lock(mu_);
    reply = exchange_locked(to_wire(req).dump());
  } catch (const std::exception& e) {
    return ToolResponse::failure(req.id, kTransportPrefix, e.what());
  }
  try {
    return response_from_wire(json::parse(reply));
  } catch (const std::exception& e) {
    return ToolResponse::failure(req.id, kTransportPrefix, std::string("unreadable response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// WireServer

WireServer::WireServer(std::shared_ptr<ToolBackend> backend, Endpoint listen)
    : backend_(std::move(backend)), listen_(std::move(listen)) {}

WireServer::~WireServer() { stop(); }

void WireServer::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port = std::to_string(listen_.port);
  const char* host = listen_.host.empty() ? nullptr : listen_.host.c_str();
  if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve listen address " + listen_.str() + ": " + ::gai_strerror(rc));
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw std::runtime_error(errno_text("socket"));
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    const auto msg = errno_text(("cannot listen on " + listen_.str()).c_str());
    ::freeaddrinfo(res);
    ::close(fd);
    throw std::runtime_error(msg);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  listen_fd_ = fd;
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void WireServer::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) continue;
    int one = 1;
    ::setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(conn_mu_);
    if (!running_) {
      ::close(conn);
      break;
    }
    conn_fds_.push_back(conn);
    conn_threads_.emplace_back([this, conn] { serve_connection(conn); });
  }
}

void WireServer::serve_connection(int fd) {
  std::string buffer;
  std::string line;
  while (read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    if (!send_all(fd, handle_wire_line(*backend_, line) + "\n")) break;
  }
  ::shutdown(fd, SHUT_RDWR);
}

void WireServer::wait() {
  while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void WireServer::stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads) t.join();
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : conn_fds_) ::close(fd);
    conn_fds_.clear();
  }
  ::close(listen_fd_);
  listen_fd_ = -1;
}

}  // namespace morevqa
