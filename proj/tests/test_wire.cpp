#include <doctest.h>

#include <thread>

#include "morevqa/wire.hpp"
#include "support.hpp"

using namespace morevqa;

namespace {

struct Served {
  std::shared_ptr<MockBackend> mock = std::make_shared<MockBackend>(support::oracle_corpus());
  WireServer server{mock, Endpoint::parse("127.0.0.1:0")};
  Served() { server.start(); }
  Endpoint endpoint() const { return Endpoint{"127.0.0.1", server.port()}; }
};

std::vector<const WorldFixture*> fixtures_of(const FixtureCorpus& c) {
  std::vector<const WorldFixture*> out;
  for (const auto& id : c.ids()) out.push_back(c.find(id));
  return out;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const auto e = Endpoint::parse("localhost:7777");
  CHECK(e.host == "localhost");
  CHECK(e.port == 7777);
  CHECK(Endpoint::parse(":81").port == 81);
  CHECK_THROWS(Endpoint::parse("nohost"));
  CHECK_THROWS(Endpoint::parse("h:99999"));
}

TEST_CASE("malformed lines answer invalid without a backend call") {
  MockBackend mock(support::oracle_corpus());
  auto reply = json::parse(handle_wire_line(mock, "{not json"));
  CHECK(reply["ok"] == false);
  CHECK(reply["id"].is_null());
  CHECK(reply["error"].get<std::string>().rfind("invalid: ", 0) == 0);
  reply = json::parse(handle_wire_line(mock, R"({"id":4,"method":"caption","args":{}})"));
  CHECK(reply["id"] == 4);
  CHECK(reply["error"].get<std::string>().rfind("invalid: ", 0) == 0);
  reply = json::parse(handle_wire_line(mock, R"({"id":5,"method":"teleport","args":{}})"));
  CHECK(reply["error"].get<std::string>().find("unknown method") != std::string::npos);
}

TEST_CASE("served mock equals the in-process mock") {
  Served s;
  RemoteBackend remote(s.endpoint());
  std::mt19937_64 rng(3);
  const auto fx = fixtures_of(*support::oracle_corpus());
  for (int i = 0; i < 200; ++i) {
    const auto req = support::random_valid_request(rng, fx, i + 1);
    CHECK(to_wire(remote.handle(req)) == to_wire(s.mock->handle(req)));
  }
}

TEST_CASE("connection stays open after malformed lines") {
  Served s;
  RemoteBackend remote(s.endpoint());
  for (const char* bad : {" ", "[]", "{\"id\":\"x\"}", "}{"}) {
    const auto reply = json::parse(remote.exchange_line(bad));
    CHECK(reply["error"].get<std::string>().rfind("invalid: ", 0) == 0);
  }
  ToolSession session(std::shared_ptr<ToolBackend>(&remote, [](ToolBackend*) {}));
  CHECK(session.caption("oracle-v01", 0) == support::oracle_corpus()->find("oracle-v01")->frames[0].caption);
}

TEST_CASE("concurrent clients get their own responses") {
  Served s;
  const auto fx = fixtures_of(*support::oracle_corpus());
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      RemoteBackend remote(s.endpoint());
      std::mt19937_64 rng(static_cast<std::uint64_t>(100 + t));
      for (int i = 0; i < 40; ++i) {
        const auto req = support::random_valid_request(rng, fx, t * 1000 + i);
        const auto resp = remote.handle(req);
        if (resp.id != req.id || to_wire(resp) != to_wire(s.mock->handle(req))) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(mismatches == 0);
}

TEST_CASE("one shared client serializes calls from many threads") {
  Served s;
  auto remote = std::make_shared<RemoteBackend>(s.endpoint());
  ToolSession session(remote);
  std::vector<std::thread> threads;
  std::atomic<int> bad{0};
  const auto* f = support::oracle_corpus()->find("oracle-v02");
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) {
        const int frame = (t * 20 + i) % static_cast<int>(f->frames.size());
        if (session.caption(f->video_id, frame) != f->frames[static_cast<std::size_t>(frame)].caption) ++bad;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(bad == 0);
  CHECK(session.dispatch_count() == 80);
}

TEST_CASE("unreachable server is a transport error") {
  int port = 0;
  {
    Served s;
    port = s.server.port();
  }
  RemoteBackend remote(Endpoint{"127.0.0.1", port}, std::chrono::milliseconds(500));
  CHECK_THROWS_AS(remote.connect(), std::runtime_error);
  const auto resp = remote.handle(ToolRequest{1, ToolMethod::caption, "v", 0, json::object()});
  CHECK_FALSE(resp.ok);
  CHECK(resp.error->rfind("transport: ", 0) == 0);
}

TEST_CASE("server shutdown closes open clients") {
  auto s = std::make_unique<Served>();
  RemoteBackend remote(s->endpoint(), std::chrono::milliseconds(2000));
  CHECK(remote.handle(ToolRequest{1, ToolMethod::caption, "oracle-v01", 0, json::object()}).ok);
  s.reset();
  const auto resp = remote.handle(ToolRequest{2, ToolMethod::caption, "oracle-v01", 0, json::object()});
  CHECK_FALSE(resp.ok);
  CHECK(resp.error->rfind("transport: ", 0) == 0);
}
