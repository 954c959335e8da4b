#pragma once

#include <filesystem>
#include <cstdint>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "morevqa/fixture.hpp"
#include "morevqa/mock_backend.hpp"
#include "morevqa/tools.hpp"

namespace support {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(MOREVQA_DATA_DIR); }
inline fs::path oracle_dir() { return data_dir() / "oracle"; }
inline fs::path golden_dir() { return fs::path(MOREVQA_TEST_DIR) / "golden"; }

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("morevqa-test-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Fixture of `n` frames captioned "frame K of <id>", no objects or actions.
inline morevqa::WorldFixture blank_fixture(const std::string& id, int n, double fps = 1.0) {
  morevqa::WorldFixture f;
  f.video_id = id;
  f.fps = fps;
  for (int i = 0; i < n; ++i) {
    morevqa::FixtureFrame fr;
    fr.frame_id = i;
    fr.caption = "frame " + std::to_string(i) + " of " + id;
    f.frames.push_back(fr);
  }
  return f;
}

inline morevqa::FixtureObject object(const std::string& name) { return {name, {0.1, 0.1, 0.5, 0.5}}; }

inline std::shared_ptr<morevqa::FixtureCorpus> corpus_of(std::vector<morevqa::WorldFixture> fixtures) {
  auto c = std::make_shared<morevqa::FixtureCorpus>();
  for (auto& f : fixtures) c->add(std::move(f));
  return c;
}

inline std::shared_ptr<morevqa::MockBackend> mock_of(std::vector<morevqa::WorldFixture> fixtures) {
  return std::make_shared<morevqa::MockBackend>(corpus_of(std::move(fixtures)));
}

inline std::shared_ptr<const morevqa::FixtureCorpus> oracle_corpus() {
  static auto c = std::make_shared<const morevqa::FixtureCorpus>(
      morevqa::FixtureCorpus::load_dir(oracle_dir() / "fixtures"));
  return c;
}

/// Well-formed request against one of the given fixtures.
inline morevqa::ToolRequest random_valid_request(std::mt19937_64& rng, const std::vector<const morevqa::WorldFixture*>& fixtures,
                                                 std::int64_t id) {
  using morevqa::ToolMethod;
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  static const std::vector<std::string> words = {"dog", "cat", "ball", "sign", "running", "what is the dog doing?",
                                                 "how many dogs are there?", "where is this?", "the red car"};
  const auto& fx = *fixtures[static_cast<std::size_t>(pick(0, static_cast<int>(fixtures.size()) - 1))];
  const int n = static_cast<int>(fx.frames.size());
  const auto& w = words[static_cast<std::size_t>(pick(0, static_cast<int>(words.size()) - 1))];
  morevqa::ToolRequest r;
  r.id = id;
  r.method = morevqa::kAllToolMethods[pick(0, 5)];
  r.video_id = fx.video_id;
  switch (r.method) {
    case ToolMethod::caption: r.frame_id = pick(0, n - 1); break;
    case ToolMethod::vqa:
      r.frame_id = pick(0, n - 1);
      r.args["question"] = w;
      if (pick(0, 1)) r.args["prefix"] = "ocr";
      break;
    case ToolMethod::localize: {
      std::vector<int> frames;
      for (int f = pick(0, n - 1); f < n; f += pick(1, 4)) frames.push_back(f);
      r.args["phrase"] = w;
      r.args["frames"] = frames;
      break;
    }
    case ToolMethod::verify_action:
      r.frame_id = pick(0, n - 1);
      r.args["action"] = w;
      break;
    case ToolMethod::score:
      r.frame_id = pick(0, n - 1);
      r.args["text"] = w;
      break;
    case ToolMethod::complete:
      r.args["prompt"] = "#predict\nquestion: " + w + "\ncandidates:\n0: dog\n1: cat\ncontext:\n[frame 1] caption: " +
                         fx.frames[1 % fx.frames.size()].caption;
      if (pick(0, 1)) r.video_id.reset();
      break;
  }
  return r;
}

}  // namespace support
