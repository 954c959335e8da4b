#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morevqa/types.hpp"

namespace morevqa {

/// Normalized (x0, y0, x1, y1) with x0 < x1 and y0 < y1, all in [0, 1].
struct BoundingBox {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  bool valid() const;
  bool operator==(const BoundingBox&) const = default;
};

struct FixtureObject {
  std::string name;
  BoundingBox box;
  bool operator==(const FixtureObject&) const = default;
};

struct FixtureFrame {
  int frame_id = 0;
  std::vector<FixtureObject> objects;
  std::vector<std::string> actions;
  std::string caption;
  std::optional<std::string> ocr_text;
  bool operator==(const FixtureFrame&) const = default;
};

/// Synthetic per-frame ground truth for one video.
struct WorldFixture {
  std::string video_id;
  double fps = 1.0;
  std::vector<FixtureFrame> frames;
  std::optional<std::string> qa_notes;

  void validate() const;
  VideoMeta meta() const;
  /// nullptr when the frame does not exist.
  const FixtureFrame* frame(int frame_id) const;

  bool operator==(const WorldFixture&) const = default;
};

void to_json(json& j, const BoundingBox& b);
void from_json(const json& j, BoundingBox& b);
void to_json(json& j, const WorldFixture& f);
void from_json(const json& j, WorldFixture& f);

WorldFixture load_fixture(const std::filesystem::path& path);
void save_fixture(const WorldFixture& fixture, const std::filesystem::path& path);

/// A directory of fixture files, one JSON document per video.
class FixtureCorpus {
 public:
  FixtureCorpus() = default;
  static FixtureCorpus load_dir(const std::filesystem::path& dir);

  void add(WorldFixture fixture);
  const WorldFixture* find(const std::string& video_id) const;
  std::size_t size() const { return fixtures_.size(); }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, WorldFixture> fixtures_;
};

}  // namespace morevqa
