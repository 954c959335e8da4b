#include "morevqa/fixture.hpp"

#include <fstream>

namespace morevqa {

bool BoundingBox::valid() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return unit(x0) && unit(y0) && unit(x1) && unit(y1) && x0 < x1 && y0 < y1;
}

void WorldFixture::validate() const {
  if (video_id.empty()) throw InvariantError("fixture without video_id");
  if (!(fps > 0)) throw InvariantError("fixture " + video_id + ": fps must be > 0");
  if (frames.empty()) throw InvariantError("fixture " + video_id + ": no frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.frame_id != static_cast<int>(i))
      throw InvariantError("fixture " + video_id + ": frame ids must be contiguous from 0");
    if (f.caption.empty())
      throw InvariantError("fixture " + video_id + ": empty caption at frame " + std::to_string(i));
    for (const auto& o : f.objects)
      if (!o.box.valid())
        throw InvariantError("fixture " + video_id + ": invalid box for '" + o.name + "' at frame " +
                             std::to_string(i));
  }
}

VideoMeta WorldFixture::meta() const {
  return VideoMeta::make(video_id, static_cast<int>(frames.size()), fps);
}

const FixtureFrame* WorldFixture::frame(int frame_id) const {
  if (frame_id < 0 || frame_id >= static_cast<int>(frames.size())) return nullptr;
  return &frames[static_cast<std::size_t>(frame_id)];
}

void to_json(json& j, const BoundingBox& b) { j = json::array({b.x0, b.y0, b.x1, b.y1}); }

void from_json(const json& j, BoundingBox& b) {
  if (!j.is_array() || j.size() != 4) throw InvariantError("box must be [x0, y0, x1, y1]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const WorldFixture& f) {
  json frames = json::array();
  for (const auto& fr : f.frames) {
    json objects = json::array();
    for (const auto& o : fr.objects) objects.push_back({{"name", o.name}, {"box", o.box}});
    frames.push_back({{"frame_id", fr.frame_id},
                      {"objects", objects},
                      {"actions", fr.actions},
                      {"caption", fr.caption},
                      {"ocr_text", fr.ocr_text ? json(*fr.ocr_text) : json(nullptr)}});
  }
  j = json{{"video_id", f.video_id},
           {"fps", f.fps},
           {"frames", frames},
           {"qa_notes", f.qa_notes ? json(*f.qa_notes) : json(nullptr)}};
}

void from_json(const json& j, WorldFixture& f) {
  f.video_id = j.at("video_id").get<std::string>();
  f.fps = j.at("fps").get<double>();
  f.frames.clear();
  for (const auto& jf : j.at("frames")) {
    FixtureFrame fr;
    fr.frame_id = jf.at("frame_id").get<int>();
    for (const auto& jo : jf.at("objects"))
      fr.objects.push_back({jo.at("name").get<std::string>(), jo.at("box").get<BoundingBox>()});
    fr.actions = jf.at("actions").get<std::vector<std::string>>();
    fr.caption = jf.at("caption").get<std::string>();
    if (jf.contains("ocr_text") && !jf["ocr_text"].is_null()) fr.ocr_text = jf["ocr_text"].get<std::string>();
    f.frames.push_back(std::move(fr));
  }
  if (j.contains("qa_notes") && !j["qa_notes"].is_null()) f.qa_notes = j["qa_notes"].get<std::string>();
  else f.qa_notes.reset();
}

WorldFixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture " + path.string());
  WorldFixture f = json::parse(in).get<WorldFixture>();
  f.validate();
  return f;
}

void save_fixture(const WorldFixture& fixture, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write fixture " + path.string());
  out << json(fixture).dump(1) << '\n';
}

FixtureCorpus FixtureCorpus::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("fixture directory not found: " + dir.string());
  FixtureCorpus corpus;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") corpus.add(load_fixture(entry.path()));
  }
  return corpus;
}

void FixtureCorpus::add(WorldFixture fixture) {
  fixture.validate();
  auto id = fixture.video_id;
  fixtures_.insert_or_assign(std::move(id), std::move(fixture));
}

const WorldFixture* FixtureCorpus::find(const std::string& video_id) const {
  auto it = fixtures_.find(video_id);
  return it == fixtures_.end() ? nullptr : &it->second;
}

std::vector<std::string> FixtureCorpus::ids() const {
  std::vector<std::string> out;
  out.reserve(fixtures_.size());
  for (const auto& [id, _] : fixtures_) out.push_back(id);
  return out;
}

}  // namespace morevqa
