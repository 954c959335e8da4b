// Writes the oracle fixture corpus: fixtures/, dataset.jsonl, programs/ and
// stats_labeled.jsonl. Every answer is recoverable only after trimming to the
// asked region and grounding the asked event; each video also carries a
// distractor caption on a frame the 16-frame sampler skips.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kContextFrames = 16;

std::vector<int> sampled(int frames, int n) {
  const int m = std::min(frames, n);
  std::vector<int> out;
  for (int k = 0; k < m; ++k) out.push_back(static_cast<int>((2LL * k + 1) * frames / (2LL * m)));
  return out;
}

// Contiguous region slice of 0..frames-1 with ceil(0.4 * frames) frames.
std::vector<int> region_window(int frames, const std::string& region) {
  const int m = (2 * frames + 4) / 5;
  int start = 0;
  if (region == "end") start = frames - m;
  if (region == "middle") start = std::clamp(frames / 2 - m / 2, 0, frames - m);
  std::vector<int> w;
  for (int i = start; i < start + m; ++i) w.push_back(i);
  return w;
}

struct Frame {
  std::vector<std::string> objects;
  std::vector<std::string> actions;
  std::string caption;
  std::string ocr;
};

json box_for(int frame, int k) {
  const int x = 5 + (frame * 7 + k * 13) % 50;
  const int y = 5 + (frame * 5 + k * 11) % 40;
  return json::array({x / 100.0, y / 100.0, (x + 40) / 100.0, (y + 50) / 100.0});
}

json fixture_json(const std::string& id, const std::vector<Frame>& frames, const std::string& notes) {
  json f;
  f["video_id"] = id;
  f["fps"] = 1.0;
  json arr = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& fr = frames[i];
    json o = json::array();
    for (std::size_t k = 0; k < fr.objects.size(); ++k)
      o.push_back({{"name", fr.objects[k]}, {"box", box_for(static_cast<int>(i), static_cast<int>(k))}});
    json j{{"frame_id", i}, {"objects", o}, {"actions", fr.actions}, {"caption", fr.caption}};
    if (!fr.ocr.empty()) j["ocr_text"] = fr.ocr;
    arr.push_back(j);
  }
  f["frames"] = arr;
  if (!notes.empty()) f["qa_notes"] = notes;
  return f;
}

// Deterministic shuffle from raw mt19937 output.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

const std::vector<std::string> kFeelings = {"hungry", "tired",  "playful", "scared",  "cold",  "happy",  "sleepy",
                                            "bored",  "excited", "curious", "angry",   "sad",   "lonely", "thirsty",
                                            "nervous", "proud",  "sick",    "confused", "calm", "jealous"};

struct Picked {
  std::string correct, duplicate, distractor;
  std::vector<std::string> candidates;
  int answer = 0;
};

Picked pick_feelings(std::mt19937& rng) {
  std::vector<std::string> pool = kFeelings;
  shuffle(pool, rng);
  Picked p{pool[0], pool[1], pool[2], {pool[0], pool[1], pool[2], pool[3], pool[4]}, 0};
  shuffle(p.candidates, rng);
  p.answer = static_cast<int>(std::find(p.candidates.begin(), p.candidates.end(), p.correct) - p.candidates.begin());
  return p;
}

int first_free(int frames, const std::set<int>& taken) {
  const auto s = sampled(frames, kContextFrames);
  const std::set<int> sampled_set(s.begin(), s.end());
  for (int f = 0; f < frames; ++f)
    if (!sampled_set.count(f) && !taken.count(f)) return f;
  throw std::runtime_error("no unsampled frame left");
}

json window_s(const std::vector<int>& frames) {
  return json::array({static_cast<double>(frames.front()), static_cast<double>(frames.back() + 1)});
}

struct Item {
  json line;
  json fixture;
};

// Event inside a temporal region.
struct RegionEvent {
  std::string subject, event, idle, idle_action;
};

const std::vector<RegionEvent> kRegionEvents = {
    {"dog", "lying on its back", "sitting on the grass", "sitting"},
    {"cat", "hiding under the bed", "walking across the room", "walking"},
    {"boy", "jumping on the sofa", "standing by the door", "standing"},
    {"girl", "crying near the window", "sitting at the table", "sitting"},
    {"man", "running down the street", "standing on the corner", "standing"},
    {"woman", "waving her hand", "looking at the garden", "looking"},
    {"baby", "laughing on the floor", "lying in the crib", "lying"},
    {"horse", "rearing up high", "grazing in the field", "grazing"},
    {"bird", "flapping its wings", "perched on a branch", "perched"},
    {"child", "hiding behind the tree", "walking along the path", "walking"},
};

Item region_item(int idx, const RegionEvent& ev, const std::string& region, int frames, std::mt19937& rng,
                 bool open_ended) {
  const auto p = pick_feelings(rng);
  const auto w = region_window(frames, region);
  const int mid = w[w.size() / 2];
  const std::vector<int> event_frames = {w[w.size() / 2 + 3], w[w.size() / 2 + 4]};
  std::vector<int> outside;
  for (int f = 0; f < frames; ++f)
    if (std::find(w.begin(), w.end(), f) == w.end()) outside.push_back(f);
  const std::vector<int> dup = {outside[outside.size() / 2], outside[outside.size() / 2 + 1]};
  std::set<int> taken(event_frames.begin(), event_frames.end());
  taken.insert(dup.begin(), dup.end());
  taken.insert(mid);
  const int distractor = first_free(frames, taken);

  std::vector<Frame> fr(frames);
  for (int f = 0; f < frames; ++f) fr[f] = {{ev.subject}, {ev.idle_action}, "a " + ev.subject + " " + ev.idle, ""};
  for (int f : event_frames) fr[f] = {{ev.subject}, {ev.event, p.correct}, ev.subject + " " + ev.event, ""};
  for (int f : dup) fr[f] = {{ev.subject}, {ev.event, p.duplicate}, ev.subject + " " + ev.event, ""};
  fr[distractor].caption = "a " + p.distractor + " " + ev.subject + " nearby";

  const std::string id = "oracle-v" + std::string(idx < 9 ? "0" : "") + std::to_string(idx + 1);
  const std::string where = region == "middle" ? "in the middle of the video" : "at the " + region + " of the video";
  json line;
  line["id"] = "oracle-" + std::string(idx < 9 ? "0" : "") + std::to_string(idx + 1);
  line["video_id"] = id;
  line["question"] = "why is the " + ev.subject + " " + ev.event + " " + where + "?";
  std::string notes;
  if (open_ended) {
    line["answer_open"] = {p.correct, p.correct, p.correct, "very " + p.correct, p.correct};
    for (const auto& c : p.candidates) notes += (notes.empty() ? "" : ";") + c;
  } else {
    line["candidates"] = p.candidates;
    line["answer_mc"] = p.answer;
  }
  line["gt_window_s"] = window_s(event_frames);
  line["qtype"] = "why";
  line["subset"] = "temporal-region";
  line["program_path"] = "programs/early_frame_bias.mvp";
  line["frame_count"] = frames;
  line["fps"] = 1.0;
  return {line, fixture_json(id, fr, notes)};
}

// Main event that happens both before and after a reference event.
struct OrderedEvents {
  std::string subject, main, ref, conj;
};

const std::vector<OrderedEvents> kOrdered = {
    {"boy", "walking to the shelf", "playing with the ball", "after"},
    {"girl", "opening the door", "eating the apple", "before"},
    {"man", "sitting on the bench", "reading the newspaper", "after"},
    {"woman", "picking up the phone", "washing the dishes", "before"},
    {"child", "climbing the ladder", "painting the fence", "after"},
    {"dog", "dropping the stick", "chasing the cat", "before"},
    {"boy", "throwing the frisbee", "tying his shoes", "after"},
    {"girl", "putting on her coat", "leaving the room", "before"},
    {"man", "closing the window", "drinking the coffee", "after"},
    {"woman", "laughing at the screen", "turning off the lamp", "before"},
};

Item ordered_item(int idx, const OrderedEvents& ev, int frames, std::mt19937& rng) {
  const auto p = pick_feelings(rng);
  const std::vector<int> anchor = {frames / 2 - 1, frames / 2, frames / 2 + 1};
  const std::vector<int> early = {frames / 4, frames / 4 + 1};
  const std::vector<int> late = {frames * 3 / 4, frames * 3 / 4 + 1};
  const auto& right = ev.conj == "after" ? late : early;
  const auto& wrong = ev.conj == "after" ? early : late;
  std::set<int> taken(anchor.begin(), anchor.end());
  taken.insert(early.begin(), early.end());
  taken.insert(late.begin(), late.end());
  const int distractor = first_free(frames, taken);

  std::vector<Frame> fr(frames);
  for (int f = 0; f < frames; ++f) fr[f] = {{ev.subject}, {"standing"}, "a " + ev.subject + " standing still", ""};
  for (int f : anchor) fr[f] = {{ev.subject}, {ev.ref}, ev.subject + " " + ev.ref, ""};
  for (int f : right) fr[f] = {{ev.subject}, {ev.main, p.correct}, ev.subject + " " + ev.main, ""};
  for (int f : wrong) fr[f] = {{ev.subject}, {ev.main, p.duplicate}, ev.subject + " " + ev.main, ""};
  fr[distractor].caption = "a " + p.distractor + " " + ev.subject + " nearby";

  const std::string n = std::to_string(idx + 1);
  const std::string id = "oracle-v" + n;
  json line;
  line["id"] = "oracle-" + n;
  line["video_id"] = id;
  line["question"] = "why is the " + ev.subject + " " + ev.main + " " + ev.conj + " " + ev.ref + "?";
  line["candidates"] = p.candidates;
  line["answer_mc"] = p.answer;
  line["gt_window_s"] = window_s(right);
  line["qtype"] = "why";
  line["subset"] = "temporal-order";
  line["program_path"] = "programs/first_match.mvp";
  line["frame_count"] = frames;
  line["fps"] = 1.0;
  return {line, fixture_json(id, fr, "")};
}

struct OcrItem {
  std::string noun, template_;
};

const std::vector<OcrItem> kOcr = {
    {"sign", "what does the sign say"},      {"label", "what does the label say"},
    {"poster", "what is written on the poster"}, {"banner", "what does the banner say"},
    {"board", "what text is on the board"},  {"sign", "what is written on the sign"},
    {"poster", "what does the poster say"},  {"label", "what is written on the label"},
    {"banner", "what text is on the banner"}, {"board", "what does the board say"},
};

const std::vector<std::string> kTexts = {
    "closed for lunch", "open all night",    "fresh bread daily", "free parking inside", "wet paint warning",
    "keep door shut",   "no dogs allowed",   "sale ends friday",  "staff room only",     "please knock first",
    "hot coffee served", "quiet study zone", "beware falling rocks", "mind the gap",     "gift shop ahead",
};

Item ocr_item(int idx, const OcrItem& o, const std::string& region, int frames, std::mt19937& rng,
              bool open_ended) {
  std::vector<std::string> pool = kTexts;
  shuffle(pool, rng);
  const std::string texts[3] = {pool[0], pool[1], pool[2]};
  const int mb = region_window(frames, "beginning")[region_window(frames, "beginning").size() / 2];
  const int mm = region_window(frames, "middle")[region_window(frames, "middle").size() / 2];
  const int me = region_window(frames, "end")[region_window(frames, "end").size() / 2];
  auto text_of = [&](int f) { return f < (mb + mm) / 2 ? 0 : f < (mm + me) / 2 ? 1 : 2; };
  const int asked = region == "beginning" ? 0 : region == "middle" ? 1 : 2;
  const int wrong = (asked + 1) % 3;
  const int distractor = first_free(frames, {mb, mm, me});

  std::vector<Frame> fr(frames);
  for (int f = 0; f < frames; ++f) fr[f] = {{o.noun}, {}, "a " + o.noun + " on a brick wall", texts[text_of(f)]};
  const auto first_word = texts[wrong].substr(0, texts[wrong].find(' '));
  fr[distractor].caption = "a " + o.noun + " that reads " + first_word;

  std::vector<std::string> candidates = {texts[0], texts[1], texts[2], pool[3], pool[4]};
  shuffle(candidates, rng);
  const int answer =
      static_cast<int>(std::find(candidates.begin(), candidates.end(), texts[asked]) - candidates.begin());
  std::vector<int> span;
  for (int f = 0; f < frames; ++f)
    if (text_of(f) == asked) span.push_back(f);

  const std::string n = std::to_string(idx + 1);
  const std::string id = "oracle-v" + n;
  const std::string where = region == "middle" ? "in the middle of the video" : "at the " + region + " of the video";
  json line;
  line["id"] = "oracle-" + n;
  line["video_id"] = id;
  line["question"] = o.template_ + " " + where + "?";
  std::string notes;
  if (open_ended) {
    line["answer_open"] = {texts[asked], texts[asked], texts[asked], o.noun + " says " + texts[asked], texts[asked]};
    for (const auto& c : candidates) notes += (notes.empty() ? "" : ";") + c;
  } else {
    line["candidates"] = candidates;
    line["answer_mc"] = answer;
  }
  line["gt_window_s"] = window_s(span);
  line["qtype"] = "what";
  line["subset"] = "ocr";
  if (idx < 25) line["program_path"] = "programs/unbound_variable.mvp";
  else if (idx < 27) line["program_path"] = "programs/syntax_error.mvp";
  line["frame_count"] = frames;
  line["fps"] = 1.0;
  return {line, fixture_json(id, fr, notes)};
}

const char* kEarlyFrameBias = R"(#mode=extended
# answer from the first frame showing anything the question mentions
hits = localize(question)
f = middle(frames)
found = false
for h in hits:
    if found == false:
        f = h
        found = true
seen = vqa(f, "what is happening?")
return llm_query(question, [caption(f), seen])
)";

const char* kFirstMatch = R"(#mode=extended
hits = localize(question)
notes = []
for f in hits:
    if verify_action(f, question):
        notes = append(notes, vqa(f, "what is happening?"))
if len(notes) == 0:
    notes = [caption(middle(frames))]
return llm_query(question, notes)
)";

const char* kUnboundVariable = R"(#mode=extended
hits = localize(question)
for f in hits:
    if verify_action(f, event):
        return vqa(f, question)
return llm_query(question)
)";

const char* kSyntaxError = R"(#mode=extended
hits = localize(question
return llm_query(question)
)";

const char* kLlmOnly = R"(#mode=extended
return llm_query(question)
)";

struct Labeled {
  std::string question, label;
};

// Hand-labeled question types for the statistics check.
const std::vector<Labeled> kLabeled = {
    {"why is the dog lying on its back at the end of the video?", "why"},
    {"why did the boy walk to the shelf after playing with the ball?", "why"},
    {"why is the cat hiding under the bed?", "why"},
    {"why does the girl open the door before eating the apple?", "why"},
    {"how many chairs are in the room?", "counting"},
    {"how many birds are on the branch?", "counting"},
    {"how does the man open the jar?", "how"},
    {"how did the woman react when the phone rang?", "how"},
    {"what does the sign say at the beginning of the video?", "what"},
    {"what is the baby holding?", "what"},
    {"which toy does the child pick up first?", "what"},
    {"who enters the room after the dog barks?", "what"},
    {"where is this video taken?", "location"},
    {"where does the horse go at the end?", "location"},
    {"describe what happens in the kitchen.", "description"},
    {"explain why the man is laughing.", "explanation"},
    {"is the woman wearing a hat?", "other"},
    {"does the boy throw the frisbee while running?", "other"},
    {"why is the girl crying near the window?", "why"},
    {"what made the dog bark?", "why"},
};

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "data/oracle";
  fs::create_directories(out / "fixtures");
  fs::create_directories(out / "programs");
  std::mt19937 rng(20240607u);
  const int sizes[3] = {40, 36, 44};
  const char* regions[3] = {"end", "beginning", "middle"};

  std::vector<Item> items;
  for (int i = 0; i < 10; ++i)
    items.push_back(region_item(i, kRegionEvents[i], regions[i % 3], sizes[i % 3], rng, i >= 8));
  for (int i = 0; i < 10; ++i) items.push_back(ordered_item(10 + i, kOrdered[i], sizes[(i + 1) % 3], rng));
  for (int i = 0; i < 10; ++i)
    items.push_back(ocr_item(20 + i, kOcr[i], regions[(i + 2) % 3], sizes[(i + 2) % 3], rng, i >= 7));

  std::string dataset;
  for (const auto& it : items) {
    dataset += it.line.dump() + "\n";
    write(out / "fixtures" / (it.fixture["video_id"].get<std::string>() + ".json"), it.fixture.dump(1) + "\n");
  }
  write(out / "dataset.jsonl", dataset);

  std::string labeled;
  for (std::size_t i = 0; i < kLabeled.size(); ++i) {
    json line;
    line["id"] = "stats-" + std::to_string(i + 1);
    line["video_id"] = items[i].fixture["video_id"];
    line["question"] = kLabeled[i].question;
    line["answer_open"] = {"unknown"};
    line["qtype"] = kLabeled[i].label;
    labeled += line.dump() + "\n";
  }
  write(out / "stats_labeled.jsonl", labeled);

  write(out / "programs" / "early_frame_bias.mvp", kEarlyFrameBias);
  write(out / "programs" / "first_match.mvp", kFirstMatch);
  write(out / "programs" / "unbound_variable.mvp", kUnboundVariable);
  write(out / "programs" / "syntax_error.mvp", kSyntaxError);
  write(out / "programs" / "llm_only.mvp", kLlmOnly);
  write(out / "oracle.conf", "# settings used for the oracle corpus runs\nn_context_frames = 16\nscore_threshold = 0.7\n");
  std::cout << "wrote " << items.size() << " items to " << out.string() << "\n";
  return 0;
}
