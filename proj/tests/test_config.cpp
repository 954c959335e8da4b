#include <doctest.h>

#include "morevqa/config.hpp"
#include "support.hpp"

using namespace morevqa;

TEST_CASE("settings update the right fields") {
  EvalConfig cfg;
  apply_setting(cfg, "n_context_frames", "8");
  apply_setting(cfg, " fps_caption ", " 2.5 ");
  apply_setting(cfg, "decode_temperature", "0.3");
  apply_setting(cfg, "seed", "18446744073709551615");
  apply_setting(cfg, "trim_mode", "remove");
  apply_setting(cfg, "grounding_to_reasoning", "no");
  apply_setting(cfg, "score_threshold", "0.5");
  apply_setting(cfg, "stage_mask", "1, 0,1");
  apply_setting(cfg, "frame_fraction", "0.25");
  apply_setting(cfg, "prompt_template", "short");
  apply_setting(cfg, "planner", "llm_backed");
  apply_setting(cfg, "workers", "6");
  CHECK(cfg.run.n_context_frames == 8);
  CHECK(cfg.run.fps_caption == 2.5);
  CHECK(cfg.jcef.fps_caption == 2.5);
  CHECK(cfg.run.decode_temperature == 0.3);
  CHECK(cfg.run.seed == 18446744073709551615ull);
  CHECK(cfg.run.trim_mode == TrimMode::remove);
  CHECK_FALSE(cfg.run.grounding_to_reasoning);
  CHECK(cfg.run.score_threshold == 0.5);
  CHECK(cfg.run.stage_mask == StageMask{true, false, true});
  CHECK(cfg.jcef.frame_fraction == 0.25);
  CHECK(cfg.planner.kind == Planner::Kind::llm_backed);
  CHECK(cfg.planner.prompt_template_id == "short");
  CHECK(cfg.workers == 6);
}

TEST_CASE("bad settings are rejected") {
  EvalConfig cfg;
  CHECK_THROWS_AS(apply_setting(cfg, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "n_context_frames", "8x"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "seed", "-1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "trim_mode", "middle"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "stage_mask", "1,1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "stage_mask", "1,1,maybe"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "planner", "oracle"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "workers", "0"), ConfigError);
}

TEST_CASE("config text reports origin and line") {
  EvalConfig cfg;
  apply_config_text(cfg, "# comment\n\nn_context_frames = 4\n");
  CHECK(cfg.run.n_context_frames == 4);
  CHECK_THROWS_WITH_AS(apply_config_text(cfg, "seed = 1\nno equals here\n", "x.conf"), "x.conf:2: expected key = value",
                       ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_text(cfg, "\n\nbogus = 1\n", "y.conf"), "y.conf:3: unknown config key 'bogus'",
                       ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "n_context_frames = 0\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "frame_fraction = 2\n"), ConfigError);
  CHECK_THROWS_AS(load_config(support::data_dir() / "missing.conf"), ConfigError);
}

TEST_CASE("rendered config reloads to the same config") {
  EvalConfig cfg;
  apply_config_text(cfg, "n_context_frames = 12\nfps_caption = 0.5\ntrim_mode = remove\nstage_mask = 0,1,1\n"
                         "frame_fraction = 0.125\nplanner = llm_backed\nprompt_template = t2\nworkers = 3\n"
                         "score_threshold = 0.65\nseed = 99\n");
  const auto text = render_config(cfg);
  EvalConfig back;
  apply_config_text(back, text);
  CHECK(render_config(back) == text);
  CHECK(back.planner.kind == Planner::Kind::llm_backed);
  CHECK(render_config(EvalConfig{}).find("planner = rule_based\n") != std::string::npos);

  support::TempDir dir("config");
  support::write_file(dir / "c.conf", text);
  CHECK(render_config(load_config(dir / "c.conf")) == text);
}

TEST_CASE("oracle settings file loads") {
  const auto cfg = load_config(support::oracle_dir() / "oracle.conf");
  CHECK(cfg.run.n_context_frames == 16);
  CHECK(cfg.run.score_threshold == 0.7);
}
