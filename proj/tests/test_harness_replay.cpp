#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lapgaze/harness.hpp"
#include "lapgaze/replay.hpp"

using namespace lapgaze;

namespace {

Condition cond(FilterMode f, TaskKind k, Level l) { return {f, k, l}; }

}  // namespace

TEST(PerfectUser, CompletesEveryTaskUnderImmediate) {
  for (TaskKind k : {TaskKind::peg_transfer, TaskKind::thread_passing})
    for (Level l : {Level::easy, Level::medium, Level::hard}) {
      const auto run = run_scripted_trial(perfect_user_script(cond(FilterMode::immediate(), k, l), 11));
      EXPECT_EQ(run.result.status, "completed") << run.result.diagnostics;
      EXPECT_EQ(run.result.accuracy, 1.0) << to_string(k) << "/" << to_string(l);
      EXPECT_LT(run.result.precision_mean, 1e-3);
      EXPECT_GT(run.result.time_ms, 0.0);
    }
}

TEST(PerfectUser, CompletesUnderEveryInterface) {
  for (const auto& f : interface_conditions()) {
    const auto run = run_scripted_trial(perfect_user_script(cond(f, TaskKind::thread_passing, Level::medium), 12));
    EXPECT_EQ(run.result.accuracy, 1.0) << f.label();
    EXPECT_EQ(run.result.condition.interface, f);
  }
}

TEST(Harness, DeterministicRuns) {
  const auto script = perfect_user_script(cond(FilterMode::average(10), TaskKind::peg_transfer, Level::hard), 5);
  const auto a = run_scripted_trial(script), b = run_scripted_trial(script);
  EXPECT_EQ(a.result, b.result);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.final_state, b.final_state);
}

TEST(Harness, ScaledHalfDoublesHeadPath) {
  for (TaskKind k : {TaskKind::peg_transfer, TaskKind::thread_passing}) {
    const double base =
        run_scripted_trial(perfect_user_script(cond(FilterMode::immediate(), k, Level::hard), 21)).result.head_path_deg;
    const double half =
        run_scripted_trial(perfect_user_script(cond(FilterMode::scaled(0.5), k, Level::hard), 21)).result.head_path_deg;
    EXPECT_NEAR(half / base, 2.0, 0.06) << to_string(k);
  }
}

TEST(Harness, ScriptJsonRoundTrip) {
  const auto s = perfect_user_script(cond(FilterMode::scaled(0.8), TaskKind::peg_transfer, Level::easy), 2);
  const auto back = nlohmann::json(s).get<ScriptedTrial>();
  EXPECT_EQ(back.condition, s.condition);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.gaze, s.gaze);
  EXPECT_EQ(back.inputs, s.inputs);
}

TEST(Harness, InvalidScriptsAbortWithDiagnostics) {
  const auto good = perfect_user_script(cond(FilterMode::immediate(), TaskKind::peg_transfer, Level::easy), 1);
  auto check = [](ScriptedTrial s, const std::string& needle) {
    const auto run = run_scripted_trial(s);
    EXPECT_EQ(run.result.status, "aborted");
    EXPECT_NE(run.result.diagnostics.find(needle), std::string::npos) << run.result.diagnostics;
    EXPECT_TRUE(run.log.empty());
  };
  ScriptedTrial s = good;
  s.gaze.clear();
  check(s, "empty");
  s = good;
  std::swap(s.gaze[3], s.gaze[4]);
  check(s, "strictly increase");
  s = good;
  s.gaze[2].dir.yaw = std::nan("");
  check(s, "not finite");
  s = good;
  s.inputs.back().t = s.gaze.back().t + 1;
  check(s, "outside");
  s = good;
  std::swap(s.inputs[0], s.inputs[1]);
  check(s, "must not decrease");
}

TEST(Harness, UnfinishedTrialIsFinishedAtTraceEnd) {
  ScriptedTrial s;
  s.condition = cond(FilterMode::immediate(), TaskKind::thread_passing, Level::easy);
  for (int i = 0; i < 30; ++i) s.gaze.push_back({i * 16.0, {0.01 * i, 0.0}});
  const auto run = run_scripted_trial(s);
  EXPECT_EQ(run.result.status, "completed");
  EXPECT_EQ(run.result.accuracy, 0.0);
  EXPECT_NEAR(run.result.head_path_deg, rad2deg(0.29), 1e-9);
}

TEST(Replay, ReproducesLogAndSnapshots) {
  const auto script = perfect_user_script(cond(FilterMode::average(30), TaskKind::thread_passing, Level::easy), 8);
  // drive an engine by hand to keep every snapshot
  Engine eng(EngineConfig{}, ImageLibrary{}, "live", script.gaze.front().dir);
  eng.open_log();
  std::vector<StateSnapshot> live;
  eng.submit(msg::Control{"start_trial", {{"t", 0}, {"interface", "average-30"}, {"task", "thread"}, {"level", "easy"}, {"seed", 8}}});
  live.push_back(eng.tick());
  std::size_t next = 0;
  for (const auto& g : script.gaze) {
    eng.submit(msg::Gaze{g, "trace"});
    while (next < script.inputs.size() && script.inputs[next].t <= g.t) eng.submit(msg::Input{script.inputs[next++]});
    live.push_back(eng.tick());
  }
  live.push_back(eng.tick());  // an idle tick at the end
  eng.close_log();

  const auto r = replay(eng.log_lines());
  EXPECT_TRUE(r.issues.empty());
  EXPECT_EQ(r.log, eng.log_lines());
  ASSERT_EQ(r.snapshots.size(), live.size());
  for (std::size_t i = 0; i < live.size(); ++i) ASSERT_EQ(r.snapshots[i], live[i]) << "tick " << i + 1;
  EXPECT_EQ(r.results, eng.results());
  ASSERT_EQ(r.results.size(), 1u);
  EXPECT_EQ(r.results[0].accuracy, 1.0);
}

TEST(Replay, HarnessLogIsByteIdentical) {
  for (const auto& f : interface_conditions()) {
    const auto run = run_scripted_trial(perfect_user_script(cond(f, TaskKind::peg_transfer, Level::medium), 31));
    const auto r = replay(run.log, false);
    EXPECT_EQ(r.log, run.log) << f.label();
    ASSERT_TRUE(r.final_state);
    EXPECT_EQ(*r.final_state, run.final_state);
  }
}

TEST(Replay, StreamInput) {
  const auto run = run_scripted_trial(perfect_user_script(cond(FilterMode::immediate(), TaskKind::peg_transfer, Level::easy), 4));
  std::string text;
  for (const auto& l : run.log) text += l + "\r\n";
  std::istringstream in(text);
  EXPECT_EQ(replay(in).log, run.log);
}

TEST(Replay, EmptyLog) {
  const auto r = replay(std::vector<std::string>{});
  EXPECT_TRUE(r.snapshots.empty());
  EXPECT_TRUE(r.issues.empty());
  EXPECT_FALSE(r.final_state);
  EXPECT_TRUE(replay(std::vector<std::string>{"", ""}).log.empty());
}

TEST(Replay, VersionMismatchIsFatal) {
  auto log = run_scripted_trial(perfect_user_script(cond(FilterMode::immediate(), TaskKind::peg_transfer, Level::easy), 4)).log;
  auto h = nlohmann::json::parse(log[0]);
  h["payload"]["version"] = 2;
  log[0] = h.dump();
  EXPECT_THROW(replay(log), LogVersionError);
  log[0] = "{not json";
  EXPECT_THROW(replay(log), LogVersionError);
  log[0] = R"({"t":0,"type":"gaze","payload":{}})";
  EXPECT_THROW(replay(log), LogVersionError);
}

TEST(Replay, CorruptLinesAreReportedWithLineNumbers) {
  const auto run = run_scripted_trial(perfect_user_script(cond(FilterMode::immediate(), TaskKind::peg_transfer, Level::easy), 4));
  std::mt19937_64 rng(70);
  for (int round = 0; round < 50; ++round) {
    auto log = run.log;
    std::uniform_int_distribution<std::size_t> pick(1, log.size() - 1);
    const std::size_t bad = pick(rng);
    log[bad] = log[bad].substr(0, log[bad].size() / 2);  // truncated line
    const auto r = replay(log, false);
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].line, bad + 1);
    ASSERT_TRUE(r.final_state);
  }
  auto log = run.log;
  log.insert(log.begin() + 3, R"({"t":1,"type":"gaze","tick":1,"payload":{"t":1,"yaw":"x","pitch":0}})");
  log.insert(log.begin() + 3, R"({"t":1,"type":"header","payload":{}})");
  const auto r = replay(log, false);
  ASSERT_EQ(r.issues.size(), 2u);
  EXPECT_EQ(r.issues[0].line, 4u);
  EXPECT_EQ(r.issues[1].line, 5u);
}

TEST(Replay, FuzzedLinesNeverCrash) {
  const auto run = run_scripted_trial(perfect_user_script(cond(FilterMode::scaled(0.5), TaskKind::thread_passing, Level::easy), 4));
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int round = 0; round < 30; ++round) {
    auto log = run.log;
    for (std::size_t i = 1; i < log.size(); ++i) {
      if (rng() % 20) continue;
      auto& l = log[i];
      if (!l.empty()) l[rng() % l.size()] = static_cast<char>(byte(rng));
    }
    EXPECT_NO_THROW(replay(log, false));
  }
}
