#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uavfarm/harness.hpp"

using namespace uavfarm;
namespace fs = std::filesystem;

namespace {

RunConfig smoke_config(const std::string& out) {
  RunConfig c;
  c.world.x_max = c.world.y_max = 100;
  c.world.n_ws = 30;
  c.world.n_px = c.world.n_py = 5;
  c.fleet.n_c = c.fleet.n_m = c.fleet.n_d = 1;
  c.train.steps = 15;
  c.train.episodes = 10;
  c.train.batch_size = 8;
  c.train.buffer_size = 256;
  c.train.hidden = {8};
  c.run.scenario_pool = 2;
  c.run.out = out;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uavfarm_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("smoothing: constants stay, ramps give centered means, edges truncate") {
  const std::vector<double> flat(100, 3.25);
  for (double v : harness::smooth(flat, 10)) CHECK(v == 3.25);

  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const auto s = harness::smooth(ramp, 10);
  REQUIRE(s.size() == 100);
  // window covers i-5 .. i+4
  CHECK(s[49] == doctest::Approx((45.0 + 54.0) / 2.0));
  CHECK(s[20] == doctest::Approx((16.0 + 25.0) / 2.0));
  CHECK(s[70] == doctest::Approx((66.0 + 75.0) / 2.0));
  CHECK(s[0] == doctest::Approx((1.0 + 5.0) / 2.0));
  CHECK(s[99] == doctest::Approx((95.0 + 100.0) / 2.0));
  CHECK_THROWS(harness::smooth(ramp, 0));
}

TEST_CASE("metrics CSV writes and reads back") {
  std::stringstream buf;
  harness::write_metrics_header(buf);
  marl::EpisodeMetrics m;
  m.episode = 4;
  m.steps = 100;
  m.reward_mean = -1.25;
  m.aoi_mean = 0.1;
  m.eia_event = true;
  harness::write_metrics_row(buf, m);
  CHECK(buf.str().rfind("# schema=uavfarm.metrics/1\n", 0) == 0);
  const auto t = harness::read_metrics_csv(buf);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.series("episode")[0] == 4);
  CHECK(t.series("reward_mean")[0] == -1.25);
  CHECK(t.series("aoi_mean")[0] == 0.1);
  CHECK(t.series("eia_event")[0] == 1);
  CHECK_THROWS(t.column("nope"));
}

TEST_CASE("malformed metrics are rejected") {
  std::istringstream no_schema("episode,steps\n1,2\n");
  CHECK_THROWS(harness::read_metrics_csv(no_schema));
  std::istringstream ragged("# schema=uavfarm.metrics/1\na,b\n1\n");
  CHECK_THROWS(harness::read_metrics_csv(ragged));
  std::istringstream text("# schema=uavfarm.metrics/1\na,b\n1,x\n");
  CHECK_THROWS(harness::read_metrics_csv(text));
}

TEST_CASE("train writes every artifact and one row per episode") {
  const fs::path dir = scratch("train");
  const RunConfig c = smoke_config(dir.string());
  const auto s = harness::cmd_train(c);
  CHECK(s.log.size() == 10);
  for (const char* f : {"effective_config.cfg", "metrics.csv", "timings.csv", "checkpoint.bin", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto t = harness::load_metrics_csv((dir / "metrics.csv").string());
  CHECK(t.rows.size() == 10);
  CHECK(t.series("eia_event")[9] == 1);  // first imitation event at episode 10

  std::istringstream echoed(slurp(dir / "effective_config.cfg"));
  CHECK(config_to_string(parse_config(echoed)) == config_to_string(c));

  const fs::path again = scratch("train_again");
  harness::cmd_train(smoke_config(again.string()));
  CHECK(slurp(dir / "metrics.csv") == slurp(again / "metrics.csv"));

  // eval from the checkpoint
  RunConfig e = c;
  e.run.out = (dir / "eval").string();
  const auto ev = harness::cmd_eval(e, (dir / "checkpoint.bin").string(), "", 2);
  CHECK(ev.episodes.size() == 2);
  std::ifstream traj(dir / "eval" / "trajectory.jsonl");
  int lines = 0;
  for (std::string l; std::getline(traj, l);) ++lines;
  CHECK(lines == 2 * 15 * 3);

  // plot data
  harness::cmd_plotdata((dir / "metrics.csv").string(), (dir / "plot").string(), 4);
  for (const char* f : {"reward.dat", "aoi.dat", "vdf.dat"}) CHECK(fs::exists(dir / "plot" / f));

  RunConfig wrong = e;
  wrong.fleet.n_m = 2;
  CHECK_THROWS(harness::cmd_eval(wrong, (dir / "checkpoint.bin").string(), "", 1));
}

TEST_CASE("scenario files reload into the same pool and drive eval") {
  const fs::path dir = scratch("scen");
  RunConfig c = smoke_config(dir.string());
  const auto paths = harness::cmd_gen_scenarios(c);
  REQUIRE(paths.size() == 2);
  const auto pool = marl::make_scenario_pool(c);
  CHECK(load_scenario(paths[1]) == *pool[1]);
}

TEST_CASE("scale reports one row per size and rejects odd fleets") {
  const fs::path dir = scratch("scale");
  RunConfig c = smoke_config(dir.string());
  c.train.steps = 30;
  const auto rows = harness::cmd_scale(c, {3, 6});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_uav == 3);
  CHECK(rows[0].timed_steps == 27);
  CHECK(rows[1].per_agent_ms > 0);
  CHECK_THROWS_AS(harness::cmd_scale(c, {4}), ConfigError);
}

TEST_CASE("fingerprint is stable FNV-1a") {
  CHECK(harness::fingerprint("") == "cbf29ce484222325");
  CHECK(harness::fingerprint("a") == "af63dc4c8601ec8c");
}
