#include <doctest.h>

#include <limits>
#include <random>
#include <sstream>

#include "uavfarm/config.hpp"

using namespace uavfarm;

TEST_CASE("defaults carry the table values") {
  RunConfig c;
  CHECK(c.world.x_max == 400.0);
  CHECK(c.world.n_ws == 400);
  CHECK(c.world.ws_cycles == std::vector<double>{40, 50, 60});
  CHECK(c.world.t_v == 30.0);
  CHECK(c.world.d_th == 40.0);
  CHECK(c.world.q_th == 0.7);
  CHECK(c.energy.m_uav == 0.2);
  CHECK(c.energy.p_ec_dbm == 40.0);
  CHECK(c.link.f_c_ghz == 2.8);
  CHECK(c.link.packet_bytes == 20);
  CHECK(c.reward.alpha4 == 10.0);
  CHECK(c.reward.alpha6 == 0.5);
  CHECK(c.train.buffer_size == 65536);
  CHECK(c.train.batch_size == 128);
  CHECK(c.train.episodes == 2000);
  CHECK(c.train.steps == 500);
  CHECK(c.train.theta0 == 0.1);
  CHECK(c.train.delta0 == 10);
  CHECK(c.train.k_s == 2);
  CHECK(c.fleet.total() == 12);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("echoed config reparses to identical text") {
  RunConfig c;
  apply_override(c, "train.lr_actor=3.3e-5");
  apply_override(c, "world.ws_cycles=7,9,11");
  apply_override(c, "train.sec=off");
  const std::string text = config_to_string(c);
  std::istringstream in(text);
  const RunConfig back = parse_config(in);
  CHECK(config_to_string(back) == text);
  CHECK(back.train.lr_actor == 3.3e-5);
  CHECK_FALSE(back.train.sec);
  CHECK(back.world.ws_cycles == std::vector<double>{7, 9, 11});
}

TEST_CASE("every field survives a format/parse round trip") {
  RunConfig c;
  for (const auto& f : config_fields()) {
    const std::string v = f.get(c);
    RunConfig d;
    f.set(d, v);
    CHECK_MESSAGE(f.get(d) == v, f.key);
  }
}

TEST_CASE("unknown keys and bad values are rejected with the key named") {
  RunConfig c;
  try {
    apply_override(c, "world.nope=3");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("world.nope") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_override(c, "train.episodes=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "no_equals_sign"), ConfigError);
  std::istringstream bad("train.gamma 0.5\n");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("validate catches inconsistent settings") {
  RunConfig c;
  c.world.ws_cycles = {40, 50};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.world.q_th = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.world.initial_freshness = "sometimes";
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  std::istringstream in("# header\n\n  train.episodes = 12   # trailing\nfleet.n_c=1\n");
  const RunConfig c = parse_config(in);
  CHECK(c.train.episodes == 12);
  CHECK(c.fleet.n_c == 1);
}

TEST_CASE("format_double is shortest round-trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}
