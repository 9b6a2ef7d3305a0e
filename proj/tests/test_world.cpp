#include <doctest.h>

#include <random>
#include <sstream>

#include "uavfarm/world.hpp"

using namespace uavfarm;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.x_max = 400;
  s.y_max = 400;
  s.h_c = 22;
  s.h_m = 20;
  s.h_d = 18;
  s.v_x_max = s.v_y_max = 10;
  s.type_cycles = {40, 50, 60};
  s.sensors = {{{10, 10}, 0}, {{200, 200}, 1}, {{390, 5}, 2}};
  s.n_px = s.n_py = 20;
  s.n_gx = s.n_gy = 4;
  s.aoi_max = s.vdf_max = 5;
  s.t_step = 1;
  s.t_v = 30;
  return s;
}

}  // namespace

TEST_CASE("generated sensor fields respect count, bounds, spacing and types") {
  RunConfig c;
  const Scenario s = generate_scenario(c, 42);
  REQUIRE(s.sensors.size() == 400u);
  for (std::size_t i = 0; i < s.sensors.size(); ++i) {
    CHECK(s.contains(s.sensors[i].position));
    CHECK(s.sensors[i].type == static_cast<int>(i % 3));
    for (std::size_t j = i + 1; j < s.sensors.size(); ++j) {
      CHECK((s.sensors[i].position - s.sensors[j].position).norm() >= c.world.ws_min_spacing);
    }
  }
  CHECK(generate_scenario(c, 42) == s);
  CHECK_FALSE(generate_scenario(c, 43) == s);
}

TEST_CASE("impossible spacing is reported") {
  RunConfig c;
  c.world.x_max = c.world.y_max = 20;
  c.world.n_ws = 50;
  c.world.ws_min_spacing = 10;
  CHECK_THROWS_AS(generate_scenario(c, 1), ScenarioError);
}

TEST_CASE("scenario text round-trips exactly") {
  RunConfig c;
  c.world.n_ws = 60;
  const Scenario s = generate_scenario(c, 9);
  std::stringstream buf;
  write_scenario(buf, s);
  CHECK(read_scenario(buf) == s);

  std::istringstream junk("uavfarm-scenario 99\n");
  CHECK_THROWS_AS(read_scenario(junk), ScenarioError);
}

TEST_CASE("full-speed diagonal step moves (10, 10)") {
  const Scenario s = small_scenario();
  UavState u;
  u.position = {100, 100, 20};
  const UavState n = step_kinematics(u, {10, 10}, s, 1.0);
  CHECK(n.position.x() == 110);
  CHECK(n.position.y() == 110);
  CHECK_FALSE(n.out_of_bounds);
}

TEST_CASE("commands are clipped per axis and positions clamped") {
  const Scenario s = small_scenario();
  UavState u;
  u.position = {395, 200, 20};
  const UavState n = step_kinematics(u, {25, -3}, s, 1.0);
  CHECK(n.velocity.x() == 10);
  CHECK(n.velocity.y() == -3);
  CHECK(n.out_of_bounds);  // pre-clamp x = 405
  CHECK(n.position.x() == 400);

  UavState edge;
  edge.position = {400, 100, 20};
  const UavState along = step_kinematics(edge, {0, 10}, s, 1.0);
  CHECK_FALSE(along.out_of_bounds);
  CHECK(along.position.x() == 400);

  CHECK_THROWS_AS(step_kinematics(u, {std::nan(""), 0}, s, 1.0), std::domain_error);
}

TEST_CASE("AoI: reset, hold off-cycle, tick on cycle, cap") {
  const Scenario s = small_scenario();
  FreshnessState f;
  f.aoi = {4, 2, 5};
  update_aoi(f, s, {false, false, false}, 7);  // no cycle
  CHECK(f.aoi == std::vector<int>{4, 2, 5});
  update_aoi(f, s, {false, false, false}, 40);  // type 0 ticks
  CHECK(f.aoi == std::vector<int>{5, 2, 5});
  update_aoi(f, s, {false, true, false}, 120);  // all three cycles divide 120
  CHECK(f.aoi == std::vector<int>{5, 0, 5});
}

TEST_CASE("VDF follows the shared t_v clock") {
  const Scenario s = small_scenario();
  FreshnessState f;
  f.vdf.assign(4, 1);
  update_vdf(f, s, {true, false, false, false}, 30);
  CHECK(f.vdf == std::vector<int>{0, 2, 2, 2});
  update_vdf(f, s, {}, 31);
  CHECK(f.vdf == std::vector<int>{0, 2, 2, 2});
}

TEST_CASE("grid quality uses a strict 3D distance threshold") {
  const Eigen::Vector3d m(0, 0, 20);
  const std::vector<Eigen::Vector3d> ms{m};
  // ground offset 34.64 m at 20 m altitude is exactly 40 m away
  const double edge = std::sqrt(40.0 * 40.0 - 20.0 * 20.0);
  CHECK(grid_quality({edge - 1e-6, 0}, ms, 40) == 1);
  CHECK(grid_quality({edge + 1e-6, 0}, ms, 40) == 0);
  CHECK_THROWS(grid_quality({0, 0}, {}, 40));
}

TEST_CASE("plot quality is the grid mean and success is q >= q_th") {
  const Scenario s = small_scenario();
  const Eigen::Vector2d c = s.plot_center(0);
  const std::vector<Eigen::Vector3d> over{{c.x(), c.y(), 20}};
  CHECK(plot_quality(0, over, s, 40) == 1.0);
  const std::vector<Eigen::Vector3d> far{{300, 300, 20}};
  CHECK(plot_quality(0, far, s, 40) == 0.0);
  CHECK(monitoring_success(0.7, 0.7) == 1);
  CHECK(monitoring_success(0.6875, 0.7) == 0);
}

TEST_CASE("plot indexing and centers") {
  const Scenario s = small_scenario();
  CHECK(s.plot_index(3, 2) == 43);
  CHECK(s.plot_center(43) == Eigen::Vector2d(70, 50));
  CHECK(s.plot_of({400, 400}) == std::pair<int, int>{19, 19});
  CHECK(s.plot_of({0, 0}) == std::pair<int, int>{0, 0});
  CHECK(s.grid_center(0, 0, 0) == Eigen::Vector2d(2.5, 2.5));
}
