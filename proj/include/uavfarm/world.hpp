#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uavfarm/config.hpp"

namespace uavfarm {

enum class Role { communication, monitoring, collection };

/// 'c', 'm' or 'd'.
char role_tag(Role role);
const char* role_name(Role role);

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sensor {
  Eigen::Vector2d position;
  int type = 0;  // 0-based index into Scenario::type_cycles
};

/// Immutable description of one farm: bounds, sensor field, plot/grid layout
/// and the freshness clocks. Shared read-only between environments.
struct Scenario {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  double h_c = 0, h_m = 0, h_d = 0;
  double v_x_max = 0, v_y_max = 0;
  std::vector<Sensor> sensors;
  std::vector<double> type_cycles;
  int n_px = 1, n_py = 1, n_gx = 1, n_gy = 1;
  int aoi_max = 1, vdf_max = 1;
  double t_step = 1, t_v = 1;
  std::uint64_t seed = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double diagonal() const;
  double altitude(Role role) const;
  int plot_count() const { return n_px * n_py; }
  int plot_index(int px, int py) const { return py * n_px + px; }
  Eigen::Vector2d plot_center(int plot) const;
  Eigen::Vector2d grid_center(int plot, int gx, int gy) const;
  /// Plot cell containing `p` (points on the max edge belong to the last cell).
  std::pair<int, int> plot_of(const Eigen::Vector2d& p) const;
  bool contains(const Eigen::Vector2d& p) const;
  /// Throws ScenarioError on any broken invariant.
  void validate() const;

  bool operator==(const Scenario&) const;
};

/// Places `world.n_ws` sensors by rejection sampling with pairwise spacing
/// >= world.ws_min_spacing; types are assigned round-robin.
Scenario generate_scenario(const RunConfig& config, std::uint64_t seed);

/// Versioned text form. Doubles are written shortest-round-trip, so
/// read(write(s)) == s bit for bit.
void write_scenario(std::ostream& out, const Scenario& scenario);
Scenario read_scenario(std::istream& in);
void save_scenario(const std::string& path, const Scenario& scenario);
Scenario load_scenario(const std::string& path);

struct UavState {
  Role role = Role::communication;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double cumulative_energy = 0.0;
  bool out_of_bounds = false;  // pre-clamp position left the map this step
};

/// Clips the commanded velocity per axis, integrates one step and clamps to
/// the map. Throws std::domain_error on a non-finite action.
UavState step_kinematics(const UavState& state, const Eigen::Vector2d& action, const Scenario& scenario,
                         double dt);

struct FreshnessState {
  std::vector<int> aoi;  // per sensor, [0, aoi_max]
  std::vector<int> vdf;  // per plot, [0, vdf_max]
  std::vector<std::pair<int, int>> last_step_collections;  // (uav, sensor)
  std::vector<std::pair<int, int>> last_step_captures;     // (uav, plot)
};

/// True when t is an integer multiple of period (t = 0 counts).
bool is_multiple(double t, double period);

/// AoI update for time t: reset on success, hold off-cycle, otherwise +1 capped.
void update_aoi(FreshnessState& freshness, const Scenario& scenario, const std::vector<bool>& collected,
                double t);
/// VDF update for time t, same three cases with the shared t_v clock.
void update_vdf(FreshnessState& freshness, const Scenario& scenario, const std::vector<bool>& captured,
                double t);

/// 1 if the nearest monitor is strictly closer than d_th to the ground point.
int grid_quality(const Eigen::Vector2d& grid_center, std::span<const Eigen::Vector3d> monitors, double d_th);
/// Mean grid quality over the plot's n_gx x n_gy grid centers.
double plot_quality(int plot, std::span<const Eigen::Vector3d> monitors, const Scenario& scenario, double d_th);
int monitoring_success(double plot_quality, double q_th);

}  // namespace uavfarm
