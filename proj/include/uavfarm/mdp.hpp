#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavfarm/comms.hpp"
#include "uavfarm/config.hpp"
#include "uavfarm/rng.hpp"
#include "uavfarm/world.hpp"

namespace uavfarm {

/// Quadrants relative to a UAV, in tie-break order.
enum Quadrant : int { kNorthEast = 0, kNorthWest = 1, kSouthWest = 2, kSouthEast = 3 };

/// Unit diagonal direction of a quadrant.
Eigen::Vector2d quadrant_direction(int quadrant);

/// Index of the largest of four sums; ties go to the earliest quadrant.
int argmax_quadrant(const std::array<double, 4>& sums);

/// Per-agent reward terms. Fields that do not apply to a role stay zero.
struct RewardBreakdown {
  double d_c_delta = 0;     // D_c(k) - D_c(k-1)
  double energy_delta = 0;  // joules spent this step
  double sr = 0;            // clamped closing distance inside the danger zone
  double act = 0;           // boundary violation indicator
  double vmuf = 0;
  double p_m = 0;
  double m_v = 0;
  double dcuf = 0;
  double p_c = 0;
  double m_d = 0;
  double total = 0;
};

/// The weighted, t_step-scaled sum of the breakdown's terms. Every reward's
/// `total` is produced by this function, so recomposition is bit exact.
double recompose(const RewardBreakdown& r, const RewardWeights& w, double t_step);

struct WorldState {
  std::vector<UavState> uavs;
  FreshnessState freshness;
  int step = 0;
  comms::Assignment assignment;
  std::vector<double> service;           // D_c per agent (communication UAVs only)
  std::vector<double> nearest_distance;  // 3D distance to the closest other UAV, +inf if alone
  std::vector<double> step_energy;       // joules spent in the last step
  std::vector<double> dcuf;              // pre-reset AoI harvested this step
  std::vector<double> vmuf;              // pre-reset VDF harvested this step
  std::vector<int> quadrant;             // stalest quadrant per agent, -1 for communication UAVs
};

struct StepInfo {
  int step = 0;
  double mean_aoi = 0;
  double mean_vdf = 0;
  std::array<double, 3> per_role_reward{};  // mean total reward of c, m, d agents
  double energy_j = 0;                      // fleet cumulative energy
  int collisions_risk_steps = 0;            // agents inside the danger zone this step
  int boundary_violations = 0;              // agents clamped at the boundary this step
};

struct StepResult {
  std::vector<Eigen::VectorXd> observations;
  std::vector<RewardBreakdown> rewards;
  bool done = false;
  StepInfo info;
};

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// d_safety = 2 * sqrt(V_x_max^2 + V_y_max^2).
double safety_distance(const Scenario& scenario);

/// Signed SR: d_U(k) - d_U(k-1) inside the danger zone, 0 outside.
double safety_risk(int agent, const WorldState& prev, const WorldState& now, double d_safety);
/// 1 if the agent's pre-clamp position left the map this step.
int boundary_penalty(int agent, const WorldState& now);

RewardBreakdown reward_comm(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                            double t_step, double d_safety);
RewardBreakdown reward_monitor(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                               double t_step, double d_safety);
RewardBreakdown reward_collect(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                               double t_step, double d_safety);

int observation_size(Role role, const FleetParams& fleet);

/// Role-specific observation, every entry in [0, 1].
Eigen::VectorXd build_observation(int agent, const WorldState& world, const Scenario& scenario,
                                  const FleetParams& fleet);

/// Multi-UAV farm environment. Agents are ordered communication, monitoring,
/// collection. One instance per thread.
class FarmEnv {
 public:
  explicit FarmEnv(RunConfig config);

  const std::vector<Eigen::VectorXd>& reset(std::shared_ptr<const Scenario> scenario, std::uint64_t episode_seed);
  StepResult step(std::span<const Eigen::Vector2d> actions);

  int agent_count() const { return static_cast<int>(roles_.size()); }
  Role role_of(int agent) const { return roles_[static_cast<std::size_t>(agent)]; }
  const std::vector<Role>& roles() const { return roles_; }
  const WorldState& state() const { return world_; }
  const Scenario& scenario() const { return *scenario_; }
  const RunConfig& config() const { return config_; }
  const std::vector<Eigen::VectorXd>& observations() const { return observations_; }
  bool done() const { return world_.step >= config_.train.steps; }
  double d_safety() const { return d_safety_; }

 private:
  void refresh_derived(WorldState& w) const;
  void run_collection(const WorldState& prev, WorldState& now, std::vector<bool>& collected);
  void run_monitoring(const WorldState& prev, WorldState& now, std::vector<bool>& captured) const;
  void build_observations();

  RunConfig config_;
  std::vector<Role> roles_;
  std::shared_ptr<const Scenario> scenario_;
  WorldState world_;
  std::vector<Eigen::VectorXd> observations_;
  Rng rng_;
  double d_safety_ = 0;
  bool started_ = false;
};

}  // namespace uavfarm
