#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "uavfarm/config.hpp"
#include "uavfarm/mdp.hpp"
#include "uavfarm/nn.hpp"
#include "uavfarm/rng.hpp"
#include "uavfarm/world.hpp"

namespace uavfarm::marl {

/// beta1 * mean + beta2 * population variance. Throws on an empty input.
double elite_score(std::span<const double> rewards, double beta1, double beta2);

/// Argmax of the scores, lowest index on ties.
int select_elite(std::span<const double> scores);

/// Blends every non-elite actor toward the elite with coefficient theta.
void imitate_elite(std::span<nn::Mlp* const> actors, int elite, double theta);

/// Imitation timetable: the first event is at episode delta0, then theta
/// halves, delta doubles and the next event is delta episodes later.
struct EiaSchedule {
  double theta = 0.1;
  int delta = 10;
  int next_event = 10;

  EiaSchedule() = default;
  EiaSchedule(double theta0, int delta0) : theta(theta0), delta(delta0), next_event(delta0) {}
  bool due(int episode) const { return episode == next_event; }
  void advance();
};

/// Mixing weights of the predicted value: local first, then one per member.
std::vector<double> mixing_weights(double epsilon, int k_s);

/// Column-wise [obs; act].
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act);

/// epsilon * Q_local + (1 - epsilon) * mean(Q_ensemble); Q_local alone when
/// the ensemble is empty.
Eigen::RowVectorXd predicted_q(const nn::Mlp& local, std::span<const nn::Mlp> ensemble, const Eigen::MatrixXd& input,
                               double epsilon);

/// r + gamma * Q'(o', actor(o')).
Eigen::RowVectorXd bootstrap_target(const nn::Mlp& target_critic, const nn::Mlp& actor, const nn::Batch& batch,
                                    double gamma);

/// Same, bootstrapping on the mixed prediction of the target critic and the ensemble.
Eigen::RowVectorXd bootstrap_target(const nn::Mlp& target_critic, std::span<const nn::Mlp> ensemble,
                                    const nn::Mlp& actor, const nn::Batch& batch, double gamma, double epsilon);

struct CriticLoss {
  double loss = 0;
  Eigen::VectorXd grad_local;
  std::vector<Eigen::VectorXd> grad_ensemble;
};

/// mean((Q_P - y)^2) and its gradients for the local critic and each member.
CriticLoss critic_loss(const nn::Mlp& local, std::span<const nn::Mlp> ensemble, const Eigen::MatrixXd& input,
                       const Eigen::RowVectorXd& y, double epsilon);

struct ActorObjective {
  double value = 0;      // mean Q(o, actor(o))
  Eigen::VectorXd grad;  // d value / d actor params
};

ActorObjective actor_objective(const nn::Mlp& actor, const nn::Mlp& critic, const Eigen::MatrixXd& obs);

/// Same, against the mixed prediction epsilon * Q_local + members.
ActorObjective actor_objective(const nn::Mlp& actor, const nn::Mlp& critic, std::span<const nn::Mlp> ensemble,
                               const Eigen::MatrixXd& obs, double epsilon);

/// Member k (1-based) moves toward `local` with coefficient tau * k / k_s.
/// Throws ConfigError when a coefficient exceeds 1.
void sec_sync(std::span<nn::Mlp> ensemble, const nn::Mlp& local, double tau);

struct Agent {
  Role role = Role::communication;
  int group = 0;
  nn::Mlp actor, critic, target_critic;
  nn::AdamState actor_opt, critic_opt;
  std::unique_ptr<nn::ReplayBuffer> buffer;
};

struct Group {
  Role role = Role::communication;
  std::vector<int> agents;
  std::vector<nn::Mlp> ensemble;  // empty when SEC is off
  std::vector<nn::AdamState> ensemble_opt;
  EiaSchedule schedule;
};

struct EpisodeMetrics {
  int episode = 0;
  int steps = 0;
  double reward_mean = 0;            // mean per-step reward over all agents
  std::array<double, 3> reward_role{};  // same, per role c, m, d
  double aoi_mean = 0;
  double vdf_mean = 0;
  double energy_j = 0;  // fleet energy at episode end
  long long sr_events = 0;
  long long act_events = 0;
  bool eia_event = false;
  double wallclock_ms = 0;  // never written to the metrics CSV
};

/// Per-step trajectory sample, filled only when requested.
struct TrajectoryPoint {
  int step = 0;
  int uav = 0;
  Role role = Role::communication;
  Eigen::Vector3d position;
};

struct RolloutOptions {
  bool explore = false;
  bool learn = false;
  double noise_sigma_fraction = 0;
  std::vector<bool> frozen_groups;  // actor updates skipped for these groups
  std::vector<std::vector<double>>* agent_rewards = nullptr;  // per agent, per step
  std::vector<TrajectoryPoint>* trajectory = nullptr;
  std::vector<double>* step_latency_ms = nullptr;  // policy + env time per step
};

/// Agent/network container and the EIA-SEC training loop.
class Trainer {
 public:
  explicit Trainer(RunConfig config);

  /// Runs every configured episode; `on_episode` sees each row as it lands.
  std::vector<EpisodeMetrics> train(const std::function<void(const EpisodeMetrics&)>& on_episode = {});
  /// One training episode (1-based index), EIA event included when due.
  EpisodeMetrics train_episode(int episode);

  /// Roll out one episode on `scenario` with the current actors.
  EpisodeMetrics rollout(const std::shared_ptr<const Scenario>& scenario, std::uint64_t episode_seed,
                         const RolloutOptions& options);

  /// One critic step, SEC sync and target update for `agent` on `batch`.
  double critic_update(int agent, const nn::Batch& batch);
  /// One actor ascent step for `agent` on `batch`.
  double actor_update(int agent, const nn::Batch& batch);
  /// Runs the imitation event for `group` and advances its schedule.
  int eia_event(int group, const std::vector<std::vector<double>>& agent_rewards);

  Eigen::Vector2d act(int agent, const Eigen::VectorXd& obs) const;

  const RunConfig& config() const { return config_; }
  FarmEnv& env() { return env_; }
  std::vector<Agent>& agents() { return agents_; }
  const std::vector<Agent>& agents() const { return agents_; }
  std::vector<Group>& groups() { return groups_; }
  const std::vector<std::shared_ptr<const Scenario>>& scenario_pool() const { return pool_; }

  /// Scenario and environment seed used for a given training episode.
  std::shared_ptr<const Scenario> episode_scenario(int episode) const;
  std::uint64_t episode_seed(int episode) const;
  double noise_fraction(int episode) const;

  void save_checkpoint(std::ostream& out) const;
  /// Replaces all networks and optimizer states. Throws std::runtime_error
  /// on a fleet or dimension mismatch.
  void load_checkpoint(std::istream& in);

 private:
  RunConfig config_;
  FarmEnv env_;
  std::vector<std::shared_ptr<const Scenario>> pool_;
  std::vector<Agent> agents_;
  std::vector<Group> groups_;
  Rng noise_rng_;
  nn::Batch batch_;
};

/// The training pool: run.scenario_pool scenarios, each from its own
/// seed derived from run.seed.
std::vector<std::shared_ptr<const Scenario>> make_scenario_pool(const RunConfig& config);

/// Mean of the last `n` rows of a metric (all rows if fewer).
double tail_mean(const std::vector<EpisodeMetrics>& rows, std::size_t n, double EpisodeMetrics::*field);

}  // namespace uavfarm::marl
