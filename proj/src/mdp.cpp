#include "uavfarm/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "uavfarm/energy.hpp"

namespace uavfarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int quadrant_of(const Eigen::Vector2d& origin, const Eigen::Vector2d& p) {
  const bool east = p.x() >= origin.x();
  const bool north = p.y() >= origin.y();
  if (north) return east ? kNorthEast : kNorthWest;
  return east ? kSouthEast : kSouthWest;
}

Eigen::Vector3d sensor_ground(const Sensor& s) { return {s.position.x(), s.position.y(), 0.0}; }

struct Normalizer {
  const Scenario& s;
  double x(double v) const { return std::clamp((v - s.x_min) / s.width(), 0.0, 1.0); }
  double y(double v) const { return std::clamp((v - s.y_min) / s.height(), 0.0, 1.0); }
  double d(double v) const { return std::clamp(v / s.diagonal(), 0.0, 1.0); }
};

// Writes (x, y, distance) of `target` relative to `self`, or the sentinel
// (own position, `missing`) when there is no target.
void put_point(Eigen::VectorXd& o, int& k, const Normalizer& n, const Eigen::Vector3d& self,
               const Eigen::Vector3d* target, double missing) {
  if (target) {
    o[k++] = n.x(target->x());
    o[k++] = n.y(target->y());
    o[k++] = n.d((*target - self).norm());
  } else {
    o[k++] = n.x(self.x());
    o[k++] = n.y(self.y());
    o[k++] = missing;
  }
}

const Eigen::Vector3d* nearest_uav(int agent, const WorldState& w, bool same_role_only) {
  const auto& me = w.uavs[static_cast<std::size_t>(agent)];
  const Eigen::Vector3d* best = nullptr;
  double best_d = kInf;
  for (std::size_t j = 0; j < w.uavs.size(); ++j) {
    if (static_cast<int>(j) == agent) continue;
    if (same_role_only && w.uavs[j].role != me.role) continue;
    const double d = (w.uavs[j].position - me.position).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = &w.uavs[j].position;
    }
  }
  return best;
}

void put_one_hot(Eigen::VectorXd& o, int& k, int quadrant) {
  for (int q = 0; q < 4; ++q) o[k++] = (q == quadrant) ? 1.0 : 0.0;
}

}  // namespace

Eigen::Vector2d quadrant_direction(int quadrant) {
  const double h = std::numbers::sqrt2 / 2.0;
  switch (quadrant) {
    case kNorthEast: return {h, h};
    case kNorthWest: return {-h, h};
    case kSouthWest: return {-h, -h};
    case kSouthEast: return {h, -h};
    default: return {0.0, 0.0};
  }
}

int argmax_quadrant(const std::array<double, 4>& sums) {
  int best = 0;
  for (int q = 1; q < 4; ++q) {
    if (sums[static_cast<std::size_t>(q)] > sums[static_cast<std::size_t>(best)]) best = q;
  }
  return best;
}

double recompose(const RewardBreakdown& r, const RewardWeights& w, double t_step) {
  const double sign = w.comm_reward_reduce ? -1.0 : 1.0;
  const double sum = sign * w.alpha1 * r.d_c_delta - w.alpha2 * r.energy_delta - w.alpha3 * r.sr -
                     w.alpha4 * r.act + w.alpha5 * r.vmuf - w.alpha6 * r.p_m + w.alpha7 * r.m_v +
                     w.alpha8 * r.dcuf - w.alpha9 * r.p_c + w.alpha10 * r.m_d;
  return sum * t_step;
}

double safety_distance(const Scenario& scenario) {
  return 2.0 * std::sqrt(scenario.v_x_max * scenario.v_x_max + scenario.v_y_max * scenario.v_y_max);
}

double safety_risk(int agent, const WorldState& prev, const WorldState& now, double d_safety) {
  const auto a = static_cast<std::size_t>(agent);
  const double d_now = now.nearest_distance[a];
  if (!(d_now < d_safety)) return 0.0;
  return d_now - prev.nearest_distance[a];
}

int boundary_penalty(int agent, const WorldState& now) {
  return now.uavs[static_cast<std::size_t>(agent)].out_of_bounds ? 1 : 0;
}

namespace {

RewardBreakdown common_terms(int agent, const WorldState& prev, const WorldState& now, double d_safety) {
  RewardBreakdown r;
  r.energy_delta = now.step_energy[static_cast<std::size_t>(agent)];
  r.sr = std::max(0.0, -safety_risk(agent, prev, now, d_safety));
  r.act = boundary_penalty(agent, now);
  return r;
}

double motivation(int agent, const WorldState& prev, const WorldState& now) {
  const auto a = static_cast<std::size_t>(agent);
  const int q = prev.quadrant[a];
  if (q < 0) return 0.0;
  return now.uavs[a].velocity.dot(quadrant_direction(q)) > 0.0 ? 1.0 : 0.0;
}

}  // namespace

RewardBreakdown reward_comm(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                            double t_step, double d_safety) {
  RewardBreakdown r = common_terms(agent, prev, now, d_safety);
  const auto a = static_cast<std::size_t>(agent);
  r.d_c_delta = now.service[a] - prev.service[a];
  r.total = recompose(r, w, t_step);
  return r;
}

RewardBreakdown reward_monitor(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                               double t_step, double d_safety) {
  RewardBreakdown r = common_terms(agent, prev, now, d_safety);
  r.vmuf = now.vmuf[static_cast<std::size_t>(agent)];
  r.p_m = r.vmuf == 0.0 ? 1.0 : 0.0;
  r.m_v = motivation(agent, prev, now);
  r.total = recompose(r, w, t_step);
  return r;
}

RewardBreakdown reward_collect(int agent, const WorldState& prev, const WorldState& now, const RewardWeights& w,
                               double t_step, double d_safety) {
  RewardBreakdown r = common_terms(agent, prev, now, d_safety);
  r.dcuf = now.dcuf[static_cast<std::size_t>(agent)];
  r.p_c = r.dcuf == 0.0 ? 1.0 : 0.0;
  r.m_d = motivation(agent, prev, now);
  r.total = recompose(r, w, t_step);
  return r;
}

int observation_size(Role role, const FleetParams& fleet) {
  switch (role) {
    case Role::communication: return 17;
    case Role::monitoring: return 18;
    case Role::collection: return fleet.obs_nearest_ws + 9;
  }
  return 0;
}

Eigen::VectorXd build_observation(int agent, const WorldState& w, const Scenario& s, const FleetParams& fleet) {
  const auto a = static_cast<std::size_t>(agent);
  const UavState& me = w.uavs[a];
  const Normalizer n{s};
  Eigen::VectorXd o(observation_size(me.role, fleet));
  int k = 0;
  o[k++] = n.x(me.position.x());
  o[k++] = n.y(me.position.y());

  switch (me.role) {
    case Role::communication: {
      std::vector<Eigen::Vector3d> comm_positions;
      for (const auto& u : w.uavs) {
        if (u.role == Role::communication) comm_positions.push_back(u.position);
      }
      put_point(o, k, n, me.position, nearest_uav(agent, w, true), 1.0);
      const Eigen::Vector3d comm_centroid =
          std::accumulate(comm_positions.begin(), comm_positions.end(), Eigen::Vector3d(Eigen::Vector3d::Zero())) /
          static_cast<double>(comm_positions.size());
      put_point(o, k, n, me.position, &comm_centroid, 0.0);

      // Served set: clients are indexed after the communication agents.
      const int n_comm = static_cast<int>(comm_positions.size());
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      const Eigen::Vector3d* farthest = nullptr;
      double far_d = -1.0;
      int served = 0;
      for (const auto& [server, client] : w.assignment.pairs) {
        if (server != agent) continue;
        const auto& p = w.uavs[static_cast<std::size_t>(n_comm + client)].position;
        centroid += p;
        ++served;
        const double d = (p - me.position).norm();
        if (d > far_d) {
          far_d = d;
          farthest = &p;
        }
      }
      if (served > 0) {
        centroid /= served;
        put_point(o, k, n, me.position, &centroid, 0.0);
      } else {
        put_point(o, k, n, me.position, nullptr, 0.0);
      }
      put_point(o, k, n, me.position, farthest, 0.0);
      put_point(o, k, n, me.position, nearest_uav(agent, w, false), 1.0);
      break;
    }
    case Role::monitoring: {
      const auto [px, py] = s.plot_of(me.position.head<2>());
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = px + dx;
          const int y = py + dy;
          if (x < 0 || y < 0 || x >= s.n_px || y >= s.n_py) {
            o[k++] = 1.0;
          } else {
            o[k++] = static_cast<double>(w.freshness.vdf[static_cast<std::size_t>(s.plot_index(x, y))]) / s.vdf_max;
          }
        }
      }
      put_one_hot(o, k, w.quadrant[a]);
      put_point(o, k, n, me.position, nearest_uav(agent, w, false), 1.0);
      break;
    }
    case Role::collection: {
      const int kn = fleet.obs_nearest_ws;
      std::vector<std::pair<double, std::size_t>> by_distance;
      by_distance.reserve(s.sensors.size());
      for (std::size_t j = 0; j < s.sensors.size(); ++j) {
        by_distance.emplace_back((s.sensors[j].position - me.position.head<2>()).squaredNorm(), j);
      }
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(kn), by_distance.size());
      std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(take),
                        by_distance.end());
      for (int i = 0; i < kn; ++i) {
        if (static_cast<std::size_t>(i) < take) {
          o[k++] = static_cast<double>(w.freshness.aoi[by_distance[static_cast<std::size_t>(i)].second]) / s.aoi_max;
        } else {
          o[k++] = 0.0;
        }
      }
      put_one_hot(o, k, w.quadrant[a]);
      put_point(o, k, n, me.position, nearest_uav(agent, w, true), 1.0);
      break;
    }
  }
  return o;
}

FarmEnv::FarmEnv(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& f = config_.fleet;
  roles_.insert(roles_.end(), static_cast<std::size_t>(f.n_c), Role::communication);
  roles_.insert(roles_.end(), static_cast<std::size_t>(f.n_m), Role::monitoring);
  roles_.insert(roles_.end(), static_cast<std::size_t>(f.n_d), Role::collection);
}

void FarmEnv::refresh_derived(WorldState& w) const {
  const Scenario& s = *scenario_;
  const std::size_t n = w.uavs.size();
  const int n_c = config_.fleet.n_c;

  // Communication assignment and service metric.
  w.service.assign(n, 0.0);
  w.assignment = {};
  const int n_clients = static_cast<int>(n) - n_c;
  if (n_c > 0 && n_clients > 0) {
    Eigen::MatrixXd cost(n_c, n_clients);
    for (int sv = 0; sv < n_c; ++sv) {
      for (int c = 0; c < n_clients; ++c) {
        cost(sv, c) = (w.uavs[static_cast<std::size_t>(sv)].position -
                       w.uavs[static_cast<std::size_t>(n_c + c)].position)
                          .norm();
      }
    }
    w.assignment = comms::hungarian_assign(cost);
  }
  if (n_c > 0) {
    std::vector<Eigen::Vector3d> servers, clients;
    for (std::size_t i = 0; i < n; ++i) {
      (static_cast<int>(i) < n_c ? servers : clients).push_back(w.uavs[i].position);
    }
    for (int sv = 0; sv < n_c; ++sv) {
      w.service[static_cast<std::size_t>(sv)] =
          comms::service_metric(sv, servers, clients, w.assignment, config_.service);
    }
  }

  w.nearest_distance.assign(n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (w.uavs[i].position - w.uavs[j].position).norm();
      w.nearest_distance[i] = std::min(w.nearest_distance[i], d);
      w.nearest_distance[j] = std::min(w.nearest_distance[j], d);
    }
  }

  w.quadrant.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d origin = w.uavs[i].position.head<2>();
    std::array<double, 4> sums{};
    if (w.uavs[i].role == Role::collection) {
      for (std::size_t j = 0; j < s.sensors.size(); ++j) {
        sums[static_cast<std::size_t>(quadrant_of(origin, s.sensors[j].position))] += w.freshness.aoi[j];
      }
    } else if (w.uavs[i].role == Role::monitoring) {
      for (int p = 0; p < s.plot_count(); ++p) {
        sums[static_cast<std::size_t>(quadrant_of(origin, s.plot_center(p)))] +=
            w.freshness.vdf[static_cast<std::size_t>(p)];
      }
    } else {
      continue;
    }
    w.quadrant[i] = argmax_quadrant(sums);
  }
}

const std::vector<Eigen::VectorXd>& FarmEnv::reset(std::shared_ptr<const Scenario> scenario,
                                                   std::uint64_t episode_seed) {
  if (!scenario) throw EnvError("reset: null scenario");
  scenario_ = std::move(scenario);
  const Scenario& s = *scenario_;
  rng_.seed(episode_seed);

  world_ = {};
  std::uniform_real_distribution<double> ux(s.x_min, s.x_max);
  std::uniform_real_distribution<double> uy(s.y_min, s.y_max);
  for (Role role : roles_) {
    UavState u;
    u.role = role;
    const double x = ux(rng_);
    const double y = uy(rng_);
    u.position = {x, y, s.altitude(role)};
    world_.uavs.push_back(u);
  }

  const auto& init = config_.world.initial_freshness;
  auto draw = [&](int cap) {
    if (init == "zero") return 0;
    if (init == "max") return cap;
    return std::uniform_int_distribution<int>(0, cap)(rng_);
  };
  world_.freshness.aoi.resize(s.sensors.size());
  for (auto& v : world_.freshness.aoi) v = draw(s.aoi_max);
  world_.freshness.vdf.resize(static_cast<std::size_t>(s.plot_count()));
  for (auto& v : world_.freshness.vdf) v = draw(s.vdf_max);

  const std::size_t n = roles_.size();
  world_.step_energy.assign(n, 0.0);
  world_.dcuf.assign(n, 0.0);
  world_.vmuf.assign(n, 0.0);
  refresh_derived(world_);
  d_safety_ = safety_distance(s);
  started_ = true;
  build_observations();
  return observations_;
}

void FarmEnv::run_collection(const WorldState& prev, WorldState& now, std::vector<bool>& collected) {
  const Scenario& s = *scenario_;
  const auto& link = config_.link;
  std::vector<int> collectors;
  for (std::size_t i = 0; i < now.uavs.size(); ++i) {
    if (now.uavs[i].role == Role::collection) collectors.push_back(static_cast<int>(i));
  }
  if (collectors.empty()) return;

  // Each sensor requests its nearest in-range collector.
  std::vector<std::vector<std::size_t>> served(collectors.size());
  for (std::size_t j = 0; j < s.sensors.size(); ++j) {
    const Eigen::Vector3d g = sensor_ground(s.sensors[j]);
    int best = -1;
    double best_d = kInf;
    for (std::size_t u = 0; u < collectors.size(); ++u) {
      const double d = (now.uavs[static_cast<std::size_t>(collectors[u])].position - g).norm();
      if (d <= link.collect_radius && d < best_d) {
        best_d = d;
        best = static_cast<int>(u);
      }
    }
    if (best >= 0) served[static_cast<std::size_t>(best)].push_back(j);
  }

  // Sensors of one collector upload in polling order; in sub-slot r the
  // interferers are the r-th sensors of every other collector.
  std::vector<std::size_t> interferers;
  for (std::size_t u = 0; u < collectors.size(); ++u) {
    const int agent = collectors[u];
    const Eigen::Vector3d& pos = now.uavs[static_cast<std::size_t>(agent)].position;
    for (std::size_t r = 0; r < served[u].size(); ++r) {
      interferers.clear();
      for (std::size_t v = 0; v < collectors.size(); ++v) {
        if (v != u && r < served[v].size()) interferers.push_back(served[v][r]);
      }
      const std::size_t j = served[u][r];
      const auto outcome = comms::attempt_collection(pos, j, interferers, s.sensors, link, rng_);
      if (outcome == comms::CollectionOutcome::success) {
        collected[j] = true;
        now.dcuf[static_cast<std::size_t>(agent)] += prev.freshness.aoi[j];
        now.freshness.last_step_collections.emplace_back(agent, static_cast<int>(j));
      }
    }
  }
}

void FarmEnv::run_monitoring(const WorldState& prev, WorldState& now, std::vector<bool>& captured) const {
  const Scenario& s = *scenario_;
  const double d_th = config_.world.d_th;
  const double pw = s.width() / s.n_px;
  const double ph = s.height() / s.n_py;
  for (std::size_t i = 0; i < now.uavs.size(); ++i) {
    if (now.uavs[i].role != Role::monitoring) continue;
    const Eigen::Vector3d& pos = now.uavs[i].position;
    const std::span<const Eigen::Vector3d> me(&pos, 1);
    const auto [ox, oy] = s.plot_of(pos.head<2>());
    const int rx = static_cast<int>(std::ceil(d_th / pw)) + 1;
    const int ry = static_cast<int>(std::ceil(d_th / ph)) + 1;
    for (int py = std::max(0, oy - ry); py <= std::min(s.n_py - 1, oy + ry); ++py) {
      for (int px = std::max(0, ox - rx); px <= std::min(s.n_px - 1, ox + rx); ++px) {
        const int plot = s.plot_index(px, py);
        const Eigen::Vector2d c = s.plot_center(plot);
        const bool candidate = (px == ox && py == oy) || (Eigen::Vector3d(c.x(), c.y(), 0.0) - pos).norm() < d_th;
        if (!candidate) continue;
        if (monitoring_success(plot_quality(plot, me, s, d_th), config_.world.q_th)) {
          captured[static_cast<std::size_t>(plot)] = true;
          now.vmuf[i] += prev.freshness.vdf[static_cast<std::size_t>(plot)];
          now.freshness.last_step_captures.emplace_back(static_cast<int>(i), plot);
        }
      }
    }
  }
}

StepResult FarmEnv::step(std::span<const Eigen::Vector2d> actions) {
  if (!started_) throw EnvError("step: reset() has not been called");
  if (done()) throw EnvError("step: episode is done; call reset()");
  if (actions.size() != roles_.size()) {
    throw EnvError("step: expected " + std::to_string(roles_.size()) + " actions, got " +
                   std::to_string(actions.size()));
  }
  const Scenario& s = *scenario_;
  const std::size_t n = roles_.size();
  const double dt = s.t_step;

  const WorldState prev = world_;
  WorldState& now = world_;
  now.step = prev.step + 1;
  now.freshness.last_step_collections.clear();
  now.freshness.last_step_captures.clear();
  now.dcuf.assign(n, 0.0);
  now.vmuf.assign(n, 0.0);

  // (1) kinematics
  for (std::size_t i = 0; i < n; ++i) now.uavs[i] = step_kinematics(prev.uavs[i], actions[i], s, dt);

  // (2)-(3) collection attempts and captures at the new positions
  std::vector<bool> collected(s.sensors.size(), false);
  std::vector<bool> captured(static_cast<std::size_t>(s.plot_count()), false);
  run_collection(prev, now, collected);
  run_monitoring(prev, now, captured);

  // (4) freshness
  const double t = now.step * dt;
  update_aoi(now.freshness, s, collected, t);
  update_vdf(now.freshness, s, captured, t);

  // (5) energy
  now.step_energy.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = energy::step_energy(now.uavs[i], config_.energy, dt);
    now.step_energy[i] = e;
    now.uavs[i].cumulative_energy += e;
  }

  // re-assignment, distances and quadrants for the new state
  refresh_derived(now);

  // (6) rewards
  StepResult result;
  result.rewards.resize(n);
  std::array<double, 3> role_sum{};
  std::array<int, 3> role_count{};
  for (std::size_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(i);
    switch (roles_[i]) {
      case Role::communication:
        result.rewards[i] = reward_comm(a, prev, now, config_.reward, dt, d_safety_);
        break;
      case Role::monitoring:
        result.rewards[i] = reward_monitor(a, prev, now, config_.reward, dt, d_safety_);
        break;
      case Role::collection:
        result.rewards[i] = reward_collect(a, prev, now, config_.reward, dt, d_safety_);
        break;
    }
    const auto r = static_cast<std::size_t>(roles_[i]);
    role_sum[r] += result.rewards[i].total;
    ++role_count[r];
  }

  // (7) observations
  build_observations();
  result.observations = observations_;
  result.done = done();

  auto& info = result.info;
  info.step = now.step;
  info.mean_aoi = now.freshness.aoi.empty()
                      ? 0.0
                      : std::accumulate(now.freshness.aoi.begin(), now.freshness.aoi.end(), 0.0) /
                            static_cast<double>(now.freshness.aoi.size());
  info.mean_vdf = std::accumulate(now.freshness.vdf.begin(), now.freshness.vdf.end(), 0.0) /
                  static_cast<double>(now.freshness.vdf.size());
  for (std::size_t r = 0; r < 3; ++r) info.per_role_reward[r] = role_count[r] ? role_sum[r] / role_count[r] : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    info.energy_j += now.uavs[i].cumulative_energy;
    if (now.nearest_distance[i] < d_safety_) ++info.collisions_risk_steps;
    if (now.uavs[i].out_of_bounds) ++info.boundary_violations;
  }
  return result;
}

void FarmEnv::build_observations() {
  observations_.resize(roles_.size());
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    observations_[i] = build_observation(static_cast<int>(i), world_, *scenario_, config_.fleet);
  }
}

}  // namespace uavfarm
