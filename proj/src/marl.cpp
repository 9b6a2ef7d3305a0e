#include "uavfarm/marl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace uavfarm::marl {

namespace {

constexpr std::uint64_t kPoolTag = 0x9001;
constexpr std::uint64_t kEpisodeTag = 0x9002;
constexpr std::uint64_t kPickTag = 0x9003;
constexpr std::uint64_t kInitTag = 0x9004;
constexpr std::uint64_t kEnsembleTag = 0x9005;
constexpr std::uint64_t kBufferTag = 0x9006;
constexpr std::uint64_t kNoiseTag = 0x9007;
constexpr std::uint64_t kEvalTag = 0x9008;

constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}

void expect_same_shape(const nn::Mlp& have, const nn::Mlp& want, const char* what) {
  if (have.layer_sizes() != want.layer_sizes() || have.output_kind() != want.output_kind()) {
    throw std::runtime_error(std::string("checkpoint: ") + what + " shape does not match the configuration");
  }
}

}  // namespace

double elite_score(std::span<const double> rewards, double beta1, double beta2) {
  if (rewards.empty()) throw std::invalid_argument("elite_score: empty reward vector");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  return beta1 * mean + beta2 * var;
}

int select_elite(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("select_elite: no candidates");
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void imitate_elite(std::span<nn::Mlp* const> actors, int elite, double theta) {
  if (elite < 0 || static_cast<std::size_t>(elite) >= actors.size()) {
    throw std::out_of_range("imitate_elite: elite index");
  }
  const nn::Mlp& best = *actors[static_cast<std::size_t>(elite)];
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (static_cast<int>(i) == elite) continue;
    nn::soft_update(*actors[i], best, theta);
  }
}

void EiaSchedule::advance() {
  theta *= 0.5;
  delta *= 2;
  next_event += delta;
}

std::vector<double> mixing_weights(double epsilon, int k_s) {
  std::vector<double> w{epsilon};
  if (k_s <= 0) return w;
  double partial = epsilon;
  for (int k = 0; k + 1 < k_s; ++k) {
    w.push_back((1.0 - epsilon) / k_s);
    partial += w.back();
  }
  // last member absorbs the rounding so the left-to-right sum is exactly 1
  w.push_back(1.0 - partial);
  return w;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act) {
  if (obs.cols() != act.cols()) throw std::invalid_argument("critic_input: batch size mismatch");
  Eigen::MatrixXd in(obs.rows() + act.rows(), obs.cols());
  in.topRows(obs.rows()) = obs;
  in.bottomRows(act.rows()) = act;
  return in;
}

Eigen::RowVectorXd predicted_q(const nn::Mlp& local, std::span<const nn::Mlp> ensemble, const Eigen::MatrixXd& input,
                               double epsilon) {
  Eigen::RowVectorXd q = local.forward(input).row(0);
  if (ensemble.empty()) return q;
  const auto w = mixing_weights(epsilon, static_cast<int>(ensemble.size()));
  q *= w[0];
  for (std::size_t i = 0; i < ensemble.size(); ++i) q += w[i + 1] * ensemble[i].forward(input).row(0);
  return q;
}

Eigen::RowVectorXd bootstrap_target(const nn::Mlp& target_critic, const nn::Mlp& actor, const nn::Batch& batch,
                                    double gamma) {
  const Eigen::MatrixXd next_act = actor.forward(batch.next_obs);
  const Eigen::RowVectorXd q_next = target_critic.forward(critic_input(batch.next_obs, next_act)).row(0);
  return batch.reward.transpose() + gamma * q_next;
}

Eigen::RowVectorXd bootstrap_target(const nn::Mlp& target_critic, std::span<const nn::Mlp> ensemble,
                                    const nn::Mlp& actor, const nn::Batch& batch, double gamma, double epsilon) {
  const Eigen::MatrixXd next_act = actor.forward(batch.next_obs);
  const Eigen::RowVectorXd q_next = predicted_q(target_critic, ensemble, critic_input(batch.next_obs, next_act), epsilon);
  return batch.reward.transpose() + gamma * q_next;
}

CriticLoss critic_loss(const nn::Mlp& local, std::span<const nn::Mlp> ensemble, const Eigen::MatrixXd& input,
                       const Eigen::RowVectorXd& y, double epsilon) {
  const auto n = static_cast<double>(input.cols());
  nn::Mlp::Cache local_cache;
  const Eigen::RowVectorXd q = local.forward(input, &local_cache).row(0);
  std::vector<nn::Mlp::Cache> caches(ensemble.size());
  Eigen::RowVectorXd qp = q;
  const auto w = mixing_weights(epsilon, static_cast<int>(ensemble.size()));
  if (!ensemble.empty()) {
    qp *= w[0];
    for (std::size_t i = 0; i < ensemble.size(); ++i) qp += w[i + 1] * ensemble[i].forward(input, &caches[i]).row(0);
  }
  const Eigen::RowVectorXd diff = qp - y;
  CriticLoss out;
  out.loss = diff.squaredNorm() / n;
  const Eigen::RowVectorXd g = (2.0 / n) * diff;
  if (ensemble.empty()) {
    out.grad_local = local.backward(local_cache, g);
    return out;
  }
  out.grad_local = local.backward(local_cache, w[0] * g);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    out.grad_ensemble.push_back(ensemble[i].backward(caches[i], w[i + 1] * g));
  }
  return out;
}

ActorObjective actor_objective(const nn::Mlp& actor, const nn::Mlp& critic, const Eigen::MatrixXd& obs) {
  return actor_objective(actor, critic, {}, obs, 1.0);
}

ActorObjective actor_objective(const nn::Mlp& actor, const nn::Mlp& critic, std::span<const nn::Mlp> ensemble,
                               const Eigen::MatrixXd& obs, double epsilon) {
  nn::Mlp::Cache actor_cache, critic_cache;
  const Eigen::MatrixXd act = actor.forward(obs, &actor_cache);
  const Eigen::MatrixXd in = critic_input(obs, act);
  const auto n = static_cast<double>(obs.cols());
  const auto w = mixing_weights(ensemble.empty() ? 1.0 : epsilon, static_cast<int>(ensemble.size()));
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, obs.cols(), 1.0 / n);

  Eigen::RowVectorXd q = w[0] * critic.forward(in, &critic_cache).row(0);
  Eigen::MatrixXd dinput = w[0] * critic.input_gradient(critic_cache, dq);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    nn::Mlp::Cache c;
    q += w[i + 1] * ensemble[i].forward(in, &c).row(0);
    dinput += w[i + 1] * ensemble[i].input_gradient(c, dq);
  }
  ActorObjective out;
  out.value = q.sum() / n;
  out.grad = actor.backward(actor_cache, dinput.bottomRows(act.rows()));
  return out;
}

void sec_sync(std::span<nn::Mlp> ensemble, const nn::Mlp& local, double tau) {
  const auto k_s = static_cast<double>(ensemble.size());
  for (std::size_t k = 1; k <= ensemble.size(); ++k) {
    const double c = tau * static_cast<double>(k) / k_s;
    if (c > 1.0 || c < 0.0) throw ConfigError("sec_sync: coefficient tau*k/k_s must lie in [0, 1]");
    nn::soft_update(ensemble[k - 1], local, c);
  }
}

Trainer::Trainer(RunConfig config)
    : config_(std::move(config)), env_(config_), noise_rng_(derive_seed(config_.run.seed, {kNoiseTag})) {
  const auto seed = config_.run.seed;
  const auto& tp = config_.train;
  if (tp.sec && tp.tau > 1.0) throw ConfigError("train.tau: tau*k/k_s exceeds 1 for k = k_s");

  pool_ = make_scenario_pool(config_);

  const Eigen::Vector2d vmax(config_.world.v_x_max, config_.world.v_y_max);
  auto sizes_with = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), tp.hidden.begin(), tp.hidden.end());
    s.push_back(out);
    return s;
  };

  const std::array<Role, 3> order{Role::communication, Role::monitoring, Role::collection};
  std::array<int, 3> group_of{-1, -1, -1};
  for (Role r : order) {
    bool present = std::find(env_.roles().begin(), env_.roles().end(), r) != env_.roles().end();
    if (!present) continue;
    Group g;
    g.role = r;
    g.schedule = EiaSchedule(tp.theta0, tp.delta0);
    group_of[static_cast<std::size_t>(r)] = static_cast<int>(groups_.size());
    groups_.push_back(std::move(g));
  }

  for (int i = 0; i < env_.agent_count(); ++i) {
    Agent a;
    a.role = env_.role_of(i);
    a.group = group_of[static_cast<std::size_t>(a.role)];
    const int obs = observation_size(a.role, config_.fleet);
    a.actor = nn::Mlp(sizes_with(obs, 2), nn::OutputKind::tanh_scaled, vmax);
    a.critic = nn::Mlp(sizes_with(obs + 2, 1), nn::OutputKind::identity);
    Rng init(derive_seed(seed, {kInitTag, static_cast<std::uint64_t>(i)}));
    a.actor.init_uniform(init);
    a.critic.init_uniform(init);
    a.target_critic = a.critic;
    a.actor_opt = nn::AdamState(a.actor.param_count(), tp.lr_actor, tp.adam_beta1, tp.adam_beta2, tp.adam_eps);
    a.critic_opt = nn::AdamState(a.critic.param_count(), tp.lr_critic, tp.adam_beta1, tp.adam_beta2, tp.adam_eps);
    a.buffer = std::make_unique<nn::ReplayBuffer>(static_cast<std::size_t>(tp.buffer_size), obs, 2,
                                                  derive_seed(seed, {kBufferTag, static_cast<std::uint64_t>(i)}));
    groups_[static_cast<std::size_t>(a.group)].agents.push_back(i);
    agents_.push_back(std::move(a));
  }

  if (tp.sec) {
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      Group& g = groups_[gi];
      const int obs = observation_size(g.role, config_.fleet);
      Rng init(derive_seed(seed, {kEnsembleTag, static_cast<std::uint64_t>(gi)}));
      for (int k = 0; k < tp.k_s; ++k) {
        nn::Mlp q(sizes_with(obs + 2, 1), nn::OutputKind::identity);
        q.init_uniform(init);
        g.ensemble_opt.emplace_back(q.param_count(), tp.lr_critic, tp.adam_beta1, tp.adam_beta2, tp.adam_eps);
        g.ensemble.push_back(std::move(q));
      }
    }
  }
}

std::shared_ptr<const Scenario> Trainer::episode_scenario(int episode) const {
  const auto pick = derive_seed(config_.run.seed, {kPickTag, static_cast<std::uint64_t>(episode)});
  return pool_[pick % pool_.size()];
}

std::uint64_t Trainer::episode_seed(int episode) const {
  return derive_seed(config_.run.seed, {kEpisodeTag, static_cast<std::uint64_t>(episode)});
}

double Trainer::noise_fraction(int episode) const {
  const auto& tp = config_.train;
  const double span = tp.noise_decay_fraction * tp.episodes;
  const double progress = span > 0 ? std::clamp((episode - 1) / span, 0.0, 1.0) : 1.0;
  return tp.noise_start + (tp.noise_end - tp.noise_start) * progress;
}

Eigen::Vector2d Trainer::act(int agent, const Eigen::VectorXd& obs) const {
  return agents_[static_cast<std::size_t>(agent)].actor.forward_one(obs);
}

double Trainer::critic_update(int agent, const nn::Batch& batch) {
  Agent& a = agents_[static_cast<std::size_t>(agent)];
  Group& g = groups_[static_cast<std::size_t>(a.group)];
  const auto& tp = config_.train;
  const double eps = g.ensemble.empty() ? 1.0 : tp.epsilon;
  const Eigen::RowVectorXd y = tp.sec_mixed_target
                                   ? bootstrap_target(a.target_critic, g.ensemble, a.actor, batch, tp.gamma, eps)
                                   : bootstrap_target(a.target_critic, a.actor, batch, tp.gamma);
  const CriticLoss cl = critic_loss(a.critic, g.ensemble, critic_input(batch.obs, batch.act), y, eps);
  a.critic_opt.step(a.critic, cl.grad_local);
  for (std::size_t k = 0; k < g.ensemble.size(); ++k) g.ensemble_opt[k].step(g.ensemble[k], cl.grad_ensemble[k]);
  if (!g.ensemble.empty()) sec_sync(g.ensemble, a.critic, tp.tau);
  nn::soft_update(a.target_critic, a.critic, tp.xi);
  return cl.loss;
}

double Trainer::actor_update(int agent, const nn::Batch& batch) {
  Agent& a = agents_[static_cast<std::size_t>(agent)];
  const Group& g = groups_[static_cast<std::size_t>(a.group)];
  const ActorObjective obj = config_.train.sec_mixed_actor
                                 ? actor_objective(a.actor, a.critic, g.ensemble, batch.obs, config_.train.epsilon)
                                 : actor_objective(a.actor, a.critic, batch.obs);
  a.actor_opt.step(a.actor, -obj.grad);
  return obj.value;
}

int Trainer::eia_event(int group, const std::vector<std::vector<double>>& agent_rewards) {
  Group& g = groups_[static_cast<std::size_t>(group)];
  std::vector<double> scores;
  std::vector<nn::Mlp*> actors;
  for (int i : g.agents) {
    scores.push_back(elite_score(agent_rewards[static_cast<std::size_t>(i)], config_.train.beta1,
                                 config_.train.beta2));
    actors.push_back(&agents_[static_cast<std::size_t>(i)].actor);
  }
  const int elite = select_elite(scores);
  imitate_elite(actors, elite, g.schedule.theta);
  g.schedule.advance();
  return g.agents[static_cast<std::size_t>(elite)];
}

EpisodeMetrics Trainer::rollout(const std::shared_ptr<const Scenario>& scenario, std::uint64_t episode_seed,
                                const RolloutOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  const int n = env_.agent_count();
  const auto& tp = config_.train;
  EpisodeMetrics m;

  env_.reset(scenario, episode_seed);
  std::vector<Eigen::VectorXd> obs = env_.observations();
  std::vector<Eigen::Vector2d> actions(static_cast<std::size_t>(n));
  std::normal_distribution<double> unit(0.0, 1.0);
  const Eigen::Vector2d vmax(scenario->v_x_max, scenario->v_y_max);
  if (options.agent_rewards) options.agent_rewards->assign(static_cast<std::size_t>(n), {});

  double reward_sum = 0.0;
  std::array<double, 3> role_sum{};
  std::array<int, 3> role_count{};
  for (Role r : env_.roles()) ++role_count[static_cast<std::size_t>(r)];

  while (!env_.done()) {
    const auto t0 = clock::now();
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d a = act(i, obs[static_cast<std::size_t>(i)]);
      if (options.explore) {
        for (int d = 0; d < 2; ++d) {
          a[d] = std::clamp(a[d] + options.noise_sigma_fraction * vmax[d] * unit(noise_rng_), -vmax[d], vmax[d]);
        }
      }
      actions[static_cast<std::size_t>(i)] = a;
    }
    StepResult res = env_.step(actions);
    if (options.step_latency_ms) {
      options.step_latency_ms->push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }

    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double r = res.rewards[ui].total;
      reward_sum += r;
      role_sum[static_cast<std::size_t>(env_.role_of(i))] += r;
      if (options.agent_rewards) (*options.agent_rewards)[ui].push_back(r);
      if (options.learn) agents_[ui].buffer->push(obs[ui], actions[ui], r, res.observations[ui]);
      if (options.trajectory) {
        options.trajectory->push_back({res.info.step, i, env_.role_of(i), env_.state().uavs[ui].position});
      }
    }

    if (options.learn) {
      for (int i = 0; i < n; ++i) {
        Agent& a = agents_[static_cast<std::size_t>(i)];
        if (a.buffer->size() < static_cast<std::size_t>(tp.batch_size)) continue;
        a.buffer->sample(static_cast<std::size_t>(tp.batch_size), batch_);
        critic_update(i, batch_);
        const auto g = static_cast<std::size_t>(a.group);
        if (g < options.frozen_groups.size() && options.frozen_groups[g]) continue;
        actor_update(i, batch_);
      }
    }

    m.aoi_mean += res.info.mean_aoi;
    m.vdf_mean += res.info.mean_vdf;
    m.energy_j = res.info.energy_j;
    m.sr_events += res.info.collisions_risk_steps;
    m.act_events += res.info.boundary_violations;
    ++m.steps;
    obs = std::move(res.observations);
  }

  if (m.steps > 0) {
    m.aoi_mean /= m.steps;
    m.vdf_mean /= m.steps;
    m.reward_mean = reward_sum / (static_cast<double>(m.steps) * n);
    for (std::size_t r = 0; r < 3; ++r) {
      if (role_count[r] > 0) m.reward_role[r] = role_sum[r] / (static_cast<double>(m.steps) * role_count[r]);
    }
  }
  m.wallclock_ms = std::chrono::duration<double, std::milli>(clock::now() - started).count();
  return m;
}

EpisodeMetrics Trainer::train_episode(int episode) {
  const auto scenario = episode_scenario(episode);
  const auto seed = episode_seed(episode);
  RolloutOptions opts;
  opts.frozen_groups.assign(groups_.size(), false);
  bool event = false;

  try {
    if (config_.train.eia) {
      std::vector<int> due;
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].schedule.due(episode)) due.push_back(static_cast<int>(g));
      }
      if (!due.empty()) {
        std::vector<std::vector<double>> rewards;
        RolloutOptions eval;
        eval.agent_rewards = &rewards;
        rollout(scenario, derive_seed(seed, {kEvalTag}), eval);
        for (int g : due) {
          eia_event(g, rewards);
          opts.frozen_groups[static_cast<std::size_t>(g)] = true;
        }
        event = true;
      }
    }
    opts.explore = true;
    opts.learn = true;
    opts.noise_sigma_fraction = noise_fraction(episode);
    EpisodeMetrics m = rollout(scenario, seed, opts);
    m.episode = episode;
    m.eia_event = event;
    return m;
  } catch (const nn::DivergenceError& e) {
    throw nn::DivergenceError("episode " + std::to_string(episode) + ": " + e.what());
  }
}

std::vector<EpisodeMetrics> Trainer::train(const std::function<void(const EpisodeMetrics&)>& on_episode) {
  std::vector<EpisodeMetrics> log;
  for (int ep = 1; ep <= config_.train.episodes; ++ep) {
    log.push_back(train_episode(ep));
    if (on_episode) on_episode(log.back());
  }
  return log;
}

void Trainer::save_checkpoint(std::ostream& out) const {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(agents_.size()));
  for (const Agent& a : agents_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.role));
    nn::write_mlp(out, a.actor);
    nn::write_mlp(out, a.critic);
    nn::write_mlp(out, a.target_critic);
    a.actor_opt.write(out);
    a.critic_opt.write(out);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(groups_.size()));
  for (const Group& g : groups_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ensemble.size()));
    for (std::size_t k = 0; k < g.ensemble.size(); ++k) {
      nn::write_mlp(out, g.ensemble[k]);
      g.ensemble_opt[k].write(out);
    }
    put(out, g.schedule.theta);
    put<std::int32_t>(out, g.schedule.delta);
    put<std::int32_t>(out, g.schedule.next_event);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void Trainer::load_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  if (get<std::uint32_t>(in) != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  if (get<std::uint32_t>(in) != agents_.size()) throw std::runtime_error("checkpoint: agent count mismatch");
  std::vector<Agent> loaded(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (get<std::uint32_t>(in) != static_cast<std::uint32_t>(agents_[i].role)) {
      throw std::runtime_error("checkpoint: role mismatch for agent " + std::to_string(i));
    }
    Agent& a = loaded[i];
    a.actor = nn::read_mlp(in);
    a.critic = nn::read_mlp(in);
    a.target_critic = nn::read_mlp(in);
    expect_same_shape(a.actor, agents_[i].actor, "actor");
    expect_same_shape(a.critic, agents_[i].critic, "critic");
    expect_same_shape(a.target_critic, agents_[i].critic, "target critic");
    a.actor_opt.read(in);
    a.critic_opt.read(in);
  }
  if (get<std::uint32_t>(in) != groups_.size()) throw std::runtime_error("checkpoint: group count mismatch");
  std::vector<Group> groups(groups_.size());
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto k = get<std::uint32_t>(in);
    if (k > 1024) throw std::runtime_error("checkpoint: bad ensemble size");
    for (std::uint32_t j = 0; j < k; ++j) {
      groups[gi].ensemble.push_back(nn::read_mlp(in));
      groups[gi].ensemble_opt.emplace_back();
      groups[gi].ensemble_opt.back().read(in);
    }
    groups[gi].schedule.theta = get<double>(in);
    groups[gi].schedule.delta = get<std::int32_t>(in);
    groups[gi].schedule.next_event = get<std::int32_t>(in);
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    agents_[i].actor = std::move(loaded[i].actor);
    agents_[i].critic = std::move(loaded[i].critic);
    agents_[i].target_critic = std::move(loaded[i].target_critic);
    agents_[i].actor_opt = std::move(loaded[i].actor_opt);
    agents_[i].critic_opt = std::move(loaded[i].critic_opt);
  }
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    groups_[gi].ensemble = std::move(groups[gi].ensemble);
    groups_[gi].ensemble_opt = std::move(groups[gi].ensemble_opt);
    groups_[gi].schedule = groups[gi].schedule;
  }
}

std::vector<std::shared_ptr<const Scenario>> make_scenario_pool(const RunConfig& config) {
  std::vector<std::shared_ptr<const Scenario>> pool;
  for (int i = 0; i < config.run.scenario_pool; ++i) {
    pool.push_back(std::make_shared<const Scenario>(
        generate_scenario(config, derive_seed(config.run.seed, {kPoolTag, static_cast<std::uint64_t>(i)}))));
  }
  return pool;
}

double tail_mean(const std::vector<EpisodeMetrics>& rows, std::size_t n, double EpisodeMetrics::*field) {
  if (rows.empty()) return 0.0;
  const std::size_t take = std::min(n, rows.size());
  double s = 0.0;
  for (std::size_t i = rows.size() - take; i < rows.size(); ++i) s += rows[i].*field;
  return s / static_cast<double>(take);
}

}  // namespace uavfarm::marl
