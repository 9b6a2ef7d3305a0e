#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "uavfarm/marl.hpp"

using namespace uavfarm;
using nn::Mlp;

namespace {

Mlp constant_critic(int in, double value) {
  Mlp q({in, 1}, nn::OutputKind::identity);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(q.param_count());
  p(in) = value;
  q.set_params(p);
  return q;
}

RunConfig tiny_config() {
  RunConfig c;
  c.world.x_max = c.world.y_max = 100;
  c.world.n_ws = 30;
  c.world.n_px = c.world.n_py = 5;
  c.fleet.n_c = c.fleet.n_m = c.fleet.n_d = 2;
  c.train.steps = 20;
  c.train.episodes = 3;
  c.train.batch_size = 16;
  c.train.buffer_size = 512;
  c.train.hidden = {16, 16};
  c.run.scenario_pool = 3;
  return c;
}

nn::Batch random_batch(std::mt19937_64& rng, int obs, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  nn::Batch b;
  b.obs.resize(obs, n);
  b.next_obs.resize(obs, n);
  b.act.resize(2, n);
  b.reward.resize(n);
  for (Eigen::Index i = 0; i < b.obs.size(); ++i) b.obs(i) = u(rng);
  for (Eigen::Index i = 0; i < b.next_obs.size(); ++i) b.next_obs(i) = u(rng);
  for (Eigen::Index i = 0; i < b.act.size(); ++i) b.act(i) = 20 * u(rng) - 10;
  for (Eigen::Index i = 0; i < n; ++i) b.reward(i) = 4 * u(rng) - 2;
  return b;
}

}  // namespace

TEST_CASE("elite score examples") {
  const std::vector<double> flat{2, 2, 2};
  CHECK(marl::elite_score(flat, 1.7, -3) == doctest::Approx(2 * 1.7));
  const std::vector<double> ramp{1, 2, 3};
  CHECK(marl::elite_score(ramp, 1, -0.5) == doctest::Approx(2 - 0.5 * 2.0 / 3.0));
  const std::vector<double> shifted{11, 12, 13};
  CHECK(marl::elite_score(shifted, 1, -0.5) - marl::elite_score(ramp, 1, -0.5) == doctest::Approx(10));
  CHECK_THROWS(marl::elite_score(std::vector<double>{}, 1, 1));
}

TEST_CASE("elite selection: argmax, lowest index on ties, shift invariant") {
  const std::vector<double> one{5};
  CHECK(marl::select_elite(one) == 0);
  const std::vector<double> s{1.0, 3.0, 2.0};
  CHECK(marl::select_elite(s) == 1);
  const std::vector<double> tie{3.0, 3.0};
  CHECK(marl::select_elite(tie) == 0);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> r(4, std::vector<double>(10));
    for (auto& row : r) {
      for (auto& x : row) x = g(rng);
    }
    const double c = 100 * g(rng);
    std::vector<double> a, b;
    for (auto& row : r) {
      a.push_back(marl::elite_score(row, 1, -0.5));
      for (auto& x : row) x += c;
      b.push_back(marl::elite_score(row, 1, -0.5));
    }
    CHECK(marl::select_elite(a) == marl::select_elite(b));
  }
}

TEST_CASE("imitation blends toward the elite and leaves it untouched") {
  Mlp a({2, 1}, nn::OutputKind::identity), b = a, e = a;
  e.mutable_params().setOnes();
  std::vector<Mlp*> group{&a, &e, &b};
  marl::imitate_elite(group, 1, 0.1);
  CHECK(a.params().isApprox(Eigen::VectorXd::Constant(3, 0.1)));
  CHECK(e.params() == Eigen::VectorXd::Ones(3));
  marl::imitate_elite(group, 1, 1.0);
  CHECK(a == e);
  CHECK(b == e);
}

TEST_CASE("imitation schedule doubles the period and halves the strength") {
  marl::EiaSchedule s(0.1, 10);
  std::vector<int> events;
  std::vector<double> thetas;
  for (int ep = 1; ep <= 2000; ++ep) {
    if (s.due(ep)) {
      events.push_back(ep);
      thetas.push_back(s.theta);
      s.advance();
    }
  }
  REQUIRE(events.size() >= 4);
  CHECK(events[0] == 10);
  CHECK(events[1] == 30);
  CHECK(events[2] == 70);
  CHECK(events[3] == 150);
  CHECK(thetas[0] == 0.1);
  CHECK(thetas[1] == 0.05);
  CHECK(thetas[2] == 0.025);
  CHECK(thetas[3] == 0.0125);
}

TEST_CASE("predicted value mixes local and ensemble mean") {
  const Mlp local = constant_critic(3, 1.0);
  const std::vector<Mlp> ens{constant_critic(3, 2.0), constant_critic(3, 4.0)};
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(3, 5);
  CHECK(marl::predicted_q(local, ens, in, 0.1)(0) == doctest::Approx(2.8));
  CHECK(marl::predicted_q(local, ens, in, 1.0)(0) == 1.0);
  const std::vector<Mlp> same{constant_critic(3, 1.0), constant_critic(3, 1.0)};
  CHECK(marl::predicted_q(local, same, in, 0.37)(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(marl::predicted_q(local, {}, in, 0.1)(0) == 1.0);
}

TEST_CASE("mixing weights sum to one") {
  for (double eps : {0.0, 0.1, 0.3, 0.5, 0.7, 1.0}) {
    for (int k = 1; k <= 12; ++k) {
      const auto w = marl::mixing_weights(eps, k);
      REQUIRE(w.size() == static_cast<std::size_t>(k + 1));
      CHECK(w[0] == eps);
      double s = 0;
      for (double x : w) s += x;
      CHECK(s == 1.0);
      for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] == doctest::Approx((1 - eps) / k).epsilon(1e-14));
    }
  }
}

TEST_CASE("critic loss by hand") {
  const Mlp q = constant_critic(4, 2.0);
  nn::Batch b;
  b.obs = Eigen::MatrixXd::Zero(2, 1);
  b.next_obs = Eigen::MatrixXd::Zero(2, 1);
  b.act = Eigen::MatrixXd::Zero(2, 1);
  b.reward = Eigen::VectorXd::Ones(1);
  Mlp actor({2, 2}, nn::OutputKind::tanh_scaled, Eigen::Vector2d(10, 10));
  const Eigen::RowVectorXd y = marl::bootstrap_target(q, actor, b, 0.99);
  CHECK(y(0) == doctest::Approx(2.98));
  const auto cl = marl::critic_loss(q, {}, marl::critic_input(b.obs, b.act), y, 1.0);
  CHECK(cl.loss == doctest::Approx(0.9604));

  // gamma = 0 and Q already equal to r: nothing to learn
  const Mlp one = constant_critic(4, 1.0);
  const Eigen::RowVectorXd y0 = marl::bootstrap_target(one, actor, b, 0.0);
  const auto fixed = marl::critic_loss(one, {}, marl::critic_input(b.obs, b.act), y0, 1.0);
  CHECK(fixed.loss == 0.0);
  CHECK(fixed.grad_local.isZero());
}

TEST_CASE("mixed bootstrap target") {
  nn::Batch b;
  b.obs = b.next_obs = Eigen::MatrixXd::Zero(2, 1);
  b.act = Eigen::MatrixXd::Zero(2, 1);
  b.reward = Eigen::VectorXd::Ones(1);
  Mlp actor({2, 2}, nn::OutputKind::tanh_scaled, Eigen::Vector2d(10, 10));
  const Mlp target = constant_critic(4, 1.0);
  const std::vector<Mlp> ens{constant_critic(4, 2.0), constant_critic(4, 4.0)};
  // 1 + 0.5 * (0.1 * 1 + 0.9 * 3)
  CHECK(marl::bootstrap_target(target, ens, actor, b, 0.5, 0.1)(0) == doctest::Approx(2.4));
  CHECK(marl::bootstrap_target(target, ens, actor, b, 0.5, 1.0)(0) == marl::bootstrap_target(target, actor, b, 0.5)(0));
  CHECK(marl::bootstrap_target(target, {}, actor, b, 0.5, 0.1)(0) == 1.5);
}

TEST_CASE("critic loss gradients match central differences") {
  std::mt19937_64 gen(9);
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp local({6, 8, 1}, nn::OutputKind::identity);
    local.init_uniform(rng);
    std::vector<Mlp> ens(2, local);
    for (auto& m : ens) m.init_uniform(rng);
    const nn::Batch b = random_batch(gen, 4, 7);
    const Eigen::MatrixXd in = marl::critic_input(b.obs, b.act);
    const Eigen::RowVectorXd y = b.reward.transpose();
    const double eps = 0.3;
    const auto cl = marl::critic_loss(local, ens, in, y, eps);
    auto loss = [&](const Mlp& l, const std::vector<Mlp>& e) {
      const Eigen::RowVectorXd d = marl::predicted_q(l, e, in, eps) - y;
      return d.squaredNorm() / static_cast<double>(d.size());
    };
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < local.param_count(); i += 3) {
      Mlp p = local, m = local;
      p.mutable_params()(i) += h;
      m.mutable_params()(i) -= h;
      const double num = (loss(p, ens) - loss(m, ens)) / (2 * h);
      CHECK(std::abs(num - cl.grad_local(i)) <= 1e-4 * std::max(1e-3, std::abs(num)));
    }
    for (std::size_t k = 0; k < ens.size(); ++k) {
      for (Eigen::Index i = 0; i < ens[k].param_count(); i += 5) {
        auto p = ens, m = ens;
        p[k].mutable_params()(i) += h;
        m[k].mutable_params()(i) -= h;
        const double num = (loss(local, p) - loss(local, m)) / (2 * h);
        CHECK(std::abs(num - cl.grad_ensemble[k](i)) <= 1e-4 * std::max(1e-3, std::abs(num)));
      }
    }
  }
}

TEST_CASE("actor objective gradient matches central differences") {
  std::mt19937_64 gen(12);
  Rng rng(13);
  Mlp actor({4, 8, 2}, nn::OutputKind::tanh_scaled, Eigen::Vector2d(10, 10));
  Mlp critic({6, 8, 1}, nn::OutputKind::identity);
  actor.init_uniform(rng);
  critic.init_uniform(rng);
  const nn::Batch b = random_batch(gen, 4, 9);
  const auto obj = marl::actor_objective(actor, critic, b.obs);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < actor.param_count(); ++i) {
    Mlp p = actor, m = actor;
    p.mutable_params()(i) += h;
    m.mutable_params()(i) -= h;
    const double num =
        (marl::actor_objective(p, critic, b.obs).value - marl::actor_objective(m, critic, b.obs).value) / (2 * h);
    CHECK(std::abs(num - obj.grad(i)) <= 1e-4 * std::max(1e-3, std::abs(num)));
  }

  // a critic that ignores the action gives no actor gradient
  Mlp flat = constant_critic(6, 3.0);
  CHECK(marl::actor_objective(actor, flat, b.obs).grad.isZero());
}

TEST_CASE("actor objective against the mixed critic") {
  std::mt19937_64 gen(15);
  Rng rng(16);
  Mlp actor({4, 8, 2}, nn::OutputKind::tanh_scaled, Eigen::Vector2d(10, 10));
  Mlp critic({6, 8, 1}, nn::OutputKind::identity);
  actor.init_uniform(rng);
  critic.init_uniform(rng);
  std::vector<Mlp> ens(3, critic);
  for (auto& e : ens) e.init_uniform(rng);
  const nn::Batch b = random_batch(gen, 4, 7);
  const double eps = 0.3;

  const auto obj = marl::actor_objective(actor, critic, ens, b.obs, eps);
  const Eigen::MatrixXd in = marl::critic_input(b.obs, actor.forward(b.obs));
  CHECK(obj.value == doctest::Approx(marl::predicted_q(critic, ens, in, eps).mean()).epsilon(1e-12));
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < actor.param_count(); ++i) {
    Mlp p = actor, m = actor;
    p.mutable_params()(i) += h;
    m.mutable_params()(i) -= h;
    const double num = (marl::actor_objective(p, critic, ens, b.obs, eps).value -
                        marl::actor_objective(m, critic, ens, b.obs, eps).value) /
                       (2 * h);
    CHECK(std::abs(num - obj.grad(i)) <= 1e-4 * std::max(1e-3, std::abs(num)));
  }

  // epsilon = 1 is the local critic bit for bit
  const auto local = marl::actor_objective(actor, critic, b.obs);
  const auto mixed = marl::actor_objective(actor, critic, ens, b.obs, 1.0);
  CHECK(local.grad == mixed.grad);
  CHECK(local.value == mixed.value);
}

TEST_CASE("ascent on a critic linear in the action saturates the actor") {
  Rng rng(14);
  Mlp actor({1, 1}, nn::OutputKind::tanh_scaled, Eigen::VectorXd::Constant(1, 10));
  actor.init_uniform(rng);
  Mlp critic({2, 1}, nn::OutputKind::identity);
  Eigen::VectorXd cp = Eigen::VectorXd::Zero(3);
  cp(1) = 1.0;  // Q = a
  critic.set_params(cp);
  nn::AdamState opt(actor.param_count(), 0.05);
  const Eigen::MatrixXd obs = Eigen::MatrixXd::Ones(1, 4);
  for (int i = 0; i < 400; ++i) opt.step(actor, -marl::actor_objective(actor, critic, obs).grad);
  CHECK(actor.forward_one(Eigen::VectorXd::Ones(1))(0) > 9.9);
}

TEST_CASE("ensemble sync uses unequal coefficients") {
  const Mlp local = constant_critic(2, 1.0);
  std::vector<Mlp> ens{constant_critic(2, 0.0), constant_critic(2, 0.0)};
  marl::sec_sync(ens, local, 0.1);
  CHECK(ens[0].params()(2) == doctest::Approx(0.05));
  CHECK(ens[1].params()(2) == doctest::Approx(0.1));
  std::vector<Mlp> still{constant_critic(2, 0.5)};
  marl::sec_sync(still, local, 0.0);
  CHECK(still[0].params()(2) == 0.5);
  CHECK_THROWS_AS(marl::sec_sync(still, local, 1.5), ConfigError);
}

TEST_CASE("epsilon = 1 with SEC matches the no-SEC baseline") {
  for (bool mixed : {true, false}) {
    RunConfig on = tiny_config();
    on.train.eia = false;
    on.train.sec = true;
    on.train.epsilon = 1.0;
    on.train.sec_mixed_target = on.train.sec_mixed_actor = mixed;
    RunConfig off = on;
    off.train.sec = false;
    marl::Trainer a(on), b(off);
    const auto la = a.train();
    const auto lb = b.train();
    for (std::size_t i = 0; i < a.agents().size(); ++i) {
      const double d_actor = (a.agents()[i].actor.params() - b.agents()[i].actor.params()).cwiseAbs().maxCoeff();
      const double d_critic = (a.agents()[i].critic.params() - b.agents()[i].critic.params()).cwiseAbs().maxCoeff();
      CHECK(d_actor <= 1e-12);
      CHECK(d_critic <= 1e-12);
    }
    for (std::size_t e = 0; e < la.size(); ++e) CHECK(la[e].reward_mean == lb[e].reward_mean);
  }
}

TEST_CASE("literal and mixed SEC variants differ once epsilon < 1") {
  RunConfig mixed = tiny_config();
  mixed.train.eia = false;
  RunConfig literal = mixed;
  literal.train.sec_mixed_target = literal.train.sec_mixed_actor = false;
  marl::Trainer a(mixed), b(literal);
  a.train();
  b.train();
  CHECK(a.agents()[0].critic.params() != b.agents()[0].critic.params());
}

TEST_CASE("zero episodes: empty log, untouched networks") {
  RunConfig c = tiny_config();
  c.train.episodes = 0;
  marl::Trainer t(c);
  const auto before = t.agents()[0].actor.params();
  CHECK(t.train().empty());
  CHECK(t.agents()[0].actor.params() == before);
}

TEST_CASE("training is reproducible and checkpoints restore every network") {
  RunConfig c = tiny_config();
  c.train.delta0 = 2;
  marl::Trainer a(c), b(c);
  const auto la = a.train(), lb = b.train();
  REQUIRE(la.size() == 3);
  CHECK(la[1].eia_event);
  CHECK_FALSE(la[0].eia_event);
  for (std::size_t e = 0; e < la.size(); ++e) {
    CHECK(la[e].reward_mean == lb[e].reward_mean);
    CHECK(la[e].aoi_mean == lb[e].aoi_mean);
  }
  std::stringstream buf;
  a.save_checkpoint(buf);
  marl::Trainer fresh(c);
  fresh.load_checkpoint(buf);
  for (std::size_t i = 0; i < a.agents().size(); ++i) {
    CHECK(fresh.agents()[i].actor == a.agents()[i].actor);
    CHECK(fresh.agents()[i].target_critic == a.agents()[i].target_critic);
  }
  CHECK(fresh.groups()[0].ensemble[1] == a.groups()[0].ensemble[1]);
  CHECK(fresh.groups()[0].schedule.next_event == a.groups()[0].schedule.next_event);

  RunConfig other = c;
  other.fleet.n_d = 3;
  marl::Trainer mismatch(other);
  std::stringstream again;
  a.save_checkpoint(again);
  CHECK_THROWS(mismatch.load_checkpoint(again));
}

TEST_CASE("exploration noise decays linearly then holds") {
  RunConfig c = tiny_config();
  c.train.episodes = 100;
  marl::Trainer t(c);
  CHECK(t.noise_fraction(1) == doctest::Approx(0.3));
  CHECK(t.noise_fraction(26) == doctest::Approx(0.175));
  CHECK(t.noise_fraction(51) == doctest::Approx(0.05));
  CHECK(t.noise_fraction(100) == doctest::Approx(0.05));
}
