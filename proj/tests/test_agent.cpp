#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "prefcc/agent.hpp"
#include "prefcc/error.hpp"
#include "prefcc/rate_control.hpp"
#include "test_util.hpp"

namespace prefcc {
namespace {

StateWindow random_window(std::mt19937_64& rng, int eta, const WeightVector& w) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  StateWindow win;
  win.preference = w;
  for (int i = 0; i < eta; ++i) win.stats.push_back({1.0 + u(rng), 1.0 + u(rng), u(rng) - 1.0});
  return win;
}

Eigen::VectorXd stats_vec(const StateWindow& w) {
  const std::vector<double> f = w.flatten();
  return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

// mu from separate nn::mlp_forward calls.
double composed_mu(const ActorParams& a, const StateWindow& w) {
  const Eigen::Vector3d pref(w.preference.thr(), w.preference.lat(), w.preference.loss());
  const Eigen::VectorXd emb = nn::mlp_forward(a.spec.pn_spec(), a.body.pn, pref);
  Eigen::VectorXd x(a.spec.concat_dim());
  x << emb, stats_vec(w);
  const Eigen::VectorXd h = nn::mlp_forward(a.spec.trunk_spec(), a.body.trunk, x);
  return nn::mlp_forward(a.spec.head_spec(), a.mu_head, h)(0);
}

TEST(AgentSpec, Dimensions) {
  AgentSpec s;
  EXPECT_EQ(s.concat_dim(), 16 + 30);
  EXPECT_EQ(s.pn_spec().input_dim, 3);
  EXPECT_EQ(s.pn_spec().output_dim(), 16);
  EXPECT_EQ(s.trunk_spec().input_dim, 46);
  EXPECT_EQ(s.trunk_spec().layers[0].units, 64);
  EXPECT_EQ(s.trunk_spec().layers[1].units, 32);
  EXPECT_EQ(s.head_spec().output_dim(), 1);
}

TEST(PreferenceEmbed, ZeroAndDeterministicAndDistinct) {
  AgentSpec s;
  EXPECT_TRUE(preference_embed(s, nn::zero_mlp(s.pn_spec()), WeightVector()).isZero(0.0));
  std::mt19937_64 rng(1);
  const nn::MlpParams pn = nn::init_mlp(s.pn_spec(), rng);
  const WeightVector a = WeightVector::create(0.8, 0.1, 0.1);
  const WeightVector b = WeightVector::create(0.1, 0.8, 0.1);
  EXPECT_EQ(preference_embed(s, pn, a), preference_embed(s, pn, a));
  EXPECT_EQ(preference_embed(s, pn, a).size(), 16);
  EXPECT_GT((preference_embed(s, pn, a) - preference_embed(s, pn, b)).norm(), 1e-6);
}

TEST(ForwardActor, ZeroParams) {
  AgentSpec s;
  std::mt19937_64 rng(2);
  const ActorParams a = zero_actor(s, -0.5);
  const PolicyOutput out = forward_actor(a, random_window(rng, 10, WeightVector()));
  EXPECT_EQ(out.mu, 0.0);
  EXPECT_DOUBLE_EQ(out.sigma, std::exp(-0.5));
}

TEST(ForwardActor, MatchesComposition) {
  AgentSpec s;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    ActorParams a = make_actor(s, rng);
    a.mu_head = nn::init_mlp(s.head_spec(), rng);
    const StateWindow w = random_window(rng, 10, WeightVector::create(0.5, 0.3, 0.2));
    EXPECT_NEAR(forward_actor(a, w).mu, composed_mu(a, w), 1e-12);
  }
}

TEST(ForwardActor, PreferenceSensitivityIsStructural) {
  AgentSpec s;
  std::mt19937_64 rng(4);
  ActorParams a = make_actor(s, rng);
  a.mu_head = nn::init_mlp(s.head_spec(), rng);
  const StateWindow w1 = random_window(rng, 10, WeightVector::create(0.8, 0.1, 0.1));
  StateWindow w2 = w1;
  w2.preference = WeightVector::create(0.1, 0.1, 0.8);
  EXPECT_NE(forward_actor(a, w1).mu, forward_actor(a, w2).mu);
  a.body.pn = nn::zero_mlp(s.pn_spec());
  EXPECT_EQ(forward_actor(a, w1).mu, forward_actor(a, w2).mu);
}

TEST(ForwardActor, RejectsWrongWindowLength) {
  AgentSpec s;
  std::mt19937_64 rng(5);
  const ActorParams a = make_actor(s, rng);
  EXPECT_THROW(forward_actor(a, random_window(rng, 9, WeightVector())), ShapeMismatch);
}

TEST(ForwardCritic, ZeroDeterministicAndComposed) {
  AgentSpec s;
  std::mt19937_64 rng(6);
  const StateWindow w = random_window(rng, 10, WeightVector());
  EXPECT_EQ(forward_critic(zero_critic(s, 100.0), w), 0.0);
  const CriticParams c = make_critic(s, rng, 100.0);
  EXPECT_EQ(forward_critic(c, w), forward_critic(c, w));
  const Eigen::Vector3d pref(w.preference.thr(), w.preference.lat(), w.preference.loss());
  Eigen::VectorXd x(s.concat_dim());
  x << nn::mlp_forward(s.pn_spec(), c.body.pn, pref), stats_vec(w);
  const double v = nn::mlp_forward(s.head_spec(), c.value_head,
                                   nn::mlp_forward(s.trunk_spec(), c.body.trunk, x))(0);
  EXPECT_NEAR(forward_critic(c, w), 100.0 * v, 1e-10);
}

TEST(SampleAction, DegenerateReproducibleAndUnbiased) {
  std::mt19937_64 a(7), b(7);
  EXPECT_EQ(sample_action(0.3, 0.5, a).action, sample_action(0.3, 0.5, b).action);
  std::mt19937_64 rng(8);
  EXPECT_NEAR(sample_action(0.3, 1e-12, rng).action, 0.3, 1e-10);
  const ActionSample s = sample_action(-0.2, 0.7, rng);
  EXPECT_DOUBLE_EQ(s.logp, nn::gaussian_logp(-0.2, 0.7, s.action));
  EXPECT_THROW(sample_action(0.0, 0.0, rng), InvalidArgument);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_action(1.5, 2.0, rng).action;
  EXPECT_NEAR(sum / n, 1.5, 4.0 * 2.0 / std::sqrt(static_cast<double>(n)));
}

TEST(ApplyAction, WorkedExamples) {
  EXPECT_EQ(apply_action(10.0, 0.0, 0.025), 10.0);
  EXPECT_EQ(apply_action(10.0, 1.0, 0.025), 10.25);
  EXPECT_EQ(apply_action(10.25, -1.0, 0.025), 10.0);
  EXPECT_THROW(apply_action(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(apply_action(1.0, std::nan("")), InvalidArgument);
}

TEST(ApplyActionProperty, RoundTripPositivityMonotonicity) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> x(0.5, 1e4);
  std::normal_distribution<double> a(0.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const double x0 = x(rng);
    const double act = a(rng);
    const double x1 = apply_action(x0, act);
    EXPECT_GT(x1, 0.0);
    EXPECT_NEAR(apply_action(x1, -act), x0, 1e-9 * x0);
    EXPECT_LT(apply_action(x0, act - 0.1), apply_action(x0, act + 0.1));
  }
  EXPECT_EQ(apply_action(5.0, 1e6, 0.025, {0.1, 20.0}), 20.0);
  EXPECT_EQ(apply_action(5.0, -1e6, 0.025, {0.1, 20.0}), 0.1);
}

TEST(ActorBackward, MatchesFiniteDifferences) {
  AgentSpec s{2, 3, 2, {4, 3}};
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    ActorParams a = make_actor(s, rng, 0.1);
    a.mu_head = nn::init_mlp(s.head_spec(), rng);
    std::vector<StateWindow> ws;
    for (int i = 0; i < 3; ++i) ws.push_back(random_window(rng, 2, WeightVector::create(0.2 + 0.1 * i, 0.3, 0.5 - 0.1 * i)));
    std::vector<const StateWindow*> ptrs;
    for (const StateWindow& w : ws) ptrs.push_back(&w);
    const BatchInputs in = BatchInputs::from_windows(ptrs);
    const Eigen::RowVectorXd dmu = Eigen::RowVectorXd::Random(3);
    const double dls = 0.37;
    ActorTape tape;
    actor_mu_batch(a, in, &tape);
    const Eigen::VectorXd g = actor_backward(a, tape, dmu, dls);
    auto f = [&](const Eigen::VectorXd& theta) {
      ActorParams b = a;
      b.unflatten(theta);
      return (actor_mu_batch(b, in).array() * dmu.array()).sum() + dls * b.log_std(0);
    };
    EXPECT_LT(testing::max_relative_error(g, testing::numeric_gradient(f, a.flatten())), 1e-4);
  }
}

TEST(CriticBackward, MatchesFiniteDifferences) {
  AgentSpec s{2, 3, 2, {4, 3}};
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CriticParams c = make_critic(s, rng, 5.0);
    std::vector<StateWindow> ws;
    for (int i = 0; i < 4; ++i) ws.push_back(random_window(rng, 2, WeightVector()));
    std::vector<const StateWindow*> ptrs;
    for (const StateWindow& w : ws) ptrs.push_back(&w);
    const BatchInputs in = BatchInputs::from_windows(ptrs);
    const Eigen::RowVectorXd dv = Eigen::RowVectorXd::Random(4);
    CriticTape tape;
    critic_value_batch(c, in, &tape);
    const Eigen::VectorXd g = critic_backward(c, tape, dv);
    auto f = [&](const Eigen::VectorXd& theta) {
      CriticParams d = c;
      d.unflatten(theta);
      return (critic_value_batch(d, in).array() * dv.array()).sum();
    };
    EXPECT_LT(testing::max_relative_error(g, testing::numeric_gradient(f, c.flatten())), 1e-4);
  }
}

TEST(AgentTensors, RoundTripAndNames) {
  AgentSpec s;
  std::mt19937_64 rng(12);
  const ActorParams a = make_actor(s, rng, -0.3);
  const CriticParams c = make_critic(s, rng, 100.0);
  const auto ta = to_tensors(a);
  const auto tc = to_tensors(c);
  EXPECT_NO_THROW(nn::find_tensor(ta, "actor.log_std"));
  EXPECT_NO_THROW(nn::find_tensor(ta, "actor.pn.0.weight"));
  EXPECT_NO_THROW(nn::find_tensor(ta, "actor.mu_head.0.bias"));
  EXPECT_NO_THROW(nn::find_tensor(tc, "critic.value_head.0.weight"));
  EXPECT_EQ(actor_from_tensors(s, ta).flatten(), a.flatten());
  EXPECT_EQ(critic_from_tensors(s, 100.0, tc).flatten(), c.flatten());
}

}  // namespace
}  // namespace prefcc
