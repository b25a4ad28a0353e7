#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "prefcc/agent.hpp"
#include "prefcc/error.hpp"
#include "prefcc/evalkit.hpp"
#include "prefcc/netsim.hpp"

namespace prefcc {
namespace {

MiOutcome outcome_with_loss(double lost) {
  MiOutcome o;
  o.lost_pkts = lost;
  return o;
}

// Replays a fixed rate so shared-link runs have a known offered load.
class ConstantController final : public RateController {
 public:
  explicit ConstantController(double r) : r_(r) {}
  double rate() const override { return r_; }
  void observe(const MiOutcome&) override {}

 private:
  double r_;
};

std::vector<std::unique_ptr<RateController>> constant_flows(std::initializer_list<double> rates) {
  std::vector<std::unique_ptr<RateController>> v;
  for (double r : rates) v.push_back(std::make_unique<ConstantController>(r));
  return v;
}

TEST(Aimd, SawtoothMatchesHandSimulation) {
  AimdController c(100.0, 10.0);
  // Loss pattern over 20 intervals and the rates it must produce.
  const bool loss[20] = {0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
  double expect = 10.0;
  for (bool l : loss) {
    c.observe(outcome_with_loss(l ? 3.0 : 0.0));
    expect = l ? std::max(0.1, expect * 0.5) : expect + 2.0;
    EXPECT_DOUBLE_EQ(c.rate(), expect);
  }
  EXPECT_DOUBLE_EQ(expect, 9.75);
}

TEST(Aimd, FloorAndValidation) {
  AimdController c(100.0, 0.15);
  c.observe(outcome_with_loss(1.0));
  EXPECT_DOUBLE_EQ(c.rate(), 0.1);
  EXPECT_THROW(AimdController(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(AimdController(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(AimdController(1.0, 1.0, AimdOptions{0.02, 1.0, 0.1}), InvalidArgument);
}

TEST(Aimd, SawtoothOnLink) {
  const LinkConfig link{100.0, 0.02, 10.0, 0.0, 1};
  std::vector<std::unique_ptr<RateController>> flows;
  flows.push_back(std::make_unique<AimdController>(100.0, 50.0));
  const std::vector<double> starts{0.0};
  const SharedRunResult run = run_shared_link(link, flows, starts, SharedRunOptions{20.0});
  ASSERT_GT(run.trace.size(), 10u);
  int drops = 0;
  for (std::size_t i = 1; i < run.trace.size(); ++i) {
    const TraceRow& prev = run.trace[i - 1];
    const double expect = prev.lost > 0.0 ? std::max(0.1, prev.send_rate * 0.5) : prev.send_rate + 2.0;
    EXPECT_DOUBLE_EQ(run.trace[i].send_rate, expect);
    if (prev.lost > 0.0) ++drops;
  }
  EXPECT_GT(drops, 0);
}

TEST(Jain, Examples) {
  EXPECT_NEAR(jain_index(std::vector<double>{1, 1, 1}), 1.0, 1e-9);
  EXPECT_NEAR(jain_index(std::vector<double>{1, 2, 3}), 36.0 / 42.0, 1e-9);
  EXPECT_NEAR(jain_index(std::vector<double>{1, 2, 3}), 0.857, 1e-3);
  EXPECT_NEAR(jain_index(std::vector<double>{1, 0}), 0.5, 1e-12);
  EXPECT_NEAR(jain_index(std::vector<double>{5}), 1.0, 1e-12);
  EXPECT_THROW(jain_index(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(jain_index(std::vector<double>{0, 0}), InvalidArgument);
  EXPECT_THROW(jain_index(std::vector<double>{1, -1}), InvalidArgument);
}

TEST(Jain, BoundsAndScaleInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(1 + t % 7);
    for (double& v : x) v = u(rng);
    const double j = jain_index(x);
    EXPECT_GE(j, 1.0 / static_cast<double>(x.size()) - 1e-12);
    EXPECT_LE(j, 1.0 + 1e-12);
    std::vector<double> y = x;
    for (double& v : y) v *= 3.5;
    EXPECT_NEAR(jain_index(y), j, 1e-12);
  }
}

TEST(Friendliness, Ratio) {
  EXPECT_DOUBLE_EQ(friendliness_ratio(50.0, 100.0), 0.5);
  EXPECT_THROW(friendliness_ratio(1.0, 0.0), InvalidArgument);
}

TEST(SharedRun, PerSecondDeliveryAndJain) {
  const LinkConfig link{100.0, 0.01, 50.0, 0.0, 1};
  auto flows = constant_flows({20.0, 20.0, 40.0});
  const std::vector<double> starts{0.0, 0.0, 5.0};
  const SharedRunResult run = run_shared_link(link, flows, starts, SharedRunOptions{10.0});
  ASSERT_EQ(run.per_second_delivery.size(), 10u);
  for (int s = 0; s < 10; ++s) {
    const auto& d = run.per_second_delivery[static_cast<std::size_t>(s)];
    EXPECT_NEAR(d[0], 20.0, 1e-6) << s;
    EXPECT_NEAR(d[2], s >= 5 ? 40.0 : 0.0, 1e-6) << s;
    const JainSample& j = run.jain[static_cast<std::size_t>(s)];
    EXPECT_EQ(j.active_flows, s >= 5 ? 3 : 2);
    EXPECT_NEAR(j.index, s >= 5 ? jain_index(std::vector<double>{20, 20, 40}) : 1.0, 1e-9);
  }
  EXPECT_NEAR(trailing_jain(run, 5), jain_index(std::vector<double>{20, 20, 40}), 1e-9);
  EXPECT_NEAR(trailing_delivery(run, 2, 5), 40.0, 1e-6);
  EXPECT_THROW(trailing_delivery(run, 0, 11), InvalidArgument);
}

TEST(SharedRun, Errors) {
  const LinkConfig link{100.0, 0.01, 50.0, 0.0, 1};
  auto flows = constant_flows({1.0});
  EXPECT_THROW(run_shared_link(link, flows, std::vector<double>{}, {}), InvalidArgument);
  EXPECT_THROW(fairness_experiment(link, flows, 1.0, {}), InvalidArgument);
}

TEST(Fairness, IdenticalAimdFlowsAreSymmetric) {
  const LinkConfig link{mbps_to_pps(12), 0.05, 133.0, 0.0, 1};
  std::vector<std::unique_ptr<RateController>> flows;
  for (int i = 0; i < 3; ++i) flows.push_back(std::make_unique<AimdController>(link.capacity, 100.0));
  const SharedRunResult run = fairness_experiment(link, flows, 0.0, SharedRunOptions{30.0});
  for (const auto& sec : run.per_second_delivery) {
    EXPECT_NEAR(sec[0], sec[1], 1e-9);
    EXPECT_NEAR(sec[1], sec[2], 1e-9);
  }
  EXPECT_NEAR(trailing_jain(run, 10), 1.0, 1e-12);
}

TEST(Friendliness, AimdAgainstItselfIsOne) {
  const LinkConfig link{mbps_to_pps(12), 0.05, 133.0, 0.0, 1};
  const FriendlinessResult r = friendliness_experiment(
      link, std::make_unique<AimdController>(link.capacity, 100.0),
      std::make_unique<AimdController>(link.capacity, 100.0), SharedRunOptions{20.0});
  EXPECT_NEAR(r.ratio, 1.0, 1e-12);
  EXPECT_GT(r.baseline_delivery, 0.0);
}

TEST(AgentController, HoldsRateUntilHistoryFull) {
  const AgentSpec spec{3, 4, 4, {8}};
  const ActorParams zero = zero_actor(spec);
  AgentController c(zero, WeightVector::create(0.8, 0.1, 0.1), 50.0, RateBounds{0.1, 1000.0});
  MiOutcome o;
  o.sent_pkts = 10;
  o.delivered_pkts = 10;
  o.mean_latency = 0.05;
  o.mi_duration = 0.05;
  for (int i = 0; i < 5; ++i) {
    c.observe(o);
    EXPECT_DOUBLE_EQ(c.rate(), 50.0);  // zero network acts with mu = 0
  }
}

TEST(RewardCdf, SortedAndFractions) {
  const auto cdf = reward_cdf(std::vector<double>{0.5, 0.1, 0.9, 0.3});
  ASSERT_EQ(cdf.size(), 4u);
  EXPECT_DOUBLE_EQ(cdf[0].reward, 0.1);
  EXPECT_DOUBLE_EQ(cdf[3].reward, 0.9);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(cdf[i].fraction, (i + 1) / 4.0);
  EXPECT_THROW(reward_cdf(std::vector<double>{}), InvalidArgument);
  std::ostringstream os;
  write_reward_cdf_csv(os, cdf);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "reward,cumulative_fraction");
}

TEST(Median, OddEven) {
  EXPECT_DOUBLE_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median(std::vector<double>{}), InvalidArgument);
}

TEST(Convergence, ConstantCurveIsZero) {
  EXPECT_EQ(convergence_iteration(std::vector<double>(50, 0.7)), 0);
  std::vector<double> falling(50);
  for (int i = 0; i < 50; ++i) falling[static_cast<std::size_t>(i)] = 1.0 - 0.01 * i;
  EXPECT_EQ(convergence_iteration(falling), 0);
}

TEST(Convergence, RampWithoutSmoothing) {
  std::vector<double> ramp(101);
  for (int i = 0; i <= 100; ++i) ramp[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(convergence_iteration(ramp, 1), 99);
}

TEST(Convergence, StepWithSmoothing) {
  std::vector<double> step(5, 0.0);
  step.resize(60, 1.0);
  EXPECT_EQ(convergence_iteration(step), 14);
}

TEST(Convergence, SmoothedMaxBelowTargetAtEndIsTruncated) {
  std::vector<double> ramp(30);
  for (int i = 0; i < 30; ++i) ramp[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(convergence_iteration(ramp), 29);
  EXPECT_THROW(convergence_iteration(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(convergence_iteration(ramp, 0), InvalidArgument);
}

TEST(ScenarioMatrix, GridOrderAndCdf) {
  const AgentSpec spec{10, 16, 16, {8}};
  std::mt19937_64 rng(2);
  const ActorParams a = make_actor(spec, rng);
  const std::vector<LinkConfig> links{{mbps_to_pps(3), 0.02, 50, 0, 1}, {mbps_to_pps(6), 0.04, 100, 0.01, 2}};
  const std::vector<WeightVector> ws{WeightVector::create(0.8, 0.1, 0.1), WeightVector::create(0.1, 0.8, 0.1)};
  EvalOptions eo;
  eo.episode_len = 10;
  TrainConfig tc;
  const ScenarioMatrix m = evaluate_scenarios(a, links, ws, eo, tc);
  ASSERT_EQ(m.rewards.size(), 4u);
  EvalOptions single = eo;
  single.episodes = 1;
  EXPECT_DOUBLE_EQ(m.at(1, 0), evaluate_policy(a, fixed_link(links[1]), ws[0], single, tc).mean_reward);
  tc.threads = 2;
  EXPECT_EQ(evaluate_scenarios(a, links, ws, eo, tc).rewards, m.rewards);
  EXPECT_THROW(evaluate_scenarios(a, {}, ws, eo, tc), InvalidArgument);
}

}  // namespace
}  // namespace prefcc
