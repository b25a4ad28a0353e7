#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prefcc/checkpoint.hpp"
#include "prefcc/commands.hpp"
#include "prefcc/error.hpp"
#include "prefcc/experiment.hpp"

namespace prefcc {
namespace {

namespace fs = std::filesystem;

// Small enough to train in a second or two.
constexpr const char* kMinimalConfig = R"({
  "seed": 11,
  "link": {"bandwidth_mbps": [3, 6], "one_way_delay_ms": 20, "queue_pkts": [50, 100]},
  "train": {"episodes_per_iter": 2, "episode_len": 10, "epochs": 1, "minibatches": 2,
            "sim_mode": "expectation"},
  "offline": {"step": "1/3", "phase1_min_iters": 2, "phase1_max_iters": 2, "plateau_window": 1,
              "iters_per_objective": 5, "min_passes": 1, "max_passes": 1},
  "eval": {"links": [{"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 100}],
           "weights": [[0.8, 0.1, 0.1]], "episode_len": 10}
})";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("prefcc_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Checkpoint sample_checkpoint(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.history_len = 4;
  const Learner l = Learner::create(c, AgentSpec{4, 5, 6, {7, 3}});
  RequirementPool pool(10);
  pool.insert(WeightVector::create(0.8, 0.1, 0.1));
  pool.insert(WeightVector::create(0.2, 0.3, 0.5));
  LinkRanges r{{3, 6}, {20, 20}, {50, 100}, {0, 0.01}};
  return make_checkpoint(l, pool, r);
}

TEST(ExperimentConfig, ParsesMinimalConfig) {
  const ExperimentConfig c = parse_experiment_config(kMinimalConfig);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.link.bandwidth_mbps, (Range{3, 6}));
  EXPECT_EQ(c.link.one_way_delay_ms, (Range{20, 20}));
  EXPECT_EQ(c.link.loss_rate, (Range{0, 0}));
  EXPECT_EQ(c.train.episodes_per_iter, 2);
  EXPECT_EQ(c.train.sim_mode, SimMode::kExpectation);
  EXPECT_EQ(c.offline.lattice_denominator, 3);
  EXPECT_EQ(c.offline.iters_per_objective, 5);
  ASSERT_EQ(c.eval.links.size(), 1u);
  EXPECT_NEAR(c.eval.links[0].capacity, mbps_to_pps(5), 1e-9);
  EXPECT_NEAR(c.eval.links[0].base_owd, 0.02, 1e-12);
  EXPECT_FALSE(c.eval.fairness.has_value());
}

TEST(ExperimentConfig, MissingKeyIsNamed) {
  try {
    parse_experiment_config(R"({"link": {"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 10}})");
    FAIL();
  } catch (const InvalidConfig& e) {
    EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos);
  }
  try {
    parse_experiment_config(R"({"seed": 1, "link": {"bandwidth_mbps": 5, "queue_pkts": 10}})");
    FAIL();
  } catch (const InvalidConfig& e) {
    EXPECT_NE(std::string(e.what()).find("one_way_delay_ms"), std::string::npos);
  }
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadRanges) {
  const std::string link = R"("link": {"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 10})";
  EXPECT_THROW(parse_experiment_config("{\"seed\": 1, " + link + ", \"colour\": 1}"), InvalidConfig);
  EXPECT_THROW(parse_experiment_config("{\"seed\": 1, " + link + ", \"train\": {\"lrr\": 1}}"),
               InvalidConfig);
  EXPECT_THROW(parse_experiment_config(
                   R"({"seed": 1, "link": {"bandwidth_mbps": [6, 3], "one_way_delay_ms": 20, "queue_pkts": 10}})"),
               InvalidConfig);
  EXPECT_THROW(parse_experiment_config(
                   R"({"seed": 1, "link": {"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 10, "loss_rate": 1.5}})"),
               InvalidConfig);
  EXPECT_THROW(parse_experiment_config("{\"seed\": \"x\", " + link + "}"), ParseError);
  EXPECT_THROW(parse_experiment_config("{not json"), ParseError);
  EXPECT_THROW(parse_experiment_config("{\"seed\": 1, " + link + ", \"offline\": {\"step\": \"0.3\"}}"),
               Error);
}

TEST(ExperimentConfig, FairnessSection) {
  const ExperimentConfig c = parse_experiment_config(R"({
    "seed": 1, "link": {"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 10},
    "eval": {"links": [], "fairness": {"flows": 4, "stagger_s": 5}, "friendliness": true}})");
  ASSERT_TRUE(c.eval.fairness.has_value());
  EXPECT_EQ(c.eval.fairness->flows, 4);
  EXPECT_DOUBLE_EQ(c.eval.fairness->stagger_s, 5.0);
  EXPECT_DOUBLE_EQ(c.eval.fairness->bandwidth_mbps, 12.0);
  EXPECT_TRUE(c.eval.friendliness);
}

TEST(LinkRanges, SourceStaysInRange) {
  const LinkRanges r{{1, 10}, {10, 50}, {1, 1000}, {0, 0.05}};
  const LinkSource src = range_link_source(r);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const LinkConfig l = src(rng);
    EXPECT_GE(l.capacity, mbps_to_pps(1) - 1e-9);
    EXPECT_LE(l.capacity, mbps_to_pps(10) + 1e-9);
    EXPECT_GE(l.base_owd, 0.01 - 1e-12);
    EXPECT_LE(l.base_owd, 0.05 + 1e-12);
    EXPECT_LE(l.random_loss, 0.05);
  }
}

TEST(ParseWeights, AcceptsAndRejects) {
  EXPECT_TRUE(parse_weights("0.8,0.1,0.1").approx_equal(WeightVector::create(0.8, 0.1, 0.1)));
  EXPECT_THROW(parse_weights("0.5,0.5,0.1"), InvalidArgument);
  EXPECT_THROW(parse_weights("0.5,0.5"), InvalidArgument);
  EXPECT_THROW(parse_weights("a,b,c"), InvalidArgument);
  EXPECT_THROW(parse_weights("0.8,0.1,0.1,"), InvalidArgument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint c = sample_checkpoint(3);
  const std::string text = serialize_checkpoint(c);
  const Checkpoint back = parse_checkpoint(text);
  EXPECT_EQ(back.actor.flatten(), c.actor.flatten());
  EXPECT_EQ(back.critic.flatten(), c.critic.flatten());
  EXPECT_EQ(back.critic.value_scale, c.critic.value_scale);
  EXPECT_EQ(back.spec, c.spec);
  EXPECT_EQ(back.pool, c.pool);
  EXPECT_EQ(back.pool_capacity, 10u);
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.link, c.link);
  EXPECT_EQ(back.config.lr, c.config.lr);
  EXPECT_EQ(serialize_checkpoint(back), text);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    StateWindow w;
    w.preference = WeightVector::create(0.5, 0.3, 0.2);
    for (int i = 0; i < 4; ++i) w.stats.push_back({1 + u(rng), 1 + u(rng), u(rng) - 1});
    EXPECT_EQ(forward_actor(back.actor, w).mu, forward_actor(c.actor, w).mu);
    EXPECT_EQ(forward_actor(back.actor, w).sigma, forward_actor(c.actor, w).sigma);
    EXPECT_EQ(forward_critic(back.critic, w), forward_critic(c.critic, w));
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const fs::path dir = scratch_dir("ckpt");
  const Checkpoint c = sample_checkpoint(5);
  save_checkpoint(dir / "c.json", c);
  EXPECT_EQ(load_checkpoint(dir / "c.json").actor.flatten(), c.actor.flatten());
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), ParseError);
}

TEST(Checkpoint, RejectsVersionShapeAndSyntax) {
  const std::string text = serialize_checkpoint(sample_checkpoint(1));
  std::string v2 = text;
  v2.replace(v2.find("\"format_version\": 1"), 19, "\"format_version\": 2");
  EXPECT_THROW(parse_checkpoint(v2), VersionMismatch);
  EXPECT_THROW(parse_checkpoint("{}"), ParseError);
  EXPECT_THROW(parse_checkpoint("[1, 2"), ParseError);
  std::string shape = text;
  const auto pos = shape.find("\"shape\"");
  ASSERT_NE(pos, std::string::npos);
  const auto open = shape.find('[', pos);
  shape.replace(open + 1, 0, "2, ");
  EXPECT_THROW(parse_checkpoint(shape), ShapeMismatch);
}

TEST(Checkpoint, LearnerAndPoolRestore) {
  const Checkpoint c = sample_checkpoint(2);
  const Learner l = learner_from_checkpoint(c);
  EXPECT_EQ(l.actor.flatten(), c.actor.flatten());
  EXPECT_EQ(l.iteration, c.iterations_trained);
  const RequirementPool p = pool_from_checkpoint(c);
  EXPECT_EQ(p.items(), c.pool);
  EXPECT_EQ(p.capacity(), 10u);
}

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    config_ = write_file(dir_ / "config.json", kMinimalConfig);
  }
  fs::path train(const std::string& sub) {
    TrainOfflineArgs a;
    a.config = config_;
    a.out = dir_ / sub;
    return cmd_train_offline(a).checkpoint;
  }
  fs::path dir_;
  fs::path config_;
};

TEST_F(Commands, TrainOfflineWritesArtifacts) {
  TrainOfflineArgs a;
  a.config = config_;
  a.out = dir_ / "run";
  const TrainOfflineReport r = cmd_train_offline(a);
  EXPECT_TRUE(fs::exists(r.checkpoint));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "reward_matrix.json"));
  // 4 objectives (centroid plus 3 bootstraps): 3 x 2 phase-1 and 4 x 5 phase-2 iterations.
  EXPECT_EQ(r.objectives, 4u);
  EXPECT_EQ(r.log_rows, 26u);
  EXPECT_EQ(lines(slurp(dir_ / "run" / "train_log.csv")).size(), r.log_rows + 1);
  EXPECT_EQ(lines(slurp(dir_ / "run" / "sorted_objectives.txt")).size(), 4u);
  EXPECT_EQ(load_checkpoint(r.checkpoint).pool.size(), 4u);
}

TEST_F(Commands, TrainOfflineIsByteIdentical) {
  EXPECT_EQ(slurp(train("a")), slurp(train("b")));
}

TEST_F(Commands, TrainOfflineSeedOverrideChangesResult) {
  TrainOfflineArgs a;
  a.config = config_;
  a.out = dir_ / "s";
  a.overrides.seed = 99;
  const Checkpoint c = load_checkpoint(cmd_train_offline(a).checkpoint);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_NE(slurp(dir_ / "s" / "checkpoint.json"), slurp(train("t")));
}

TEST_F(Commands, TrainOfflineMissingKey) {
  const fs::path bad = write_file(dir_ / "bad.json", R"({"seed": 1})");
  TrainOfflineArgs a;
  a.config = bad;
  a.out = dir_ / "x";
  try {
    cmd_train_offline(a);
    FAIL();
  } catch (const InvalidConfig& e) {
    EXPECT_NE(std::string(e.what()).find("link"), std::string::npos);
  }
}

TEST_F(Commands, AdaptZeroIterationsKeepsParams) {
  const fs::path ckpt = train("base");
  AdaptArgs a;
  a.checkpoint = ckpt;
  a.weights = WeightVector::create(0.7, 0.2, 0.1);
  a.iterations = 0;
  a.out = dir_ / "adapt0";
  const AdaptReport r = cmd_adapt(a);
  EXPECT_EQ(r.snapshots, 0);
  const Checkpoint before = load_checkpoint(ckpt);
  const Checkpoint after = load_checkpoint(r.checkpoint);
  EXPECT_EQ(after.actor.flatten(), before.actor.flatten());
  EXPECT_EQ(after.critic.flatten(), before.critic.flatten());
}

TEST_F(Commands, AdaptSnapshotsAndCurves) {
  const fs::path ckpt = train("base");
  for (int n : {1, 8, 10}) {
    AdaptArgs a;
    a.checkpoint = ckpt;
    a.weights = WeightVector::create(0.7, 0.2, 0.1);
    a.iterations = n;
    a.out = dir_ / ("adapt" + std::to_string(n));
    const AdaptReport r = cmd_adapt(a);
    const int expected = (n + kSnapshotEvery - 1) / kSnapshotEvery;
    EXPECT_EQ(r.snapshots, expected);
    int files = 0;
    for (const auto& e : fs::directory_iterator(a.out / "snapshots")) files += e.is_regular_file();
    EXPECT_EQ(files, expected);
    EXPECT_EQ(lines(slurp(a.out / "adapt_curve.csv")).size(), static_cast<std::size_t>(n + 1));
    // 4 old objectives at iteration 0 and at every snapshot.
    EXPECT_EQ(lines(slurp(a.out / "replay_rewards.csv")).size(),
              static_cast<std::size_t>(1 + 4 * (1 + expected)));
    EXPECT_EQ(load_checkpoint(r.checkpoint).pool.size(), 5u);
  }
}

TEST_F(Commands, AdaptRejectsNegativeIterations) {
  AdaptArgs a;
  a.checkpoint = train("base");
  a.weights = WeightVector::create(0.7, 0.2, 0.1);
  a.iterations = -1;
  a.out = dir_ / "neg";
  EXPECT_THROW(cmd_adapt(a), InvalidArgument);
}

TEST_F(Commands, EvalSingleCellAndRepeatable) {
  const fs::path ckpt = train("base");
  EvalArgs e;
  e.checkpoint = ckpt;
  e.config = config_;
  e.out = dir_ / "e1";
  cmd_eval(e);
  const std::string matrix = slurp(dir_ / "e1" / "reward_matrix.json");
  EXPECT_EQ(lines(slurp(dir_ / "e1" / "reward_cdf.csv")).size(), 2u);
  e.out = dir_ / "e2";
  cmd_eval(e);
  EXPECT_EQ(slurp(dir_ / "e2" / "reward_matrix.json"), matrix);
}

TEST_F(Commands, EvalCdfSortedAndFairnessOutputs) {
  const fs::path ckpt = train("base");
  const fs::path cfg = write_file(dir_ / "eval.json", R"({
    "seed": 11,
    "link": {"bandwidth_mbps": 5, "one_way_delay_ms": 20, "queue_pkts": 100},
    "offline": {"step": "1/4"},
    "eval": {"links": [{"bandwidth_mbps": 3, "one_way_delay_ms": 10, "queue_pkts": 50},
                       {"bandwidth_mbps": 8, "one_way_delay_ms": 30, "queue_pkts": 200, "loss_rate": 0.01}],
             "episode_len": 10,
             "fairness": {"flows": 2, "stagger_s": 2, "duration_s": 6, "trailing_s": 2},
             "friendliness": true}})");
  EvalArgs e;
  e.checkpoint = ckpt;
  e.config = cfg;
  e.out = dir_ / "ev";
  cmd_eval(e);
  const auto rows = lines(slurp(dir_ / "ev" / "reward_cdf.csv"));
  // Header plus 2 links x the 3 points of the step-1/4 lattice.
  ASSERT_EQ(rows.size(), 1u + 2u * 3u);
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double r = std::stod(rows[i].substr(0, rows[i].find(',')));
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "fairness_jain.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "fairness_trace.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "fairness_summary.json"));
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "friendliness.json"));
}

TEST(SortObjectivesCommand, DefaultTenthStep) {
  const auto list = cmd_sort_objectives("1/10", default_bootstraps());
  EXPECT_EQ(list.size(), 36u);
  std::ostringstream os;
  write_objective_list(os, list);
  const auto ls = lines(os.str());
  EXPECT_EQ(ls.size(), 36u);
  for (const std::string& l : ls) EXPECT_NO_THROW(parse_weights(l));
  EXPECT_EQ(cmd_sort_objectives("1/10", default_bootstraps()), list);
  EXPECT_THROW(cmd_sort_objectives("0.3", default_bootstraps()), InvalidArgument);
  EXPECT_THROW(cmd_sort_objectives("1/10", {}), InvalidArgument);
}

}  // namespace
}  // namespace prefcc
