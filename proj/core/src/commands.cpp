#include "prefcc/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json_io.hpp"
#include "prefcc/checkpoint.hpp"
#include "prefcc/csv.hpp"
#include "prefcc/evalkit.hpp"
#include "prefcc/objective_graph.hpp"

namespace prefcc {

namespace fs = std::filesystem;
using detail::json;

namespace {

fs::path prepare_out(const fs::path& requested, const std::string& fallback) {
  fs::path out = requested.empty() ? fs::path(fallback) : requested;
  if (out.empty()) throw InvalidConfig("no output directory given (--out or output_dir)");
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

void write_json(const fs::path& path, const json& doc) { open_out(path) << doc.dump(1) << "\n"; }

void apply(const RunOverrides& o, TrainConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.mode) c.perf_mode = *o.mode;
  if (o.expectation) c.sim_mode = SimMode::kExpectation;
}

json summary_json(const EvalSummary& s) {
  return {{"mean_reward", s.mean_reward},
          {"mean_thr", s.mean_thr},
          {"mean_lat", s.mean_lat},
          {"mean_throughput_pps", s.mean_throughput_pps},
          {"mean_latency_s", s.mean_latency_s},
          {"mean_loss_rate", s.mean_loss_rate}};
}

json link_json(const LinkConfig& l) {
  return {{"bandwidth_mbps", pps_to_mbps(l.capacity)},
          {"one_way_delay_ms", l.base_owd * 1000.0},
          {"queue_pkts", l.queue_capacity},
          {"loss_rate", l.random_loss}};
}

std::string snapshot_name(int iteration) {
  std::ostringstream s;
  s << "iter_" << std::setw(4) << std::setfill('0') << iteration << ".json";
  return s.str();
}

}  // namespace

TrainOfflineReport cmd_train_offline(const TrainOfflineArgs& args) {
  ExperimentConfig cfg = load_experiment_config(args.config);
  apply(args.overrides, cfg.train);
  cfg.train.validate();
  const fs::path out = prepare_out(args.out, cfg.output_dir);

  Learner learner = Learner::create(cfg.train);
  const LinkSource links = range_link_source(cfg.link);
  const OfflineResult res = offline_train(learner, links, cfg.offline);

  RequirementPool pool;
  for (const WeightVector& w : res.order) pool.insert(w);
  TrainOfflineReport report;
  report.checkpoint = out / "checkpoint.json";
  save_checkpoint(report.checkpoint, make_checkpoint(learner, pool, cfg.link));

  {
    std::ofstream log = open_out(out / "train_log.csv");
    write_training_log(log, res.log);
  }
  {
    std::ofstream list = open_out(out / "sorted_objectives.txt");
    write_objective_list(list, res.order);
  }
  json matrix = json::array();
  for (const RewardMatrixEntry& e : res.reward_matrix) {
    json row = summary_json(e.summary);
    row["weights"] = detail::to_json(e.preference);
    matrix.push_back(row);
  }
  write_json(out / "reward_matrix.json",
             {{"phase1_iters", res.phase1_iters}, {"phase2_passes", res.phase2_passes},
              {"entries", matrix}});
  report.log_rows = res.log.size();
  report.objectives = res.order.size();
  return report;
}

AdaptReport cmd_adapt(const AdaptArgs& args) {
  if (args.iterations < 0) throw InvalidArgument("iterations must be >= 0");
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  std::optional<LinkRanges> ranges = ckpt.link;
  if (args.config) ranges = load_experiment_config(*args.config).link;
  if (!ranges) throw InvalidConfig("checkpoint has no link ranges; pass --config");
  const fs::path out = prepare_out(args.out, "");
  fs::create_directories(out / "snapshots");

  Learner learner = learner_from_checkpoint(ckpt);
  apply(args.overrides, learner.config);
  learner.config.validate();
  RequirementPool pool = pool_from_checkpoint(ckpt);
  const std::vector<WeightVector> old_objectives = pool.items();
  const LinkSource links = range_link_source(*ranges);
  const EvalOptions eval;

  std::ofstream replay = open_out(out / "replay_rewards.csv");
  CsvWriter replay_csv(replay, {"iteration", "w_thr", "w_lat", "w_loss", "reward"});
  auto record_replay = [&](int iteration, const ActorParams& actor) {
    for (const WeightVector& w : old_objectives) {
      const double r = evaluate_policy(actor, links, w, eval, learner.config).mean_reward;
      replay_csv.row(iteration, w.thr(), w.lat(), w.loss(), r);
    }
  };
  record_replay(0, learner.actor);

  std::vector<double> eval_curve;
  AdaptReport report;
  AdaptOptions options;
  options.iterations = args.iterations;
  options.on_iteration = [&](int i, const Learner& l) {
    eval_curve.push_back(evaluate_policy(l.actor, links, args.weights, eval, l.config).mean_reward);
    if (i % kSnapshotEvery == 0 || i == args.iterations) {
      save_checkpoint(out / "snapshots" / snapshot_name(i), make_checkpoint(l, pool, ranges));
      record_replay(i, l.actor);
      ++report.snapshots;
    }
  };
  const std::vector<AdaptIteration> log = online_adapt(learner, links, args.weights, pool, options);

  std::ofstream curve = open_out(out / "adapt_curve.csv");
  CsvWriter curve_csv(curve, {"iteration", "mean_reward", "eval_reward", "replay_w_thr",
                              "replay_w_lat", "replay_w_loss"});
  for (std::size_t i = 0; i < log.size(); ++i) {
    const AdaptIteration& a = log[i];
    if (a.replayed) {
      curve_csv.row(static_cast<int>(i + 1), a.stats.mean_reward, eval_curve[i], a.replayed->thr(),
                    a.replayed->lat(), a.replayed->loss());
    } else {
      curve_csv.row(static_cast<int>(i + 1), a.stats.mean_reward, eval_curve[i], "", "", "");
    }
  }
  report.checkpoint = out / "checkpoint.json";
  save_checkpoint(report.checkpoint, make_checkpoint(learner, pool, ranges));
  return report;
}

void cmd_eval(const EvalArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const ExperimentConfig cfg = load_experiment_config(args.config);
  const fs::path out = prepare_out(args.out, cfg.output_dir);
  TrainConfig tc = ckpt.config;
  tc.threads = cfg.train.threads;
  EvalOptions options = cfg.eval.options;
  if (args.seed) options.seed = *args.seed;
  if (args.mode) options.perf_mode = *args.mode;

  if (cfg.eval.links.empty()) throw InvalidConfig("eval.links must list at least one link");
  std::vector<WeightVector> weights = cfg.eval.weights;
  if (weights.empty()) {
    weights = build_objective_graph(cfg.offline.lattice_denominator).vertices;
  }
  const ScenarioMatrix m = evaluate_scenarios(ckpt.actor, cfg.eval.links, weights, options, tc);

  json links = json::array();
  for (const LinkConfig& l : m.links) links.push_back(link_json(l));
  json ws = json::array();
  for (const WeightVector& w : m.weights) ws.push_back(detail::to_json(w));
  json rows = json::array();
  for (std::size_t i = 0; i < m.links.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.weights.size(); ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  write_json(out / "reward_matrix.json", {{"links", links}, {"weights", ws}, {"rewards", rows}});
  {
    std::ofstream cdf = open_out(out / "reward_cdf.csv");
    const std::vector<CdfPoint> points = reward_cdf(m.rewards);
    write_reward_cdf_csv(cdf, points);
  }

  if (cfg.eval.fairness) {
    const FairnessConfig& f = *cfg.eval.fairness;
    const LinkConfig link = link_from_units(f.bandwidth_mbps, f.one_way_delay_ms, f.queue_pkts,
                                            f.loss_rate, options.seed);
    const RateBounds bounds{tc.env_options().rate_floor,
                            tc.env_options().rate_ceiling_factor * link.capacity};
    std::vector<std::unique_ptr<RateController>> flows;
    for (int i = 0; i < f.flows; ++i) {
      flows.push_back(std::make_unique<AgentController>(
          ckpt.actor, f.weights, options.start_rate_fraction * link.capacity / f.flows, bounds,
          tc.alpha));
    }
    SharedRunOptions run_opts;
    run_opts.duration = f.duration_s;
    const SharedRunResult run = fairness_experiment(link, flows, f.stagger_s, run_opts);
    {
      std::ofstream trace = open_out(out / "fairness_trace.csv");
      write_trace_csv(trace, run.trace);
    }
    {
      std::ofstream jain = open_out(out / "fairness_jain.csv");
      write_jain_csv(jain, run.jain);
    }
    json per_flow = json::array();
    for (int i = 0; i < f.flows; ++i) {
      per_flow.push_back(pps_to_mbps(trailing_delivery(run, i, f.trailing_s)));
    }
    write_json(out / "fairness_summary.json",
               {{"trailing_seconds", f.trailing_s},
                {"trailing_jain", trailing_jain(run, f.trailing_s)},
                {"trailing_delivery_mbps", per_flow}});
  }

  if (cfg.eval.friendliness) {
    const LinkConfig& link = cfg.eval.links.front();
    const RateBounds bounds{tc.env_options().rate_floor,
                            tc.env_options().rate_ceiling_factor * link.capacity};
    const WeightVector w = cfg.eval.fairness ? cfg.eval.fairness->weights : weights.front();
    auto scheme = std::make_unique<AgentController>(
        ckpt.actor, w, options.start_rate_fraction * link.capacity / 2, bounds, tc.alpha);
    auto baseline =
        std::make_unique<AimdController>(link.capacity, options.start_rate_fraction * link.capacity / 2);
    SharedRunOptions run_opts;
    run_opts.duration = cfg.eval.fairness ? cfg.eval.fairness->duration_s : 60.0;
    const FriendlinessResult fr =
        friendliness_experiment(link, std::move(scheme), std::move(baseline), run_opts);
    write_json(out / "friendliness.json",
               {{"ratio", fr.ratio},
                {"scheme_delivery_mbps", pps_to_mbps(fr.scheme_delivery)},
                {"baseline_delivery_mbps", pps_to_mbps(fr.baseline_delivery)}});
  }
}

std::vector<WeightVector> cmd_sort_objectives(const std::string& step,
                                              const std::vector<WeightVector>& bootstraps) {
  if (bootstraps.empty()) throw InvalidArgument("at least one bootstrap objective is required");
  const ObjectiveGraph g = with_bootstraps(build_objective_graph(step_denominator(step)), bootstraps);
  return sorted_weights(g, sort_objectives(g, bootstraps));
}

void write_objective_list(std::ostream& out, const std::vector<WeightVector>& objectives) {
  for (const WeightVector& w : objectives) out << w.to_string() << "\n";
}

}  // namespace prefcc
