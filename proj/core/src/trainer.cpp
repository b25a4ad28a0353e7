#include "prefcc/trainer.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "prefcc/csv.hpp"
#include "prefcc/error.hpp"
#include "parallel.hpp"

namespace prefcc {

namespace {

// Stream tags keep the generators of different consumers apart.
constexpr std::uint64_t kRolloutStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kAdaptStream = 4;
constexpr std::uint64_t kPoolStream = 5;

using detail::parallel_for;

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must lie in (0, 1]");
  if (!(clip_eps > 0.0)) throw InvalidConfig("clip_eps must be > 0");
  if (!(lr > 0.0)) throw InvalidConfig("learning rate must be > 0");
  if (!(alpha > 0.0)) throw InvalidConfig("action scale must be > 0");
  if (history_len <= 0) throw InvalidConfig("history length must be > 0");
  if (entropy_decay_iters <= 0) throw InvalidConfig("entropy_decay_iters must be > 0");
  if (episode_len <= 0 || episodes_per_iter <= 0) {
    throw InvalidConfig("episode_len and episodes_per_iter must be > 0");
  }
  if (epochs <= 0 || minibatches <= 0) throw InvalidConfig("epochs and minibatches must be > 0");
  if (minibatches > episode_len * episodes_per_iter) {
    throw InvalidConfig("more minibatches than samples per iteration");
  }
  if (!(start_rate_min > 0.0 && start_rate_min <= start_rate_max)) {
    throw InvalidConfig("start rate range must satisfy 0 < min <= max");
  }
  if (threads <= 0) throw InvalidConfig("threads must be > 0");
  if (!(log_std_min <= init_log_std && init_log_std <= log_std_max)) {
    throw InvalidConfig("init_log_std must lie in [log_std_min, log_std_max]");
  }
}

EnvOptions TrainConfig::env_options() const {
  EnvOptions o;
  o.history_len = history_len;
  o.alpha = alpha;
  o.perf_mode = perf_mode;
  o.sim_mode = sim_mode;
  return o;
}

double entropy_coef(const TrainConfig& config, std::int64_t iteration) {
  if (iteration < 0) throw InvalidArgument("iteration must be >= 0");
  if (iteration >= config.entropy_decay_iters) return config.entropy_end;
  const double frac = static_cast<double>(iteration) / static_cast<double>(config.entropy_decay_iters);
  return config.entropy_start + (config.entropy_end - config.entropy_start) * frac;
}

double entropy_coef(std::int64_t iteration) { return entropy_coef(TrainConfig{}, iteration); }

std::mt19937_64 derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

LinkSource fixed_link(const LinkConfig& config) {
  validate(config);
  return [config](std::mt19937_64&) { return config; };
}

Trajectory collect_trajectory(Env& env, const ActorParams& actor, const CriticParams& critic,
                              int steps, std::mt19937_64& rng, PolicyMode mode) {
  Trajectory t;
  t.preference = env.preference();
  const auto n = static_cast<std::size_t>(std::max(0, steps));
  t.states.reserve(n);
  t.actions.reserve(n);
  t.rewards.reserve(n);
  t.values.reserve(n);
  t.measures.reserve(n);
  t.outcomes.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const StateWindow& state = env.window();
    const PolicyOutput po = forward_actor(actor, state);
    const double value = forward_critic(critic, state);
    ActionSample a;
    if (mode == PolicyMode::kSample) {
      a = sample_action(po.mu, po.sigma, rng);
    } else {
      a = {po.mu, nn::gaussian_logp(po.mu, po.sigma, po.mu), po.mu, po.sigma};
    }
    t.states.push_back(state);
    StepResult r = env.step(a.action);
    t.actions.push_back(a);
    t.rewards.push_back(r.reward);
    t.values.push_back(value);
    t.measures.push_back(r.measures);
    t.outcomes.push_back(r.outcome);
  }
  if (n > 0) t.bootstrap_value = forward_critic(critic, env.window());
  return t;
}

std::vector<double> discounted_returns(const Trajectory& traj, double gamma) {
  std::vector<double> g(traj.size());
  double running = traj.bootstrap_value;
  for (std::size_t t = traj.size(); t-- > 0;) {
    running = traj.rewards[t] + gamma * running;
    g[t] = running;
  }
  return g;
}

std::vector<double> advantages(const Trajectory& traj, double gamma) {
  if (traj.size() == 0) throw InvalidArgument("advantages of an empty trajectory");
  std::vector<double> adv = discounted_returns(traj, gamma);
  for (std::size_t t = 0; t < adv.size(); ++t) adv[t] -= traj.values[t];
  return adv;
}

PpoBatch PpoBatch::from_trajectories(std::span<const Trajectory> trajs, double gamma) {
  std::vector<const StateWindow*> windows;
  std::vector<double> actions, logp, adv, ret;
  for (const Trajectory& t : trajs) {
    if (t.size() == 0) continue;
    const std::vector<double> g = discounted_returns(t, gamma);
    for (std::size_t i = 0; i < t.size(); ++i) {
      windows.push_back(&t.states[i]);
      actions.push_back(t.actions[i].action);
      logp.push_back(t.actions[i].logp);
      ret.push_back(g[i]);
      adv.push_back(g[i] - t.values[i]);
    }
  }
  auto row = [](const std::vector<double>& v) {
    return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  PpoBatch b;
  b.inputs = BatchInputs::from_windows(windows);
  b.actions = row(actions);
  b.old_logp = row(logp);
  b.advantages = row(adv);
  b.returns = row(ret);
  return b;
}

PpoBatch PpoBatch::subset(std::span<const Eigen::Index> idx) const {
  const auto n = static_cast<Eigen::Index>(idx.size());
  PpoBatch b;
  b.inputs.prefs.resize(inputs.prefs.rows(), n);
  b.inputs.stats.resize(inputs.stats.rows(), n);
  b.actions.resize(n);
  b.old_logp.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = idx[static_cast<std::size_t>(j)];
    b.inputs.prefs.col(j) = inputs.prefs.col(src);
    b.inputs.stats.col(j) = inputs.stats.col(src);
    b.actions(j) = actions(src);
    b.old_logp(j) = old_logp(src);
    b.advantages(j) = advantages(src);
    b.returns(j) = returns(src);
  }
  return b;
}

void PpoBatch::normalize_advantages() {
  const Eigen::Index n = advantages.size();
  if (n < 2) return;
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().sum() / static_cast<double>(n);
  advantages = ((advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
}

namespace {

struct RatioTerms {
  Eigen::RowVectorXd mu;
  Eigen::RowVectorXd ratio;
  double sigma = 1.0;
};

RatioTerms ratios(const ActorParams& actor, const PpoBatch& batch, ActorTape* tape) {
  RatioTerms r;
  r.mu = actor_mu_batch(actor, batch.inputs, tape);
  const double log_std = actor.log_std(0);
  r.sigma = std::exp(log_std);
  const double log_norm = log_std + 0.5 * std::log(2.0 * std::numbers::pi);
  const Eigen::ArrayXd z = ((batch.actions - r.mu).array() / r.sigma).transpose();
  const Eigen::ArrayXd logp = -log_norm - 0.5 * z.square();
  r.ratio = (logp - batch.old_logp.transpose().array()).exp().matrix().transpose();
  if (!r.ratio.allFinite()) throw NumericError("non-finite PPO probability ratio");
  return r;
}

}  // namespace

PpoResult ppo_objective(const ActorParams& actor, const PpoBatch& batch, double clip_eps,
                        double beta) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw InvalidArgument("PPO objective of an empty batch");
  ActorTape tape;
  const RatioTerms rt = ratios(actor, batch, &tape);
  const double inv_var = 1.0 / (rt.sigma * rt.sigma);

  Eigen::RowVectorXd dmu(n);
  double dlog_std = 0.0;
  double surrogate = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = rt.ratio(i);
    const double adv = batch.advantages(i);
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped_ratio * adv;
    surrogate += std::min(unclipped_term, clipped_term);
    // The min picks the unclipped branch unless the clipped one is strictly smaller.
    const bool active = unclipped_term <= clipped_term;
    if (!active) ++clipped;
    const double coeff = active ? adv * ratio : 0.0;
    const double diff = batch.actions(i) - rt.mu(i);
    dmu(i) = coeff * diff * inv_var;
    dlog_std += coeff * (diff * diff * inv_var - 1.0);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  PpoResult r;
  r.surrogate = surrogate * inv_n;
  r.entropy = nn::gaussian_entropy(rt.sigma);
  r.objective = r.surrogate + beta * r.entropy;
  r.clip_fraction = clipped * inv_n;
  r.grad = actor_backward(actor, tape, dmu * inv_n, dlog_std * inv_n + beta);
  return r;
}

double unclipped_objective(const ActorParams& actor, const PpoBatch& batch, double beta) {
  const RatioTerms rt = ratios(actor, batch, nullptr);
  const double surrogate = rt.ratio.cwiseProduct(batch.advantages).mean();
  return surrogate + beta * nn::gaussian_entropy(rt.sigma);
}

PpoResult replay_objective(const ActorParams& actor, const PpoBatch& current,
                           const PpoBatch& replayed, double clip_eps, double beta) {
  PpoResult a = ppo_objective(actor, current, clip_eps, beta);
  const PpoResult b = ppo_objective(actor, replayed, clip_eps, beta);
  a.objective = 0.5 * (a.objective + b.objective);
  a.surrogate = 0.5 * (a.surrogate + b.surrogate);
  a.entropy = 0.5 * (a.entropy + b.entropy);
  a.clip_fraction = 0.5 * (a.clip_fraction + b.clip_fraction);
  a.grad = 0.5 * (a.grad + b.grad);
  return a;
}

CriticLoss critic_loss(const CriticParams& critic, const BatchInputs& inputs,
                       const Eigen::RowVectorXd& targets) {
  const Eigen::Index n = inputs.size();
  if (n == 0 || targets.size() != n) throw InvalidArgument("critic loss needs matching non-empty batch");
  CriticTape tape;
  const Eigen::RowVectorXd v = critic_value_batch(critic, inputs, &tape);
  const Eigen::RowVectorXd err = v - targets;
  CriticLoss out;
  out.loss = err.squaredNorm() / static_cast<double>(n);
  out.grad = critic_backward(critic, tape, err * (2.0 / static_cast<double>(n)));
  return out;
}

double critic_update(CriticParams& critic, nn::AdamState& opt, const BatchInputs& inputs,
                     const Eigen::RowVectorXd& targets, double lr, double max_grad_norm) {
  CriticLoss cl = critic_loss(critic, inputs, targets);
  nn::clip_grad_norm(cl.grad, max_grad_norm);
  Eigen::VectorXd flat = critic.flatten();
  nn::adam_step(flat, cl.grad, opt, lr);
  critic.unflatten(flat);
  return cl.loss;
}

Learner Learner::create(const TrainConfig& config, const AgentSpec& spec) {
  config.validate();
  AgentSpec s = spec;
  s.history_len = config.history_len;
  std::mt19937_64 rng = derive_rng(config.seed, {kInitStream});
  ActorParams actor = make_actor(s, rng, config.init_log_std);
  CriticParams critic = make_critic(s, rng, config.value_scale());
  return from_params(config, std::move(actor), std::move(critic));
}

Learner Learner::from_params(const TrainConfig& config, ActorParams actor, CriticParams critic,
                             std::int64_t iteration) {
  config.validate();
  if (actor.spec.history_len != config.history_len || critic.spec.history_len != config.history_len) {
    throw ShapeMismatch("network history length differs from the training config");
  }
  Learner l;
  l.config = config;
  l.actor_opt = nn::AdamState::for_size(actor.param_count());
  l.critic_opt = nn::AdamState::for_size(critic.param_count());
  l.actor = std::move(actor);
  l.critic = std::move(critic);
  l.iteration = iteration;
  return l;
}

std::vector<Trajectory> collect_batch(const Learner& learner, const LinkSource& links,
                                      const WeightVector& w, std::uint64_t stream) {
  const TrainConfig& cfg = learner.config;
  std::vector<Trajectory> out(static_cast<std::size_t>(cfg.episodes_per_iter));
  parallel_for(out.size(), cfg.threads, [&](std::size_t e) {
    std::mt19937_64 rng = derive_rng(cfg.seed, {kRolloutStream, stream, e});
    LinkConfig link = links(rng);
    link.seed = rng();
    std::uniform_real_distribution<double> start(cfg.start_rate_min, cfg.start_rate_max);
    Env env(link, w, cfg.env_options());
    env.reset(start(rng) * link.capacity);
    out[e] = collect_trajectory(env, learner.actor, learner.critic, cfg.episode_len, rng);
  });
  return out;
}

namespace {

struct UpdateSummary {
  double surrogate = 0.0;
  double critic_loss = 0.0;
};

// PPO epochs over `primary`, optionally averaged with an equally sized
// `replay` batch.
UpdateSummary ppo_update(Learner& learner, const PpoBatch& primary, const PpoBatch* replay,
                         std::uint64_t stream) {
  const TrainConfig& cfg = learner.config;
  const double beta = entropy_coef(cfg, learner.iteration);
  std::mt19937_64 rng = derive_rng(cfg.seed, {kShuffleStream, stream});

  const Eigen::Index n = primary.size();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::vector<Eigen::Index> perm_r;
  if (replay) {
    perm_r.resize(static_cast<std::size_t>(replay->size()));
    std::iota(perm_r.begin(), perm_r.end(), Eigen::Index{0});
  }

  UpdateSummary summary;
  const auto mb_count = static_cast<std::size_t>(cfg.minibatches);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (replay) std::shuffle(perm_r.begin(), perm_r.end(), rng);
    double surr_sum = 0.0, loss_sum = 0.0;
    for (std::size_t m = 0; m < mb_count; ++m) {
      auto slice = [&](const std::vector<Eigen::Index>& p) {
        const std::size_t lo = p.size() * m / mb_count;
        const std::size_t hi = p.size() * (m + 1) / mb_count;
        return std::span<const Eigen::Index>(p.data() + lo, hi - lo);
      };
      PpoBatch mb = primary.subset(slice(perm));
      if (cfg.normalize_advantages) mb.normalize_advantages();
      PpoResult pr;
      BatchInputs critic_in = mb.inputs;
      Eigen::RowVectorXd critic_targets = mb.returns;
      if (replay) {
        PpoBatch mb_r = replay->subset(slice(perm_r));
        if (cfg.normalize_advantages) mb_r.normalize_advantages();
        pr = replay_objective(learner.actor, mb, mb_r, cfg.clip_eps, beta);
        critic_in.prefs.conservativeResize(Eigen::NoChange, mb.size() + mb_r.size());
        critic_in.stats.conservativeResize(Eigen::NoChange, mb.size() + mb_r.size());
        critic_in.prefs.rightCols(mb_r.size()) = mb_r.inputs.prefs;
        critic_in.stats.rightCols(mb_r.size()) = mb_r.inputs.stats;
        critic_targets.conservativeResize(mb.size() + mb_r.size());
        critic_targets.tail(mb_r.size()) = mb_r.returns;
      } else {
        pr = ppo_objective(learner.actor, mb, cfg.clip_eps, beta);
      }
      Eigen::VectorXd descent = -pr.grad;
      nn::clip_grad_norm(descent, cfg.max_grad_norm);
      Eigen::VectorXd flat = learner.actor.flatten();
      nn::adam_step(flat, descent, learner.actor_opt, cfg.lr);
      learner.actor.unflatten(flat);
      learner.actor.log_std(0) = std::clamp(learner.actor.log_std(0), cfg.log_std_min, cfg.log_std_max);

      loss_sum += critic_update(learner.critic, learner.critic_opt, critic_in, critic_targets,
                                cfg.lr, cfg.max_grad_norm);
      surr_sum += pr.surrogate;
    }
    summary.surrogate = surr_sum / static_cast<double>(mb_count);
    summary.critic_loss = loss_sum / static_cast<double>(mb_count);
  }
  return summary;
}

IterationStats summarize(const Learner& learner, const WeightVector& w,
                         std::span<const Trajectory> trajs, const UpdateSummary& upd,
                         double beta) {
  IterationStats s;
  s.iteration = learner.iteration;
  s.preference = w;
  std::size_t count = 0;
  for (const Trajectory& t : trajs) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      s.mean_reward += t.rewards[i];
      s.mean_thr += t.measures[i].thr;
      s.mean_lat += t.measures[i].lat;
      s.mean_loss += t.measures[i].loss;
      ++count;
    }
  }
  if (count > 0) {
    const double inv = 1.0 / static_cast<double>(count);
    s.mean_reward *= inv;
    s.mean_thr *= inv;
    s.mean_lat *= inv;
    s.mean_loss *= inv;
  }
  s.surrogate = upd.surrogate;
  s.critic_loss = upd.critic_loss;
  s.entropy_coef = beta;
  s.log_std = learner.actor.log_std(0);
  return s;
}

}  // namespace

IterationStats train_iteration(Learner& learner, const LinkSource& links, const WeightVector& w) {
  const auto it = static_cast<std::uint64_t>(learner.iteration);
  const std::vector<Trajectory> trajs = collect_batch(learner, links, w, it);
  const PpoBatch batch = PpoBatch::from_trajectories(trajs, learner.config.gamma);
  const double beta = entropy_coef(learner.config, learner.iteration);
  const UpdateSummary upd = ppo_update(learner, batch, nullptr, it);
  IterationStats s = summarize(learner, w, trajs, upd, beta);
  ++learner.iteration;
  return s;
}

std::vector<IterationStats> train_objective(Learner& learner, const LinkSource& links,
                                            const WeightVector& w, int iterations) {
  std::vector<IterationStats> log;
  log.reserve(static_cast<std::size_t>(std::max(0, iterations)));
  for (int i = 0; i < iterations; ++i) log.push_back(train_iteration(learner, links, w));
  return log;
}

EvalSummary evaluate_policy(const ActorParams& actor, const LinkSource& links,
                            const WeightVector& w, const EvalOptions& options,
                            const TrainConfig& config) {
  EnvOptions eo = config.env_options();
  eo.sim_mode = options.sim_mode;
  eo.perf_mode = options.perf_mode;
  // The critic is not needed for acting; a zero critic keeps the rollout code shared.
  const CriticParams critic = zero_critic(actor.spec);
  EvalSummary s;
  std::size_t count = 0;
  for (int e = 0; e < options.episodes; ++e) {
    std::mt19937_64 rng = derive_rng(options.seed, {static_cast<std::uint64_t>(e)});
    LinkConfig link = links(rng);
    link.seed = rng();
    Env env(link, w, eo);
    env.reset(options.start_rate_fraction * link.capacity);
    const Trajectory t = collect_trajectory(env, actor, critic, options.episode_len, rng, options.mode);
    for (std::size_t i = 0; i < t.size(); ++i) {
      s.mean_reward += t.rewards[i];
      s.mean_thr += t.measures[i].thr;
      s.mean_lat += t.measures[i].lat;
      s.mean_throughput_pps += t.outcomes[i].throughput;
      s.mean_latency_s += t.outcomes[i].mean_latency;
      s.mean_loss_rate += 1.0 - t.measures[i].loss;
      ++count;
    }
  }
  if (count > 0) {
    const double inv = 1.0 / static_cast<double>(count);
    s.mean_reward *= inv;
    s.mean_thr *= inv;
    s.mean_lat *= inv;
    s.mean_throughput_pps *= inv;
    s.mean_latency_s *= inv;
    s.mean_loss_rate *= inv;
  }
  return s;
}

bool has_plateaued(std::span<const double> curve, int window, double tolerance) {
  const auto w = static_cast<std::size_t>(window);
  if (window <= 0 || curve.size() < 2 * w) return false;
  const double recent = mean_of(curve.subspan(curve.size() - w, w));
  const double before = mean_of(curve.subspan(curve.size() - 2 * w, w));
  return recent - before < tolerance * std::abs(before);
}

void OfflineConfig::validate() const {
  if (lattice_denominator < 3) throw InvalidConfig("lattice step must be 1/n with n >= 3");
  if (bootstraps.empty()) throw InvalidConfig("at least one bootstrap objective is required");
  if (phase1_min_iters < 0 || phase1_max_iters < phase1_min_iters) {
    throw InvalidConfig("phase-1 iteration bounds must satisfy 0 <= min <= max");
  }
  if (plateau_window <= 0) throw InvalidConfig("plateau window must be > 0");
  if (iters_per_objective <= 0) throw InvalidConfig("iters_per_objective must be > 0");
  if (min_passes < 0 || max_passes < min_passes) {
    throw InvalidConfig("phase-2 pass bounds must satisfy 0 <= min <= max");
  }
}

OfflineResult offline_train(Learner& learner, const LinkSource& links, const OfflineConfig& config) {
  config.validate();
  OfflineResult res;
  res.graph = with_bootstraps(build_objective_graph(config.lattice_denominator), config.bootstraps);
  res.sorted = sort_objectives(res.graph, config.bootstraps);
  res.order = sorted_weights(res.graph, res.sorted);

  // Phase 1: round-robin over the bootstraps until every curve plateaus.
  std::vector<std::vector<double>> curves(config.bootstraps.size());
  for (int it = 0; it < config.phase1_max_iters; ++it) {
    for (std::size_t b = 0; b < config.bootstraps.size(); ++b) {
      IterationStats s = train_iteration(learner, links, config.bootstraps[b]);
      curves[b].push_back(s.mean_reward);
      res.log.push_back(s);
    }
    res.phase1_iters = it + 1;
    if (res.phase1_iters < config.phase1_min_iters) continue;
    const bool all = std::all_of(curves.begin(), curves.end(), [&](const std::vector<double>& c) {
      return has_plateaued(c, config.plateau_window, config.plateau_tolerance);
    });
    if (all) break;
  }

  // Phase 2: short visits along the neighborhood order, cycled.
  std::vector<double> pass_means;
  for (int pass = 0; pass < config.max_passes; ++pass) {
    std::vector<double> rewards;
    for (const WeightVector& w : res.order) {
      for (const IterationStats& s : train_objective(learner, links, w, config.iters_per_objective)) {
        rewards.push_back(s.mean_reward);
        res.log.push_back(s);
      }
    }
    pass_means.push_back(mean_of(rewards));
    res.phase2_passes = pass + 1;
    if (res.phase2_passes >= std::max(config.min_passes, 2)) {
      const double prev = pass_means[pass_means.size() - 2];
      if (pass_means.back() - prev < config.plateau_tolerance * std::abs(prev)) break;
    }
  }

  for (const WeightVector& w : res.order) {
    res.reward_matrix.push_back({w, evaluate_policy(learner.actor, links, w, config.eval, learner.config)});
  }
  return res;
}

RequirementPool::RequirementPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("requirement pool capacity must be > 0");
}

bool RequirementPool::contains(const WeightVector& w) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const WeightVector& x) { return x.approx_equal(w, 1e-9); });
}

bool RequirementPool::insert(const WeightVector& w) {
  if (contains(w)) return false;
  items_.push_back(w);
  if (items_.size() > capacity_) items_.erase(items_.begin());
  return true;
}

const WeightVector& RequirementPool::sample(std::mt19937_64& rng) const {
  if (items_.empty()) throw InvalidArgument("cannot sample from an empty requirement pool");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  return items_[pick(rng)];
}

std::vector<AdaptIteration> online_adapt(Learner& learner, const LinkSource& links,
                                         const WeightVector& new_w, RequirementPool& pool,
                                         const AdaptOptions& options) {
  std::vector<AdaptIteration> out;
  for (int i = 0; i < options.iterations; ++i) {
    const auto it = static_cast<std::uint64_t>(learner.iteration);
    const double beta = entropy_coef(learner.config, learner.iteration);
    const std::vector<Trajectory> cur = collect_batch(learner, links, new_w, (kAdaptStream << 32) ^ (it << 1));
    const PpoBatch cur_batch = PpoBatch::from_trajectories(cur, learner.config.gamma);
    AdaptIteration rec;
    UpdateSummary upd;
    if (pool.empty()) {
      upd = ppo_update(learner, cur_batch, nullptr, (kAdaptStream << 32) ^ it);
    } else {
      std::mt19937_64 pick = derive_rng(learner.config.seed, {kPoolStream, it});
      const WeightVector old_w = pool.sample(pick);
      const std::vector<Trajectory> old =
          collect_batch(learner, links, old_w, (kAdaptStream << 32) ^ (it << 1) ^ 1);
      const PpoBatch old_batch = PpoBatch::from_trajectories(old, learner.config.gamma);
      upd = ppo_update(learner, cur_batch, &old_batch, (kAdaptStream << 32) ^ it);
      rec.replayed = old_w;
    }
    rec.stats = summarize(learner, new_w, cur, upd, beta);
    ++learner.iteration;
    out.push_back(rec);
    if (options.on_iteration) options.on_iteration(i + 1, learner);
  }
  pool.insert(new_w);
  return out;
}

void write_training_log(std::ostream& out, std::span<const IterationStats> log) {
  CsvWriter csv(out, {"iteration", "w_thr", "w_lat", "w_loss", "mean_reward", "surrogate",
                      "entropy_coef"});
  for (const IterationStats& s : log) {
    csv.row(static_cast<long long>(s.iteration), s.preference.thr(), s.preference.lat(),
            s.preference.loss(), s.mean_reward, s.surrogate, s.entropy_coef);
  }
}

}  // namespace prefcc
