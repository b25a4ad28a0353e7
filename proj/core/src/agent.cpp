#include "prefcc/agent.hpp"

#include <algorithm>
#include <cmath>

#include "prefcc/error.hpp"

namespace prefcc {

double apply_action(double x_prev, double action, double alpha, RateBounds bounds) {
  if (!(x_prev > 0.0) || !std::isfinite(x_prev)) {
    throw InvalidArgument("previous sending rate must be finite and > 0");
  }
  if (std::isnan(action)) throw InvalidArgument("action is NaN");
  double x = x_prev;
  if (action > 0.0) {
    x = x_prev * (1.0 + alpha * action);
  } else if (action < 0.0) {
    x = x_prev / (1.0 - alpha * action);
  }
  return std::clamp(x, bounds.floor, bounds.ceiling);
}

nn::MlpSpec AgentSpec::pn_spec() const {
  return {3, {{pn_hidden, nn::Activation::kTanh}, {pn_output, nn::Activation::kTanh}}};
}

nn::MlpSpec AgentSpec::trunk_spec() const {
  nn::MlpSpec s{concat_dim(), {}};
  for (int units : trunk) s.layers.push_back({units, nn::Activation::kTanh});
  return s;
}

nn::MlpSpec AgentSpec::head_spec() const {
  return {trunk.empty() ? concat_dim() : trunk.back(), {{1, nn::Activation::kIdentity}}};
}

namespace {

std::size_t body_params(const AgentSpec& s) {
  return s.pn_spec().param_count() + s.trunk_spec().param_count();
}

void check_log_std(const Eigen::VectorXd& log_std) {
  if (log_std.size() != 1) throw ShapeMismatch("log_std must have length 1");
}

}  // namespace

std::size_t ActorParams::param_count() const {
  return body_params(spec) + spec.head_spec().param_count() + 1;
}

Eigen::VectorXd ActorParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count()));
  std::size_t off = nn::write_flat(body.pn, flat, 0);
  off = nn::write_flat(body.trunk, flat, off);
  off = nn::write_flat(mu_head, flat, off);
  flat(static_cast<Eigen::Index>(off)) = log_std(0);
  return flat;
}

void ActorParams::unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count()) {
    throw ShapeMismatch("flat actor parameter vector has the wrong length");
  }
  std::size_t off = nn::read_flat(body.pn, flat, 0);
  off = nn::read_flat(body.trunk, flat, off);
  off = nn::read_flat(mu_head, flat, off);
  log_std(0) = flat(static_cast<Eigen::Index>(off));
}

std::size_t CriticParams::param_count() const {
  return body_params(spec) + spec.head_spec().param_count();
}

Eigen::VectorXd CriticParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count()));
  std::size_t off = nn::write_flat(body.pn, flat, 0);
  off = nn::write_flat(body.trunk, flat, off);
  nn::write_flat(value_head, flat, off);
  return flat;
}

void CriticParams::unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count()) {
    throw ShapeMismatch("flat critic parameter vector has the wrong length");
  }
  std::size_t off = nn::read_flat(body.pn, flat, 0);
  off = nn::read_flat(body.trunk, flat, off);
  nn::read_flat(value_head, flat, off);
}

ActorParams make_actor(const AgentSpec& spec, std::mt19937_64& rng, double init_log_std) {
  ActorParams a;
  a.spec = spec;
  a.body.pn = nn::init_mlp(spec.pn_spec(), rng);
  a.body.trunk = nn::init_mlp(spec.trunk_spec(), rng);
  a.mu_head = nn::init_mlp(spec.head_spec(), rng);
  // Start near a zero-mean policy.
  a.mu_head.layers[0].weight *= 0.01;
  a.log_std = Eigen::VectorXd::Constant(1, init_log_std);
  return a;
}

CriticParams make_critic(const AgentSpec& spec, std::mt19937_64& rng, double value_scale) {
  CriticParams c;
  c.spec = spec;
  c.body.pn = nn::init_mlp(spec.pn_spec(), rng);
  c.body.trunk = nn::init_mlp(spec.trunk_spec(), rng);
  c.value_head = nn::init_mlp(spec.head_spec(), rng);
  c.value_scale = value_scale;
  return c;
}

ActorParams zero_actor(const AgentSpec& spec, double init_log_std) {
  ActorParams a;
  a.spec = spec;
  a.body.pn = nn::zero_mlp(spec.pn_spec());
  a.body.trunk = nn::zero_mlp(spec.trunk_spec());
  a.mu_head = nn::zero_mlp(spec.head_spec());
  a.log_std = Eigen::VectorXd::Constant(1, init_log_std);
  return a;
}

CriticParams zero_critic(const AgentSpec& spec, double value_scale) {
  CriticParams c;
  c.spec = spec;
  c.body.pn = nn::zero_mlp(spec.pn_spec());
  c.body.trunk = nn::zero_mlp(spec.trunk_spec());
  c.value_head = nn::zero_mlp(spec.head_spec());
  c.value_scale = value_scale;
  return c;
}

Eigen::VectorXd preference_embed(const AgentSpec& spec, const nn::MlpParams& pn,
                                 const WeightVector& w) {
  const Eigen::Vector3d x(w.thr(), w.lat(), w.loss());
  return nn::mlp_forward(spec.pn_spec(), pn, x);
}

BatchInputs BatchInputs::from_windows(const std::vector<const StateWindow*>& windows) {
  BatchInputs in;
  const auto n = static_cast<Eigen::Index>(windows.size());
  const auto rows = windows.empty() ? 0 : static_cast<Eigen::Index>(windows[0]->stats.size() * 3);
  in.prefs.resize(3, n);
  in.stats.resize(rows, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const StateWindow& w = *windows[static_cast<std::size_t>(j)];
    if (static_cast<Eigen::Index>(w.stats.size() * 3) != rows) {
      throw ShapeMismatch("state windows in one batch must have equal length");
    }
    in.prefs(0, j) = w.preference.thr();
    in.prefs(1, j) = w.preference.lat();
    in.prefs(2, j) = w.preference.loss();
    for (std::size_t k = 0; k < w.stats.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(3 * k);
      in.stats(r, j) = w.stats[k].sending_ratio;
      in.stats(r + 1, j) = w.stats[k].latency_ratio;
      in.stats(r + 2, j) = w.stats[k].latency_gradient;
    }
  }
  return in;
}

namespace {

Eigen::MatrixXd body_forward(const AgentSpec& spec, const NetworkBody& body, const BatchInputs& in,
                             BodyTape* tape) {
  if (in.stats.rows() != spec.stats_dim()) {
    throw ShapeMismatch("statistics window has " + std::to_string(in.stats.rows() / 3) +
                        " entries, expected " + std::to_string(spec.history_len));
  }
  const Eigen::MatrixXd emb =
      nn::mlp_forward_batch(spec.pn_spec(), body.pn, in.prefs, tape ? &tape->pn : nullptr);
  Eigen::MatrixXd concat(spec.concat_dim(), in.size());
  concat.topRows(spec.pn_output) = emb;
  concat.bottomRows(spec.stats_dim()) = in.stats;
  return nn::mlp_forward_batch(spec.trunk_spec(), body.trunk, concat,
                               tape ? &tape->trunk : nullptr);
}

// Writes body gradients into flat[0 .. body_params).
void body_backward(const AgentSpec& spec, const NetworkBody& body, const BodyTape& tape,
                   const Eigen::MatrixXd& upstream, Eigen::VectorXd& flat) {
  nn::MlpGrads trunk_g = nn::mlp_backward(spec.trunk_spec(), body.trunk, tape.trunk, upstream);
  const Eigen::MatrixXd emb_grad = trunk_g.input.topRows(spec.pn_output);
  nn::MlpGrads pn_g = nn::mlp_backward(spec.pn_spec(), body.pn, tape.pn, emb_grad);
  std::size_t off = nn::write_flat(pn_g.params, flat, 0);
  nn::write_flat(trunk_g.params, flat, off);
}

BatchInputs single(const StateWindow& window) { return BatchInputs::from_windows({&window}); }

}  // namespace

Eigen::RowVectorXd actor_mu_batch(const ActorParams& actor, const BatchInputs& in,
                                  ActorTape* tape) {
  check_log_std(actor.log_std);
  const Eigen::MatrixXd h = body_forward(actor.spec, actor.body, in, tape ? &tape->body : nullptr);
  return nn::mlp_forward_batch(actor.spec.head_spec(), actor.mu_head, h,
                               tape ? &tape->head : nullptr);
}

Eigen::VectorXd actor_backward(const ActorParams& actor, const ActorTape& tape,
                               const Eigen::RowVectorXd& dmu, double dlog_std) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(actor.param_count()));
  nn::MlpGrads head_g = nn::mlp_backward(actor.spec.head_spec(), actor.mu_head, tape.head, dmu);
  body_backward(actor.spec, actor.body, tape.body, head_g.input, flat);
  std::size_t off = body_params(actor.spec);
  off = nn::write_flat(head_g.params, flat, off);
  flat(static_cast<Eigen::Index>(off)) = dlog_std;
  return flat;
}

Eigen::RowVectorXd critic_value_batch(const CriticParams& critic, const BatchInputs& in,
                                      CriticTape* tape) {
  const Eigen::MatrixXd h =
      body_forward(critic.spec, critic.body, in, tape ? &tape->body : nullptr);
  return critic.value_scale * nn::mlp_forward_batch(critic.spec.head_spec(), critic.value_head, h,
                                                    tape ? &tape->head : nullptr);
}

Eigen::VectorXd critic_backward(const CriticParams& critic, const CriticTape& tape,
                                const Eigen::RowVectorXd& dvalue) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(critic.param_count()));
  nn::MlpGrads head_g = nn::mlp_backward(critic.spec.head_spec(), critic.value_head, tape.head,
                                         critic.value_scale * dvalue);
  body_backward(critic.spec, critic.body, tape.body, head_g.input, flat);
  nn::write_flat(head_g.params, flat, body_params(critic.spec));
  return flat;
}

PolicyOutput forward_actor(const ActorParams& actor, const StateWindow& window) {
  const Eigen::RowVectorXd mu = actor_mu_batch(actor, single(window));
  return {mu(0), std::exp(actor.log_std(0))};
}

double forward_critic(const CriticParams& critic, const StateWindow& window) {
  return critic_value_batch(critic, single(window))(0);
}

ActionSample sample_action(double mu, double sigma, std::mt19937_64& rng) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = normal(rng);
  ActionSample s;
  s.mu = mu;
  s.sigma = sigma;
  s.action = mu + sigma * z;
  s.logp = nn::gaussian_logp(mu, sigma, s.action);
  return s;
}

std::vector<nn::ParamTensor> to_tensors(const ActorParams& actor) {
  std::vector<nn::ParamTensor> out;
  nn::append_tensors(actor.body.pn, "actor.pn", out);
  nn::append_tensors(actor.body.trunk, "actor.trunk", out);
  nn::append_tensors(actor.mu_head, "actor.mu_head", out);
  out.push_back({"actor.log_std", {1}, {actor.log_std(0)}});
  return out;
}

std::vector<nn::ParamTensor> to_tensors(const CriticParams& critic) {
  std::vector<nn::ParamTensor> out;
  nn::append_tensors(critic.body.pn, "critic.pn", out);
  nn::append_tensors(critic.body.trunk, "critic.trunk", out);
  nn::append_tensors(critic.value_head, "critic.value_head", out);
  return out;
}

ActorParams actor_from_tensors(const AgentSpec& spec, const std::vector<nn::ParamTensor>& tensors) {
  ActorParams a;
  a.spec = spec;
  a.body.pn = nn::mlp_from_tensors(spec.pn_spec(), tensors, "actor.pn");
  a.body.trunk = nn::mlp_from_tensors(spec.trunk_spec(), tensors, "actor.trunk");
  a.mu_head = nn::mlp_from_tensors(spec.head_spec(), tensors, "actor.mu_head");
  const nn::ParamTensor& ls = nn::find_tensor(tensors, "actor.log_std");
  if (ls.shape != std::vector<std::size_t>{1} || ls.values.size() != 1) {
    throw ShapeMismatch("tensor 'actor.log_std' has the wrong shape");
  }
  a.log_std = Eigen::VectorXd::Constant(1, ls.values[0]);
  return a;
}

CriticParams critic_from_tensors(const AgentSpec& spec, double value_scale,
                                 const std::vector<nn::ParamTensor>& tensors) {
  CriticParams c;
  c.spec = spec;
  c.body.pn = nn::mlp_from_tensors(spec.pn_spec(), tensors, "critic.pn");
  c.body.trunk = nn::mlp_from_tensors(spec.trunk_spec(), tensors, "critic.trunk");
  c.value_head = nn::mlp_from_tensors(spec.head_spec(), tensors, "critic.value_head");
  c.value_scale = value_scale;
  return c;
}

}  // namespace prefcc
