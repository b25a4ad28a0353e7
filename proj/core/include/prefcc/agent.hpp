#pragma once

// Preference-conditioned actor-critic. Both networks embed the weight vector
// with their own preference sub-network (PN), concatenate the embedding with
// the flattened statistics window, and run a tanh trunk. The actor emits the
// mean of a Gaussian over actions (log-std is a free parameter); the critic
// emits a scalar value.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "prefcc/env.hpp"
#include "prefcc/nn.hpp"
#include "prefcc/rate_control.hpp"

namespace prefcc {

struct AgentSpec {
  int history_len = kDefaultHistoryLen;
  int pn_hidden = 16;
  int pn_output = 16;
  std::vector<int> trunk = {64, 32};

  int stats_dim() const { return 3 * history_len; }
  int concat_dim() const { return pn_output + stats_dim(); }
  nn::MlpSpec pn_spec() const;
  nn::MlpSpec trunk_spec() const;
  nn::MlpSpec head_spec() const;

  bool operator==(const AgentSpec&) const = default;
};

struct NetworkBody {
  nn::MlpParams pn;
  nn::MlpParams trunk;
};

struct ActorParams {
  AgentSpec spec;
  NetworkBody body;
  nn::MlpParams mu_head;
  Eigen::VectorXd log_std = Eigen::VectorXd::Zero(1);

  std::size_t param_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

struct CriticParams {
  AgentSpec spec;
  NetworkBody body;
  nn::MlpParams value_head;
  // Fixed output multiplier so the head works on O(1) numbers while
  // discounted returns are O(1 / (1 - gamma)).
  double value_scale = 1.0;

  std::size_t param_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

ActorParams make_actor(const AgentSpec& spec, std::mt19937_64& rng, double init_log_std = 0.0);
CriticParams make_critic(const AgentSpec& spec, std::mt19937_64& rng, double value_scale = 1.0);
ActorParams zero_actor(const AgentSpec& spec, double init_log_std = 0.0);
CriticParams zero_critic(const AgentSpec& spec, double value_scale = 1.0);

Eigen::VectorXd preference_embed(const AgentSpec& spec, const nn::MlpParams& pn,
                                 const WeightVector& w);

struct PolicyOutput {
  double mu = 0.0;
  double sigma = 1.0;
};

PolicyOutput forward_actor(const ActorParams& actor, const StateWindow& window);
double forward_critic(const CriticParams& critic, const StateWindow& window);

struct ActionSample {
  double action = 0.0;
  double logp = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
};

ActionSample sample_action(double mu, double sigma, std::mt19937_64& rng);

// Column-per-sample network inputs.
struct BatchInputs {
  Eigen::MatrixXd prefs;  // 3 x N
  Eigen::MatrixXd stats;  // 3*eta x N

  Eigen::Index size() const { return prefs.cols(); }
  static BatchInputs from_windows(const std::vector<const StateWindow*>& windows);
};

struct BodyTape {
  nn::MlpTape pn;
  nn::MlpTape trunk;
};

struct ActorTape {
  BodyTape body;
  nn::MlpTape head;
};

struct CriticTape {
  BodyTape body;
  nn::MlpTape head;
};

// Per-sample means (1 x N).
Eigen::RowVectorXd actor_mu_batch(const ActorParams& actor, const BatchInputs& in,
                                  ActorTape* tape = nullptr);
// Flat gradient (ActorParams::flatten layout) of sum_i dmu_i * mu_i + dlog_std * log_std.
Eigen::VectorXd actor_backward(const ActorParams& actor, const ActorTape& tape,
                               const Eigen::RowVectorXd& dmu, double dlog_std);

Eigen::RowVectorXd critic_value_batch(const CriticParams& critic, const BatchInputs& in,
                                      CriticTape* tape = nullptr);
Eigen::VectorXd critic_backward(const CriticParams& critic, const CriticTape& tape,
                                const Eigen::RowVectorXd& dvalue);

// Named tensors for checkpoints: actor.pn.*, actor.trunk.*, actor.mu_head.*,
// actor.log_std (and critic.* likewise).
std::vector<nn::ParamTensor> to_tensors(const ActorParams& actor);
std::vector<nn::ParamTensor> to_tensors(const CriticParams& critic);
ActorParams actor_from_tensors(const AgentSpec& spec, const std::vector<nn::ParamTensor>& tensors);
CriticParams critic_from_tensors(const AgentSpec& spec, double value_scale,
                                 const std::vector<nn::ParamTensor>& tensors);

}  // namespace prefcc
