#pragma once

// Small dense-network kernel: MLP forward/backward with exact gradients, an
// Adam optimizer over flat parameter vectors, and diagonal-Gaussian helpers.
// Batched routines take samples as matrix columns.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace prefcc::nn {

enum class Activation { kIdentity, kTanh };

struct LayerSpec {
  int units = 0;
  Activation activation = Activation::kTanh;

  bool operator==(const LayerSpec&) const = default;
};

struct MlpSpec {
  int input_dim = 0;
  std::vector<LayerSpec> layers;

  int output_dim() const { return layers.empty() ? input_dim : layers.back().units; }
  std::size_t param_count() const;
  // Throws ShapeMismatch on empty layer list or non-positive sizes.
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

// Two tanh hidden layers of 64 and 32 units.
MlpSpec default_trunk(int input_dim);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MlpParams {
  std::vector<DenseLayer> layers;
};

// Fan-in scaled uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
MlpParams init_mlp(const MlpSpec& spec, std::mt19937_64& rng);
MlpParams zero_mlp(const MlpSpec& spec);

void check_shapes(const MlpSpec& spec, const MlpParams& params);

// Post-activation output of every layer; `outputs[0]` is the input batch.
struct MlpTape {
  std::vector<Eigen::MatrixXd> outputs;
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            const Eigen::VectorXd& input);
Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const MlpParams& params,
                                  const Eigen::MatrixXd& inputs, MlpTape* tape = nullptr);

struct MlpGrads {
  MlpParams params;       // d(sum_j upstream_j . out_j)/d(params), summed over the batch
  Eigen::MatrixXd input;  // per-sample input gradient
};

MlpGrads mlp_backward(const MlpSpec& spec, const MlpParams& params, const MlpTape& tape,
                      const Eigen::MatrixXd& upstream);
MlpGrads mlp_backward(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& upstream);

// Flat (layer-major, weight column-major then bias) parameter packing.
std::size_t write_flat(const MlpParams& params, Eigen::VectorXd& flat, std::size_t offset);
std::size_t read_flat(MlpParams& params, const Eigen::VectorXd& flat, std::size_t offset);

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;  // {rows, cols} or {len}
  std::vector<double> values;      // row-major
};

void append_tensors(const MlpParams& params, const std::string& prefix,
                    std::vector<ParamTensor>& out);
// Looks up `<prefix>.<i>.weight` / `.bias` and checks them against `spec`.
MlpParams mlp_from_tensors(const MlpSpec& spec, const std::vector<ParamTensor>& tensors,
                           const std::string& prefix);
const ParamTensor& find_tensor(const std::vector<ParamTensor>& tensors, const std::string& name);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n);
};

inline constexpr double kDefaultLearningRate = 1e-3;

// Descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double lr = kDefaultLearningRate);

// Rescales `grads` in place so its L2 norm is at most `max_norm`. Returns the
// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grads, double max_norm);

double gaussian_logp(double mu, double sigma, double a);
double gaussian_entropy(double sigma);

}  // namespace prefcc::nn
