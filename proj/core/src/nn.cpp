#include "prefcc/nn.hpp"

#include <cmath>
#include <numbers>

#include "prefcc/error.hpp"

namespace prefcc::nn {

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  int in = input_dim;
  for (const LayerSpec& l : layers) {
    n += static_cast<std::size_t>(l.units) * (static_cast<std::size_t>(in) + 1);
    in = l.units;
  }
  return n;
}

void MlpSpec::validate() const {
  if (input_dim <= 0) throw ShapeMismatch("MLP input dimension must be > 0");
  if (layers.empty()) throw ShapeMismatch("MLP needs at least one layer");
  for (const LayerSpec& l : layers) {
    if (l.units <= 0) throw ShapeMismatch("MLP layer sizes must be > 0");
  }
}

MlpSpec default_trunk(int input_dim) {
  return {input_dim, {{64, Activation::kTanh}, {32, Activation::kTanh}}};
}

MlpParams init_mlp(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  MlpParams p;
  int in = spec.input_dim;
  for (const LayerSpec& l : spec.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer d;
    d.weight.resize(l.units, in);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < l.units; ++r) d.weight(r, c) = u(rng);
    d.bias = Eigen::VectorXd::Zero(l.units);
    p.layers.push_back(std::move(d));
    in = l.units;
  }
  return p;
}

MlpParams zero_mlp(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  int in = spec.input_dim;
  for (const LayerSpec& l : spec.layers) {
    p.layers.push_back({Eigen::MatrixXd::Zero(l.units, in), Eigen::VectorXd::Zero(l.units)});
    in = l.units;
  }
  return p;
}

void check_shapes(const MlpSpec& spec, const MlpParams& params) {
  spec.validate();
  if (params.layers.size() != spec.layers.size()) {
    throw ShapeMismatch("MLP has " + std::to_string(params.layers.size()) + " layers, spec has " +
                        std::to_string(spec.layers.size()));
  }
  int in = spec.input_dim;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const DenseLayer& d = params.layers[i];
    const int out = spec.layers[i].units;
    if (d.weight.rows() != out || d.weight.cols() != in || d.bias.size() != out) {
      throw ShapeMismatch("MLP layer " + std::to_string(i) + " shape does not match spec");
    }
    in = out;
  }
}

namespace {

void activate(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::kTanh) z = z.array().tanh().matrix();
}

}  // namespace

Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const MlpParams& params,
                                  const Eigen::MatrixXd& inputs, MlpTape* tape) {
  if (inputs.rows() != spec.input_dim) {
    throw ShapeMismatch("MLP input has " + std::to_string(inputs.rows()) + " features, expected " +
                        std::to_string(spec.input_dim));
  }
  if (tape) {
    tape->outputs.clear();
    tape->outputs.reserve(spec.layers.size() + 1);
    tape->outputs.push_back(inputs);
  }
  Eigen::MatrixXd h = inputs;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const DenseLayer& d = params.layers[i];
    Eigen::MatrixXd z = d.weight * h;
    z.colwise() += d.bias;
    activate(spec.layers[i].activation, z);
    h = std::move(z);
    if (tape) tape->outputs.push_back(h);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            const Eigen::VectorXd& input) {
  return mlp_forward_batch(spec, params, Eigen::MatrixXd(input)).col(0);
}

MlpGrads mlp_backward(const MlpSpec& spec, const MlpParams& params, const MlpTape& tape,
                      const Eigen::MatrixXd& upstream) {
  const std::size_t n_layers = spec.layers.size();
  if (tape.outputs.size() != n_layers + 1) throw ShapeMismatch("MLP tape does not match spec");
  if (upstream.rows() != spec.output_dim() || upstream.cols() != tape.outputs.back().cols()) {
    throw ShapeMismatch("upstream gradient shape does not match MLP output");
  }
  MlpGrads g;
  g.params.layers.resize(n_layers);
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = n_layers; k-- > 0;) {
    const Eigen::MatrixXd& out = tape.outputs[k + 1];
    if (spec.layers[k].activation == Activation::kTanh) {
      delta = (delta.array() * (1.0 - out.array().square())).matrix();
    }
    const Eigen::MatrixXd& in = tape.outputs[k];
    g.params.layers[k].weight = delta * in.transpose();
    g.params.layers[k].bias = delta.rowwise().sum();
    delta = params.layers[k].weight.transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

MlpGrads mlp_backward(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& upstream) {
  MlpTape tape;
  mlp_forward_batch(spec, params, inputs, &tape);
  return mlp_backward(spec, params, tape, upstream);
}

std::size_t write_flat(const MlpParams& params, Eigen::VectorXd& flat, std::size_t offset) {
  for (const DenseLayer& d : params.layers) {
    const auto nw = static_cast<std::size_t>(d.weight.size());
    flat.segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(nw)) =
        Eigen::Map<const Eigen::VectorXd>(d.weight.data(), d.weight.size());
    offset += nw;
    flat.segment(static_cast<Eigen::Index>(offset), d.bias.size()) = d.bias;
    offset += static_cast<std::size_t>(d.bias.size());
  }
  return offset;
}

std::size_t read_flat(MlpParams& params, const Eigen::VectorXd& flat, std::size_t offset) {
  for (DenseLayer& d : params.layers) {
    Eigen::Map<Eigen::VectorXd>(d.weight.data(), d.weight.size()) =
        flat.segment(static_cast<Eigen::Index>(offset), d.weight.size());
    offset += static_cast<std::size_t>(d.weight.size());
    d.bias = flat.segment(static_cast<Eigen::Index>(offset), d.bias.size());
    offset += static_cast<std::size_t>(d.bias.size());
  }
  return offset;
}

void append_tensors(const MlpParams& params, const std::string& prefix,
                    std::vector<ParamTensor>& out) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const DenseLayer& d = params.layers[i];
    ParamTensor w{prefix + "." + std::to_string(i) + ".weight",
                  {static_cast<std::size_t>(d.weight.rows()), static_cast<std::size_t>(d.weight.cols())},
                  {}};
    w.values.reserve(static_cast<std::size_t>(d.weight.size()));
    for (Eigen::Index r = 0; r < d.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < d.weight.cols(); ++c) w.values.push_back(d.weight(r, c));
    ParamTensor b{prefix + "." + std::to_string(i) + ".bias",
                  {static_cast<std::size_t>(d.bias.size())},
                  std::vector<double>(d.bias.data(), d.bias.data() + d.bias.size())};
    out.push_back(std::move(w));
    out.push_back(std::move(b));
  }
}

const ParamTensor& find_tensor(const std::vector<ParamTensor>& tensors, const std::string& name) {
  for (const ParamTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw ShapeMismatch("missing parameter tensor '" + name + "'");
}

MlpParams mlp_from_tensors(const MlpSpec& spec, const std::vector<ParamTensor>& tensors,
                           const std::string& prefix) {
  spec.validate();
  MlpParams p;
  int in = spec.input_dim;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto out = static_cast<std::size_t>(spec.layers[i].units);
    const auto cols = static_cast<std::size_t>(in);
    const ParamTensor& w = find_tensor(tensors, prefix + "." + std::to_string(i) + ".weight");
    const ParamTensor& b = find_tensor(tensors, prefix + "." + std::to_string(i) + ".bias");
    if (w.shape != std::vector<std::size_t>{out, cols} || w.values.size() != out * cols) {
      throw ShapeMismatch("tensor '" + w.name + "' has the wrong shape");
    }
    if (b.shape != std::vector<std::size_t>{out} || b.values.size() != out) {
      throw ShapeMismatch("tensor '" + b.name + "' has the wrong shape");
    }
    DenseLayer d;
    d.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < out; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        d.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w.values[r * cols + c];
    d.bias = Eigen::Map<const Eigen::VectorXd>(b.values.data(), static_cast<Eigen::Index>(out));
    p.layers.push_back(std::move(d));
    in = spec.layers[i].units;
  }
  return p;
}

AdamState AdamState::for_size(std::size_t n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeMismatch("Adam parameter, gradient and moment sizes differ");
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

double clip_grad_norm(Eigen::VectorXd& grads, double max_norm) {
  const double norm = grads.norm();
  if (max_norm > 0.0 && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

double gaussian_logp(double mu, double sigma, double a) {
  if (!(sigma > 0.0)) throw InvalidArgument("Gaussian sigma must be > 0");
  const double z = (a - mu) / sigma;
  return -std::log(sigma * std::sqrt(2.0 * std::numbers::pi)) - 0.5 * z * z;
}

double gaussian_entropy(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("Gaussian sigma must be > 0");
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma);
}

}  // namespace prefcc::nn
