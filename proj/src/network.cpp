#include "hashct/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hashct {

std::vector<std::string> MLPConfig::violations() const {
  std::vector<std::string> out;
  if (input_dim < 1) out.push_back("mlp: input_dim must be >= 1");
  if (hidden_layers < 0) out.push_back("mlp: hidden_layers must be >= 0");
  if (hidden_layers > 0 && hidden_width < 1) out.push_back("mlp: hidden_width must be >= 1");
  if (!(mu_max > 0.0)) out.push_back("mlp: mu_max must be positive");
  return out;
}

void MLPConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

std::vector<int> MLPConfig::layer_dims() const {
  std::vector<int> dims{input_dim};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(1);
  return dims;
}

template <typename Scalar>
MLPParams<Scalar> MLPParams<Scalar>::zeros(const MLPConfig& cfg) {
  cfg.validate();
  MLPParams p;
  const auto dims = cfg.layer_dims();
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    p.weights.push_back(Matrix::Zero(dims[i + 1], dims[i]));
    p.biases.push_back(Vector::Zero(dims[i + 1]));
  }
  return p;
}

template <typename Scalar>
std::size_t MLPParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

template <typename Scalar>
bool MLPParams<Scalar>::all_finite() const {
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
  return true;
}

template <typename Scalar>
void MLPParams<Scalar>::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

template <typename Scalar>
MLPParams<Scalar>& MLPParams<Scalar>::operator+=(const MLPParams& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

template <typename Scalar>
MLPParams<Scalar> init_mlp(const MLPConfig& cfg, std::uint64_t seed) {
  auto p = MLPParams<Scalar>::zeros(cfg);
  std::mt19937_64 rng(seed);
  const std::size_t n = p.weights.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& w = p.weights[i];
    const double fan_in = static_cast<double>(w.cols());
    const double fan_out = static_cast<double>(w.rows());
    const double bound = (i + 1 < n) ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<Scalar>(dist(rng));
  }
  return p;
}

template <typename Scalar>
typename MLPCache<Scalar>::RowVector mlp_forward(const MLPParams<Scalar>& params, const MLPConfig& cfg,
                                                 typename MLPParams<Scalar>::Matrix input, MLPCache<Scalar>& cache) {
  if (input.rows() != cfg.input_dim || params.weights.empty() || params.weights.front().cols() != cfg.input_dim)
    throw std::invalid_argument("mlp_forward: input dimension does not match the network");
  const std::size_t n_layers = params.weights.size();
  cache.activations.resize(n_layers);
  cache.activations[0] = std::move(input);
  for (std::size_t i = 0; i + 1 < n_layers; ++i) {
    auto& next = cache.activations[i + 1];
    next.noalias() = params.weights[i] * cache.activations[i];
    next.colwise() += params.biases[i];
    next = next.cwiseMax(Scalar(0));
  }
  typename MLPCache<Scalar>::RowVector z = params.weights.back() * cache.activations.back();
  z.array() += params.biases.back()[0];
  cache.sigmoid = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
  cache.version = params.version;
  cache.valid = true;
  return (static_cast<Scalar>(cfg.mu_max) * cache.sigmoid.array()).matrix();
}

template <typename Scalar>
void mlp_backward(const MLPParams<Scalar>& params, const MLPConfig& cfg, const MLPCache<Scalar>& cache,
                  const Eigen::Ref<const typename MLPCache<Scalar>::RowVector>& upstream, MLPParams<Scalar>& grads,
                  typename MLPParams<Scalar>::Matrix* input_grad) {
  using Matrix = typename MLPParams<Scalar>::Matrix;
  if (!cache.valid || cache.version != params.version)
    throw std::logic_error("mlp_backward: cache does not belong to the current parameters");
  if (upstream.size() != cache.sigmoid.size()) throw std::invalid_argument("mlp_backward: upstream size mismatch");
  const std::size_t n_layers = params.weights.size();
  // d mu / d z = mu_max * s * (1 - s)
  Matrix delta = (upstream.array() * static_cast<Scalar>(cfg.mu_max) * cache.sigmoid.array() *
                  (Scalar(1) - cache.sigmoid.array()))
                     .matrix();
  Matrix upstream_a;
  for (std::size_t i = n_layers; i-- > 0;) {
    const Matrix& a = cache.activations[i];
    grads.weights[i].noalias() += delta * a.transpose();
    grads.biases[i] += delta.rowwise().sum();
    if (i == 0 && input_grad == nullptr) break;
    upstream_a.noalias() = params.weights[i].transpose() * delta;
    if (i == 0) {
      *input_grad = std::move(upstream_a);
      break;
    }
    // ReLU mask: the stored activation is positive exactly where the unit was active.
    delta = (a.array() > Scalar(0)).select(upstream_a.array(), Scalar(0));
  }
}

template <typename Scalar>
Scalar mlp_forward_one(const MLPParams<Scalar>& params, const MLPConfig& cfg,
                       const Eigen::Ref<const typename MLPParams<Scalar>::Vector>& features) {
  MLPCache<Scalar> cache;
  typename MLPParams<Scalar>::Matrix in = features;
  return mlp_forward(params, cfg, std::move(in), cache)(0);
}

#define HASHCT_INSTANTIATE_MLP(S)                                                                               \
  template struct MLPParams<S>;                                                                                 \
  template MLPParams<S> init_mlp<S>(const MLPConfig&, std::uint64_t);                                          \
  template typename MLPCache<S>::RowVector mlp_forward<S>(const MLPParams<S>&, const MLPConfig&,                \
                                                          typename MLPParams<S>::Matrix, MLPCache<S>&);         \
  template void mlp_backward<S>(const MLPParams<S>&, const MLPConfig&, const MLPCache<S>&,                      \
                                const Eigen::Ref<const typename MLPCache<S>::RowVector>&, MLPParams<S>&,        \
                                typename MLPParams<S>::Matrix*);                                                \
  template S mlp_forward_one<S>(const MLPParams<S>&, const MLPConfig&,                                          \
                                const Eigen::Ref<const typename MLPParams<S>::Vector>&);

HASHCT_INSTANTIATE_MLP(float)
HASHCT_INSTANTIATE_MLP(double)

}  // namespace hashct
