#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace hashct {

/// Fully connected ReLU network with a scaled sigmoid head:
/// mu = mu_max * sigmoid(W_out h + b_out).
struct MLPConfig {
  int input_dim = 32;
  int hidden_layers = 3;
  int hidden_width = 256;
  double mu_max = 0.1;  // 1/mm

  std::vector<std::string> violations() const;
  void validate() const;
  /// {input_dim, hidden_width x hidden_layers, 1}
  std::vector<int> layer_dims() const;
};

template <typename Scalar>
struct MLPParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;  // weights[i] is dims[i+1] x dims[i]
  std::vector<Vector> biases;
  /// Bumped whenever the parameters change; caches from older versions are stale.
  std::uint64_t version = 0;

  static MLPParams zeros(const MLPConfig& cfg);
  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
  MLPParams& operator+=(const MLPParams& other);
};

template <typename Scalar>
struct MLPCache {
  using Matrix = typename MLPParams<Scalar>::Matrix;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  std::vector<Matrix> activations;  // [0] = input, then post-ReLU hidden layers
  RowVector sigmoid;                // sigmoid of the output preactivation
  std::uint64_t version = 0;
  bool valid = false;
};

/// He-uniform weights (bound sqrt(6 / fan_in)) for ReLU layers, Glorot-uniform
/// for the output layer, zero biases.
template <typename Scalar>
MLPParams<Scalar> init_mlp(const MLPConfig& cfg, std::uint64_t seed);

/// Evaluates the network on the columns of `input` (input_dim x N).
template <typename Scalar>
typename MLPCache<Scalar>::RowVector mlp_forward(const MLPParams<Scalar>& params, const MLPConfig& cfg,
                                                 typename MLPParams<Scalar>::Matrix input, MLPCache<Scalar>& cache);

/// Reverse pass for upstream = dLoss/dmu (1 x N). Parameter gradients are added
/// into `grads`; when `input_grad` is non-null it receives dLoss/dinput.
template <typename Scalar>
void mlp_backward(const MLPParams<Scalar>& params, const MLPConfig& cfg, const MLPCache<Scalar>& cache,
                  const Eigen::Ref<const typename MLPCache<Scalar>::RowVector>& upstream, MLPParams<Scalar>& grads,
                  typename MLPParams<Scalar>::Matrix* input_grad);

/// Single-input convenience wrapper.
template <typename Scalar>
Scalar mlp_forward_one(const MLPParams<Scalar>& params, const MLPConfig& cfg,
                       const Eigen::Ref<const typename MLPParams<Scalar>::Vector>& features);

}  // namespace hashct
