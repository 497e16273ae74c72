#pragma once

#include "hashct/encoder.hpp"
#include "hashct/network.hpp"
#include "hashct/projector.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hashct {

struct AdamHyper {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers for every learnable tensor of a FieldModel. Hash-table
/// moments advance only for rows that received a gradient (lazy/sparse Adam);
/// bias correction always uses the shared step counter.
template <typename Scalar>
struct AdamState {
  using Matrix = typename MLPParams<Scalar>::Matrix;
  using Table = typename HashEncoding<Scalar>::Table;

  std::uint64_t step = 0;
  MLPParams<Scalar> mlp_m, mlp_v;
  std::vector<Table> table_m, table_v;

  static AdamState for_model(const FieldModel<Scalar>& model);
};

struct NonFiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Textbook Adam on n contiguous elements for step t (1-based).
template <typename Scalar>
inline void adam_update(Scalar* param, const Scalar* grad, Scalar* m, Scalar* v, std::size_t n, const AdamHyper& h,
                        std::uint64_t t) {
  const auto b1 = static_cast<Scalar>(h.beta1);
  const auto b2 = static_cast<Scalar>(h.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, static_cast<double>(t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, static_cast<double>(t)));
  const auto lr = static_cast<Scalar>(h.learning_rate);
  const auto eps = static_cast<Scalar>(h.epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (Scalar(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (Scalar(1) - b2) * grad[i] * grad[i];
    const Scalar m_hat = m[i] / c1;
    const Scalar v_hat = v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

/// One optimizer step: dense update of the MLP, sparse update of the touched
/// hash rows. Throws NonFiniteGradient before modifying anything if a gradient
/// entry is NaN or infinite.
template <typename Scalar>
void adam_step(FieldModel<Scalar>& model, const MLPParams<Scalar>& mlp_grads,
               const EncoderGradBuffer<Scalar>& enc_grads, AdamState<Scalar>& state, const AdamHyper& hyper);

/// Dense Adam over every row of one table (reference for the sparse path).
template <typename Scalar>
void adam_step_dense_table(typename HashEncoding<Scalar>::Table& table,
                           const typename HashEncoding<Scalar>::Table& grad, typename HashEncoding<Scalar>::Table& m,
                           typename HashEncoding<Scalar>::Table& v, const AdamHyper& hyper, std::uint64_t t);

}  // namespace hashct
