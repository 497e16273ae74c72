#include "hashct/adam.hpp"

namespace hashct {

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::for_model(const FieldModel<Scalar>& model) {
  AdamState s;
  s.mlp_m = MLPParams<Scalar>::zeros(model.mlp_config);
  s.mlp_v = MLPParams<Scalar>::zeros(model.mlp_config);
  for (const auto& t : model.encoding.tables()) {
    s.table_m.push_back(Table::Zero(t.rows(), t.cols()));
    s.table_v.push_back(Table::Zero(t.rows(), t.cols()));
  }
  return s;
}

namespace {

template <typename Scalar>
void check_gradients(const MLPParams<Scalar>& mlp_grads, const EncoderGradBuffer<Scalar>& enc_grads) {
  if (!mlp_grads.all_finite()) throw NonFiniteGradient("adam_step: non-finite network gradient");
  for (int l = 0; l < enc_grads.levels(); ++l)
    for (std::uint32_t row : enc_grads.touched(l))
      if (!enc_grads.grad(l).row(row).allFinite()) throw NonFiniteGradient("adam_step: non-finite hash gradient");
}

}  // namespace

template <typename Scalar>
void adam_step(FieldModel<Scalar>& model, const MLPParams<Scalar>& mlp_grads,
               const EncoderGradBuffer<Scalar>& enc_grads, AdamState<Scalar>& state, const AdamHyper& hyper) {
  check_gradients(mlp_grads, enc_grads);
  const std::uint64_t t = ++state.step;
  auto& p = model.mlp;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    adam_update(p.weights[i].data(), mlp_grads.weights[i].data(), state.mlp_m.weights[i].data(),
                state.mlp_v.weights[i].data(), static_cast<std::size_t>(p.weights[i].size()), hyper, t);
    adam_update(p.biases[i].data(), mlp_grads.biases[i].data(), state.mlp_m.biases[i].data(),
                state.mlp_v.biases[i].data(), static_cast<std::size_t>(p.biases[i].size()), hyper, t);
  }
  ++p.version;
  auto& tables = model.encoding.tables();
  const auto F = static_cast<std::size_t>(model.encoding.config().feature_dim);
  for (int l = 0; l < enc_grads.levels(); ++l)
    for (std::uint32_t row : enc_grads.touched(l))
      adam_update(tables[l].row(row).data(), enc_grads.grad(l).row(row).data(), state.table_m[l].row(row).data(),
                  state.table_v[l].row(row).data(), F, hyper, t);
}

template <typename Scalar>
void adam_step_dense_table(typename HashEncoding<Scalar>::Table& table,
                           const typename HashEncoding<Scalar>::Table& grad, typename HashEncoding<Scalar>::Table& m,
                           typename HashEncoding<Scalar>::Table& v, const AdamHyper& hyper, std::uint64_t t) {
  if (!grad.allFinite()) throw NonFiniteGradient("adam_step_dense_table: non-finite gradient");
  adam_update(table.data(), grad.data(), m.data(), v.data(), static_cast<std::size_t>(table.size()), hyper, t);
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(FieldModel<float>&, const MLPParams<float>&, const EncoderGradBuffer<float>&,
                               AdamState<float>&, const AdamHyper&);
template void adam_step<double>(FieldModel<double>&, const MLPParams<double>&, const EncoderGradBuffer<double>&,
                                AdamState<double>&, const AdamHyper&);
template void adam_step_dense_table<float>(HashEncoding<float>::Table&, const HashEncoding<float>::Table&,
                                           HashEncoding<float>::Table&, HashEncoding<float>::Table&,
                                           const AdamHyper&, std::uint64_t);
template void adam_step_dense_table<double>(HashEncoding<double>::Table&, const HashEncoding<double>::Table&,
                                            HashEncoding<double>::Table&, HashEncoding<double>::Table&,
                                            const AdamHyper&, std::uint64_t);

}  // namespace hashct
