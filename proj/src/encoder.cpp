#include "hashct/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hashct {

std::vector<std::string> EncoderConfig::violations() const {
  std::vector<std::string> out;
  if (dims != 2 && dims != 3) out.push_back("encoder: dims must be 2 or 3");
  if (n_levels < 2) out.push_back("encoder: n_levels must be >= 2");
  if (n_min < 1) out.push_back("encoder: n_min must be >= 1");
  if (n_min > n_max) out.push_back("encoder: n_min must not exceed n_max");
  if (table_size == 0 || (table_size & (table_size - 1)) != 0)
    out.push_back("encoder: table_size must be a power of two");
  if (feature_dim < 1) out.push_back("encoder: feature_dim must be >= 1");
  if (restricted_levels < 1 || restricted_levels > n_levels)
    out.push_back("encoder: restricted_levels must lie in [1, n_levels]");
  return out;
}

void EncoderConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

double EncoderConfig::growth_factor() const {
  return std::exp((std::log(static_cast<double>(n_max)) - std::log(static_cast<double>(n_min))) / (n_levels - 1));
}

int level_resolution(const EncoderConfig& cfg, int level) {
  if (level < 0 || level >= cfg.n_levels) throw std::out_of_range("level_resolution: level out of range");
  const double n = cfg.n_min * std::pow(cfg.growth_factor(), level);
  // b^(L-1) reproduces N_max only up to rounding; nudge so floor() recovers it.
  return static_cast<int>(std::floor(n * (1.0 + 1e-12)));
}

template <typename Scalar>
HashEncoding<Scalar>::HashEncoding(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  resolutions_.resize(cfg_.n_levels);
  tables_.resize(cfg_.n_levels);
  for (int l = 0; l < cfg_.n_levels; ++l) {
    resolutions_[l] = level_resolution(cfg_, l);
    tables_[l] = Table::Zero(cfg_.table_size, cfg_.feature_dim);
  }
}

template <typename Scalar>
HashEncoding<Scalar> HashEncoding<Scalar>::random(const EncoderConfig& cfg, std::uint64_t seed) {
  HashEncoding enc(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1e-4, 1e-4);
  for (auto& t : enc.tables_)
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
  return enc;
}

template <typename Scalar>
void HashEncoding<Scalar>::corners(const Eigen::Ref<const Eigen::VectorXd>& x, int level, std::uint32_t* rows,
                                   Scalar* weights) const {
  if (x.size() != cfg_.dims) throw std::invalid_argument("corners: point dimension mismatch");
  double p[3];
  for (int i = 0; i < cfg_.dims; ++i) p[i] = x[i];
  corners_raw(p, level, rows, weights);
}

namespace {

template <int D, typename Scalar>
inline void corners_fixed(const double* x, int n, std::uint32_t table_size, std::uint32_t* rows, Scalar* weights) {
  std::uint64_t base[D], step[D];
  double frac[D];
  for (int i = 0; i < D; ++i) {
    const double p = x[i] * n;
    double c = std::floor(p);
    if (c >= n) c = n - 1;  // x == 1 stays in the last cell
    frac[i] = p - c;
    base[i] = static_cast<std::uint64_t>(c) * kHashPrimes[i];
    step[i] = (static_cast<std::uint64_t>(c) + 1) * kHashPrimes[i];
  }
  const std::uint64_t mask = table_size - 1;
  for (int k = 0; k < (1 << D); ++k) {
    std::uint64_t h = 0;
    double w = 1.0;
    for (int i = 0; i < D; ++i) {
      const bool up = (k >> i) & 1;
      h ^= up ? step[i] : base[i];
      w *= up ? frac[i] : 1.0 - frac[i];
    }
    rows[k] = static_cast<std::uint32_t>(h & mask);
    weights[k] = static_cast<Scalar>(w);
  }
}

}  // namespace

template <typename Scalar>
void HashEncoding<Scalar>::corners_raw(const double* x, int level, std::uint32_t* rows, Scalar* weights) const {
  const int n = resolutions_[level];
  if (cfg_.dims == 2)
    corners_fixed<2>(x, n, cfg_.table_size, rows, weights);
  else
    corners_fixed<3>(x, n, cfg_.table_size, rows, weights);
}

namespace {

void check_point(const Eigen::Ref<const Eigen::VectorXd>& x, int dims) {
  if (x.size() != dims) throw std::invalid_argument("encode: point dimension mismatch");
  for (int i = 0; i < dims; ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw std::domain_error("encode: point outside the unit cube");
}

}  // namespace

template <typename Scalar>
typename HashEncoding<Scalar>::Vector HashEncoding<Scalar>::encode(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                                   int active_levels) const {
  check_point(x, cfg_.dims);
  const int F = cfg_.feature_dim;
  Vector out = Vector::Zero(cfg_.output_dim());
  std::uint32_t rows[8];
  Scalar w[8];
  for (int l = 0; l < active_levels; ++l) {
    corners(x, l, rows, w);
    for (int k = 0; k < cfg_.corners(); ++k) out.segment(l * F, F) += w[k] * tables_[l].row(rows[k]).transpose();
  }
  return out;
}

template <typename Scalar>
void HashEncoding<Scalar>::encode_backward(const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const Eigen::Ref<const Vector>& upstream, bool restricted,
                                           EncoderGradBuffer<Scalar>& buf) const {
  check_point(x, cfg_.dims);
  if (upstream.size() != cfg_.output_dim()) throw std::invalid_argument("encode_backward: upstream size mismatch");
  const int F = cfg_.feature_dim;
  const int active = restricted ? cfg_.restricted_levels : cfg_.n_levels;
  std::uint32_t rows[8];
  Scalar w[8];
  for (int l = 0; l < active; ++l) {
    corners(x, l, rows, w);
    for (int k = 0; k < cfg_.corners(); ++k) buf.add(l, rows[k], upstream.data() + l * F, w[k]);
  }
}

template <typename Scalar>
void HashEncoding<Scalar>::encode_batch(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                        std::span<const std::uint8_t> active, Matrix& out,
                                        EncodeTrace<Scalar>& trace) const {
  const int n = static_cast<int>(points.cols());
  const int L = cfg_.n_levels;
  const int F = cfg_.feature_dim;
  const int C = cfg_.corners();
  if (points.rows() != cfg_.dims) throw std::invalid_argument("encode_batch: point dimension mismatch");
  if (static_cast<int>(active.size()) != n) throw std::invalid_argument("encode_batch: active size mismatch");
  trace.samples = n;
  trace.levels = L;
  trace.corners = C;
  trace.active_levels.assign(active.begin(), active.end());
  trace.rows.resize(static_cast<std::size_t>(n) * L * C);
  trace.weights.resize(static_cast<std::size_t>(n) * L * C);
  out.setZero(cfg_.output_dim(), n);
  for (int s = 0; s < n; ++s) check_point(points.col(s), cfg_.dims);
  // Level-major so each table stays cache-resident while it is read.
  for (int l = 0; l < L; ++l) {
    const Table& table = tables_[l];
    for (int s = 0; s < n; ++s) {
      if (active[s] <= l) continue;
      const std::size_t slot = trace.slot(s, l);
      std::uint32_t* rows = trace.rows.data() + slot;
      Scalar* w = trace.weights.data() + slot;
      corners_raw(points.col(s).data(), l, rows, w);
      Scalar* dst = out.col(s).data() + l * F;
      for (int k = 0; k < C; ++k) {
        const Scalar* q = table.row(rows[k]).data();
        for (int f = 0; f < F; ++f) dst[f] += w[k] * q[f];
      }
    }
  }
}

template <typename Scalar>
void HashEncoding<Scalar>::backward_batch(const EncodeTrace<Scalar>& trace, const Eigen::Ref<const Matrix>& upstream,
                                          EncoderGradBuffer<Scalar>& buf) const {
  const int F = cfg_.feature_dim;
  for (int l = 0; l < trace.levels; ++l)
    for (int s = 0; s < trace.samples; ++s) {
      if (trace.active_levels[s] <= l) continue;
      const Scalar* g = upstream.col(s).data() + l * F;
      const std::size_t slot = trace.slot(s, l);
      for (int k = 0; k < trace.corners; ++k) buf.add(l, trace.rows[slot + k], g, trace.weights[slot + k]);
    }
}

template <typename Scalar>
EncoderGradBuffer<Scalar>::EncoderGradBuffer(const EncoderConfig& cfg) : feature_dim_(cfg.feature_dim) {
  grads_.resize(cfg.n_levels);
  mark_.resize(cfg.n_levels);
  touched_.resize(cfg.n_levels);
  for (int l = 0; l < cfg.n_levels; ++l) {
    grads_[l] = Table::Zero(cfg.table_size, cfg.feature_dim);
    mark_[l].assign(cfg.table_size, 0);
  }
}

template <typename Scalar>
void EncoderGradBuffer<Scalar>::merge(const EncoderGradBuffer& other) {
  for (int l = 0; l < levels(); ++l)
    for (std::uint32_t row : other.touched_[l]) add(l, row, other.grads_[l].row(row).data(), Scalar(1));
}

template <typename Scalar>
void EncoderGradBuffer<Scalar>::clear() {
  for (int l = 0; l < levels(); ++l) {
    for (std::uint32_t row : touched_[l]) {
      grads_[l].row(row).setZero();
      mark_[l][row] = 0;
    }
    touched_[l].clear();
  }
}

template <typename Scalar>
std::size_t EncoderGradBuffer<Scalar>::touched_count() const {
  std::size_t n = 0;
  for (const auto& t : touched_) n += t.size();
  return n;
}

template class HashEncoding<float>;
template class HashEncoding<double>;
template class EncoderGradBuffer<float>;
template class EncoderGradBuffer<double>;

}  // namespace hashct
