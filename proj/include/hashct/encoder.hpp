#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hashct {

/// Multi-resolution hash grid hyperparameters.
struct EncoderConfig {
  int dims = 3;                             // 2 (fan2d) or 3
  int n_levels = 16;                        // L
  int n_min = 16;                           // coarsest grid resolution
  int n_max = 1400;                         // finest grid resolution
  std::uint32_t table_size = 1u << 19;      // T, power of two
  int feature_dim = 2;                      // F
  int restricted_levels = 4;                // m, levels used outside the FOV

  std::vector<std::string> violations() const;
  void validate() const;

  double growth_factor() const;
  int output_dim() const { return n_levels * feature_dim; }
  int corners() const { return 1 << dims; }
};

/// N_l = floor(N_min * b^l).
int level_resolution(const EncoderConfig& cfg, int level);

inline constexpr std::uint64_t kHashPrimes[3] = {1ull, 19349663ull, 83492791ull};

/// XOR of coordinate-prime products (wrap-around 64-bit), reduced mod T.
/// T must be a power of two.
inline std::uint32_t spatial_hash(std::span<const std::uint32_t> vertex, std::uint32_t table_size) {
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < vertex.size(); ++i) h ^= static_cast<std::uint64_t>(vertex[i]) * kHashPrimes[i];
  return static_cast<std::uint32_t>(h & (table_size - 1));
}

template <typename Scalar>
class EncoderGradBuffer;

/// Per-sample corner indices and weights recorded by a batched encode, reused
/// by the backward scatter.
template <typename Scalar>
struct EncodeTrace {
  int samples = 0;
  int levels = 0;
  int corners = 0;
  std::vector<std::uint8_t> active_levels;  // per sample
  std::vector<std::uint32_t> rows;          // [sample][level][corner]
  std::vector<Scalar> weights;              // [sample][level][corner]

  std::size_t slot(int sample, int level) const {
    return (static_cast<std::size_t>(sample) * levels + level) * corners;
  }
};

/// Learnable hash tables (one T x F matrix per level) and the encoders built
/// on them. Points are expected in the unit cube [0, 1]^d.
template <typename Scalar>
class HashEncoding {
 public:
  using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  HashEncoding() = default;
  /// Zero-initialized tables.
  explicit HashEncoding(const EncoderConfig& cfg);
  /// Tables drawn uniformly from [-1e-4, 1e-4].
  static HashEncoding random(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  int resolution(int level) const { return resolutions_[level]; }
  std::vector<Table>& tables() { return tables_; }
  const std::vector<Table>& tables() const { return tables_; }

  Vector encode_full(const Eigen::Ref<const Eigen::VectorXd>& x) const { return encode(x, cfg_.n_levels); }
  /// First m levels; the remaining (L - m) * F outputs are zero.
  Vector encode_restricted(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return encode(x, cfg_.restricted_levels);
  }
  Vector encode(const Eigen::Ref<const Eigen::VectorXd>& x, int active_levels) const;

  /// Adds d(output)/d(table rows) * upstream into `buf`.
  void encode_backward(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Vector>& upstream,
                       bool restricted, EncoderGradBuffer<Scalar>& buf) const;

  /// Encodes the columns of `points` (d x N). `active` holds the number of
  /// active levels per column. Output is (L*F) x N.
  void encode_batch(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const std::uint8_t> active,
                    Matrix& out, EncodeTrace<Scalar>& trace) const;
  void backward_batch(const EncodeTrace<Scalar>& trace, const Eigen::Ref<const Matrix>& upstream,
                      EncoderGradBuffer<Scalar>& buf) const;

  /// Corner rows and multilinear weights of `x` at `level`.
  void corners(const Eigen::Ref<const Eigen::VectorXd>& x, int level, std::uint32_t* rows, Scalar* weights) const;

 private:
  void corners_raw(const double* x, int level, std::uint32_t* rows, Scalar* weights) const;

  EncoderConfig cfg_;
  std::vector<int> resolutions_;
  std::vector<Table> tables_;
};

/// Gradient accumulator for the hash tables: dense per-level storage plus the
/// list of rows touched since the last clear(), so updates and clears cost
/// O(touched rows).
template <typename Scalar>
class EncoderGradBuffer {
 public:
  using Table = typename HashEncoding<Scalar>::Table;

  EncoderGradBuffer() = default;
  explicit EncoderGradBuffer(const EncoderConfig& cfg);

  void add(int level, std::uint32_t row, const Scalar* grad, Scalar weight) {
    auto* dst = grads_[level].row(row).data();
    for (int f = 0; f < feature_dim_; ++f) dst[f] += weight * grad[f];
    if (!mark_[level][row]) {
      mark_[level][row] = 1;
      touched_[level].push_back(row);
    }
  }

  /// Adds `other` into this buffer. Rows are visited in other's touch order.
  void merge(const EncoderGradBuffer& other);
  void clear();

  int levels() const { return static_cast<int>(grads_.size()); }
  const Table& grad(int level) const { return grads_[level]; }
  const std::vector<std::uint32_t>& touched(int level) const { return touched_[level]; }
  std::size_t touched_count() const;

 private:
  int feature_dim_ = 0;
  std::vector<Table> grads_;
  std::vector<std::vector<std::uint8_t>> mark_;
  std::vector<std::vector<std::uint32_t>> touched_;
};

extern template class HashEncoding<float>;
extern template class HashEncoding<double>;
extern template class EncoderGradBuffer<float>;
extern template class EncoderGradBuffer<double>;

}  // namespace hashct
