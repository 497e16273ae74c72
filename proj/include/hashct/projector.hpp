#pragma once

#include "hashct/encoder.hpp"
#include "hashct/geometry.hpp"
#include "hashct/network.hpp"
#include "hashct/volume.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hashct {

/// Step lengths (mm, arc length along the ray) inside the FOV and in the outer shell.
struct SamplingPlan {
  double step_inside = 0.2;
  double step_outside = 2.0;
  bool jitter = false;

  std::vector<std::string> violations() const;
  void validate() const;
};

enum class Zone : std::uint8_t { inside, outside };

struct RaySample {
  double t = 0.0;       // ray parameter, mm
  double weight = 0.0;  // quadrature weight, mm
  Zone zone = Zone::inside;
};

struct RaySampleSet {
  Ray ray;
  std::vector<RaySample> samples;

  double zone_length(Zone z) const;
  std::size_t count(Zone z) const;
};

/// Splits the ray's extended-FOV chord into out/in/out pieces and places
/// midpoint-rule nodes in each with that zone's step; the last node of a piece
/// covers the leftover length. Neighbouring pieces with equal step are sampled
/// as one run, and every node is then tagged by FOV membership.
RaySampleSet sample_ray(const Ray& ray, const Domain& domain, const SamplingPlan& plan,
                        std::mt19937_64* jitter_rng = nullptr);

/// Single-zone midpoint sampling of the chord through `box` (naive dense extension).
/// Nodes are tagged by membership in `fov` when given.
RaySampleSet sample_ray_uniform(const Ray& ray, const Box& box, double step, const Box* fov = nullptr);

/// How samples enter the predicted projection.
///   truncated  only FOV samples, full encoder
///   extended   FOV samples with the full encoder, outer samples with the restricted one
///   naive      every sample with the full encoder
enum class ProjectionMode { truncated, extended, naive };

std::string to_string(ProjectionMode mode);
ProjectionMode projection_mode_from_string(const std::string& name);

/// Hash encoding + MLP over the extended domain `bounds`, which is mapped onto
/// the unit cube at encoder entry.
template <typename Scalar>
struct FieldModel {
  HashEncoding<Scalar> encoding;
  MLPConfig mlp_config;
  MLPParams<Scalar> mlp;
  Box bounds;

  static FieldModel create(const EncoderConfig& enc, const MLPConfig& mlp, const Box& bounds, std::uint64_t seed);

  int dims() const { return encoding.config().dims; }
  /// Unit-cube coordinates of a physical point (first `dims()` axes), clamped to [0, 1].
  Eigen::VectorXd normalize(const Vec3& p) const;
  Scalar evaluate(const Vec3& p, bool restricted = false) const;
};

template <typename Scalar>
struct ProjectionCache {
  std::vector<std::size_t> ray_offsets;  // samples of ray r are [offsets[r], offsets[r+1])
  Eigen::VectorXd weights;
  EncodeTrace<Scalar> trace;
  MLPCache<Scalar> mlp_cache;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mu;
  Eigen::VectorXd predictions;
};

/// Predicted projection of every ray: sum_k f(h(x_k)) * weight_k over the
/// samples admitted by `mode`.
template <typename Scalar>
Eigen::VectorXd forward_project(const FieldModel<Scalar>& model, std::span<const RaySampleSet> rays,
                                ProjectionMode mode, ProjectionCache<Scalar>& cache);

/// L1 data term sum_r scale * |P_r - pred_r|; its subgradient (sign(0) = 0) is
/// accumulated into the network and hash-table gradient buffers.
template <typename Scalar>
double residual_and_backward(const FieldModel<Scalar>& model, std::span<const double> measured,
                             const ProjectionCache<Scalar>& cache, double scale, MLPParams<Scalar>& mlp_grads,
                             EncoderGradBuffer<Scalar>& enc_grads);

/// Evaluates the field (full encoder) at every voxel center. The grid must lie
/// inside the model's bounds.
template <typename Scalar>
VolumeGrid reconstruct_volume(const FieldModel<Scalar>& model, const GridSpec& grid, int workers = 1);

}  // namespace hashct
