#include "hashct/projector.hpp"

#include "hashct/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hashct {

std::vector<std::string> SamplingPlan::violations() const {
  std::vector<std::string> out;
  if (!(step_inside > 0.0)) out.push_back("sampling: step_inside must be positive");
  if (!(step_outside >= step_inside)) out.push_back("sampling: step_outside must be >= step_inside");
  return out;
}

void SamplingPlan::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

double RaySampleSet::zone_length(Zone z) const {
  double s = 0.0;
  for (const auto& x : samples)
    if (x.zone == z) s += x.weight;
  return s;
}

std::size_t RaySampleSet::count(Zone z) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [z](const RaySample& s) { return s.zone == z; }));
}

namespace {

// Midpoint nodes on [t0, t1] with spacing `step`; the last cell is shortened to
// end exactly at t1. `offset` in [0, step) shifts the node grid (jitter).
template <typename TagFn>
void append_midpoints(double t0, double t1, double step, double offset, TagFn&& tag, std::vector<RaySample>& out) {
  const double len = t1 - t0;
  if (!(len > 0.0)) return;
  const auto n = static_cast<long>(std::ceil(len / step - 1e-9));
  for (long k = 0; k < n; ++k) {
    const double a = t0 + k * step;
    const double b = (k + 1 == n) ? t1 : a + step;
    const double node = offset > 0.0 ? std::min(a + offset, b) : 0.5 * (a + b);
    out.push_back({node, b - a, tag(node)});
  }
}

}  // namespace

RaySampleSet sample_ray(const Ray& ray, const Domain& domain, const SamplingPlan& plan, std::mt19937_64* jitter_rng) {
  RaySampleSet set{ray, {}};
  const auto outer = clip_to_box(ray, domain.extended);
  if (!outer) return set;
  struct Piece {
    double t0, t1, step;
    Zone zone;
  };
  std::vector<Piece> pieces;
  const auto inner = clip_to_box(ray, domain.fov);
  if (inner) {
    const double a = std::max(inner->t_near, outer->t_near);
    const double b = std::min(inner->t_far, outer->t_far);
    if (a > outer->t_near) pieces.push_back({outer->t_near, a, plan.step_outside, Zone::outside});
    pieces.push_back({a, b, plan.step_inside, Zone::inside});
    if (b < outer->t_far) pieces.push_back({b, outer->t_far, plan.step_outside, Zone::outside});
  } else {
    pieces.push_back({outer->t_near, outer->t_far, plan.step_outside, Zone::outside});
  }

  const bool merged = plan.step_inside == plan.step_outside;
  auto tag_by_piece = [](Zone z) { return [z](double) { return z; }; };
  auto tag_by_position = [&](double t) { return domain.fov.contains(ray.at(t)) ? Zone::inside : Zone::outside; };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (merged) {
    const double offset = (plan.jitter && jitter_rng) ? unit(*jitter_rng) * plan.step_inside : 0.0;
    append_midpoints(outer->t_near, outer->t_far, plan.step_inside, offset, tag_by_position, set.samples);
    return set;
  }
  for (const auto& p : pieces) {
    const double offset = (plan.jitter && jitter_rng) ? unit(*jitter_rng) * p.step : 0.0;
    append_midpoints(p.t0, p.t1, p.step, offset, tag_by_piece(p.zone), set.samples);
  }
  return set;
}

RaySampleSet sample_ray_uniform(const Ray& ray, const Box& box, double step, const Box* fov) {
  RaySampleSet set{ray, {}};
  const auto chord = clip_to_box(ray, box);
  if (!chord) return set;
  auto tag = [&](double t) { return (fov == nullptr || fov->contains(ray.at(t))) ? Zone::inside : Zone::outside; };
  append_midpoints(chord->t_near, chord->t_far, step, 0.0, tag, set.samples);
  return set;
}

std::string to_string(ProjectionMode mode) {
  switch (mode) {
    case ProjectionMode::truncated: return "truncated";
    case ProjectionMode::extended: return "extended";
    case ProjectionMode::naive: return "naive";
  }
  return "extended";
}

ProjectionMode projection_mode_from_string(const std::string& name) {
  if (name == "truncated") return ProjectionMode::truncated;
  if (name == "extended") return ProjectionMode::extended;
  if (name == "naive") return ProjectionMode::naive;
  throw std::invalid_argument("unknown mode '" + name + "' (expected truncated, extended or naive)");
}

template <typename Scalar>
FieldModel<Scalar> FieldModel<Scalar>::create(const EncoderConfig& enc, const MLPConfig& mlp, const Box& bounds,
                                              std::uint64_t seed) {
  if (mlp.input_dim != enc.output_dim())
    throw std::invalid_argument("FieldModel: mlp input_dim must equal n_levels * feature_dim");
  FieldModel m;
  m.encoding = HashEncoding<Scalar>::random(enc, seed);
  m.mlp_config = mlp;
  m.mlp = init_mlp<Scalar>(mlp, seed + 1);
  m.bounds = bounds;
  return m;
}

template <typename Scalar>
Eigen::VectorXd FieldModel<Scalar>::normalize(const Vec3& p) const {
  const int d = dims();
  Eigen::VectorXd u(d);
  const Vec3 ext = bounds.extent();
  for (int i = 0; i < d; ++i) u[i] = std::clamp((p[i] - bounds.lo[i]) / ext[i], 0.0, 1.0);
  return u;
}

template <typename Scalar>
Scalar FieldModel<Scalar>::evaluate(const Vec3& p, bool restricted) const {
  const auto u = normalize(p);
  const auto f = restricted ? encoding.encode_restricted(u) : encoding.encode_full(u);
  return mlp_forward_one<Scalar>(mlp, mlp_config, f);
}

template <typename Scalar>
Eigen::VectorXd forward_project(const FieldModel<Scalar>& model, std::span<const RaySampleSet> rays,
                                ProjectionMode mode, ProjectionCache<Scalar>& cache) {
  const int d = model.dims();
  const auto& ecfg = model.encoding.config();
  const auto full = static_cast<std::uint8_t>(ecfg.n_levels);
  const auto restricted = static_cast<std::uint8_t>(ecfg.restricted_levels);

  cache.ray_offsets.assign(rays.size() + 1, 0);
  std::size_t total = 0;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    cache.ray_offsets[r] = total;
    if (mode == ProjectionMode::truncated)
      total += rays[r].count(Zone::inside);
    else
      total += rays[r].samples.size();
  }
  cache.ray_offsets[rays.size()] = total;

  Eigen::MatrixXd points(d, static_cast<Eigen::Index>(total));
  std::vector<std::uint8_t> active(total);
  cache.weights.resize(static_cast<Eigen::Index>(total));
  const Vec3 lo = model.bounds.lo;
  const Vec3 inv_ext = model.bounds.extent().cwiseInverse();
  Eigen::Index k = 0;
  for (const auto& set : rays) {
    for (const auto& s : set.samples) {
      if (mode == ProjectionMode::truncated && s.zone != Zone::inside) continue;
      const Vec3 p = set.ray.at(s.t);
      for (int i = 0; i < d; ++i) points(i, k) = std::clamp((p[i] - lo[i]) * inv_ext[i], 0.0, 1.0);
      active[k] = (mode == ProjectionMode::extended && s.zone == Zone::outside) ? restricted : full;
      cache.weights[k] = s.weight;
      ++k;
    }
  }

  typename HashEncoding<Scalar>::Matrix features;
  model.encoding.encode_batch(points, active, features, cache.trace);
  cache.mu = mlp_forward(model.mlp, model.mlp_config, std::move(features), cache.mlp_cache);

  cache.predictions.setZero(static_cast<Eigen::Index>(rays.size()));
  for (std::size_t r = 0; r < rays.size(); ++r) {
    double acc = 0.0;
    for (std::size_t j = cache.ray_offsets[r]; j < cache.ray_offsets[r + 1]; ++j)
      acc += static_cast<double>(cache.mu[static_cast<Eigen::Index>(j)]) * cache.weights[static_cast<Eigen::Index>(j)];
    cache.predictions[static_cast<Eigen::Index>(r)] = acc;
  }
  return cache.predictions;
}

template <typename Scalar>
double residual_and_backward(const FieldModel<Scalar>& model, std::span<const double> measured,
                             const ProjectionCache<Scalar>& cache, double scale, MLPParams<Scalar>& mlp_grads,
                             EncoderGradBuffer<Scalar>& enc_grads) {
  const std::size_t n_rays = cache.ray_offsets.empty() ? 0 : cache.ray_offsets.size() - 1;
  if (measured.size() != n_rays) throw std::invalid_argument("residual_and_backward: measured size mismatch");
  const auto total = static_cast<Eigen::Index>(cache.ray_offsets.back());
  typename MLPCache<Scalar>::RowVector upstream(total);
  double loss = 0.0;
  for (std::size_t r = 0; r < n_rays; ++r) {
    const double residual = measured[r] - cache.predictions[static_cast<Eigen::Index>(r)];
    loss += scale * std::abs(residual);
    const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
    for (std::size_t j = cache.ray_offsets[r]; j < cache.ray_offsets[r + 1]; ++j)
      upstream[static_cast<Eigen::Index>(j)] =
          static_cast<Scalar>(-sign * scale * cache.weights[static_cast<Eigen::Index>(j)]);
  }
  if (total == 0) return loss;
  typename MLPParams<Scalar>::Matrix feature_grad;
  mlp_backward(model.mlp, model.mlp_config, cache.mlp_cache, upstream, mlp_grads, &feature_grad);
  model.encoding.backward_batch(cache.trace, feature_grad, enc_grads);
  return loss;
}

template <typename Scalar>
VolumeGrid reconstruct_volume(const FieldModel<Scalar>& model, const GridSpec& grid, int workers) {
  if (grid.empty()) throw std::invalid_argument("reconstruct_volume: empty grid");
  const int d = model.dims();
  for (int corner = 0; corner < 2; ++corner) {
    const Vec3 p = corner == 0 ? grid.voxel_center(0, 0, 0)
                               : grid.voxel_center(grid.dims.x() - 1, grid.dims.y() - 1, grid.dims.z() - 1);
    for (int i = 0; i < d; ++i)
      if (p[i] < model.bounds.lo[i] - 1e-9 || p[i] > model.bounds.hi[i] + 1e-9)
        throw std::invalid_argument("reconstruct_volume: grid extends outside the extended FOV");
  }
  VolumeGrid vol(grid);
  constexpr std::size_t chunk = 4096;
  const std::size_t n_chunks = (grid.size() + chunk - 1) / chunk;
  const auto full = static_cast<std::uint8_t>(model.encoding.config().n_levels);
  parallel_for(n_chunks, workers, [&](std::size_t c0, std::size_t c1, int) {
    EncodeTrace<Scalar> trace;
    MLPCache<Scalar> cache;
    typename HashEncoding<Scalar>::Matrix features;
    for (std::size_t c = c0; c < c1; ++c) {
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(grid.size(), begin + chunk);
      Eigen::MatrixXd points(d, static_cast<Eigen::Index>(end - begin));
      for (std::size_t i = begin; i < end; ++i) points.col(static_cast<Eigen::Index>(i - begin)) = model.normalize(grid.voxel_center(i));
      std::vector<std::uint8_t> active(end - begin, full);
      model.encoding.encode_batch(points, active, features, trace);
      const auto mu = mlp_forward(model.mlp, model.mlp_config, std::move(features), cache);
      for (std::size_t i = begin; i < end; ++i)
        vol.values[static_cast<Eigen::Index>(i)] = static_cast<double>(mu[static_cast<Eigen::Index>(i - begin)]);
    }
  });
  return vol;
}

#define HASHCT_INSTANTIATE_PROJECTOR(S)                                                                          \
  template struct FieldModel<S>;                                                                                 \
  template Eigen::VectorXd forward_project<S>(const FieldModel<S>&, std::span<const RaySampleSet>,              \
                                              ProjectionMode, ProjectionCache<S>&);                              \
  template double residual_and_backward<S>(const FieldModel<S>&, std::span<const double>,                       \
                                           const ProjectionCache<S>&, double, MLPParams<S>&,                     \
                                           EncoderGradBuffer<S>&);                                               \
  template VolumeGrid reconstruct_volume<S>(const FieldModel<S>&, const GridSpec&, int);

HASHCT_INSTANTIATE_PROJECTOR(float)
HASHCT_INSTANTIATE_PROJECTOR(double)

}  // namespace hashct
