#include "hashct/trainer.hpp"

#include "hashct/io.hpp"
#include "hashct/metrics.hpp"
#include "hashct/parallel.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hashct {

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> out;
  if (!(learning_rate > 0.0)) out.push_back("training: learning_rate must be positive");
  if (batch_rays < 1) out.push_back("training: batch_rays must be >= 1");
  if (max_iterations < 0) out.push_back("training: max_iterations must be >= 0");
  if (eval_every < 1) out.push_back("training: eval_every must be >= 1");
  if (log_every < 1) out.push_back("training: log_every must be >= 1");
  if (!(stop_psnr_delta >= 0.0)) out.push_back("training: stop_psnr_delta must be >= 0");
  return out;
}

void TrainConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

std::optional<double> TrainingLog::final_psnr() const {
  for (auto it = evals.rbegin(); it != evals.rend(); ++it)
    if (it->psnr) return it->psnr;
  return std::nullopt;
}

std::optional<double> TrainingLog::time_to_reach(double level) const {
  for (const auto& e : evals)
    if (e.psnr && *e.psnr >= level) return e.train_ms;
  return std::nullopt;
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "iteration,loss,psnr,wall_ms,phase\n";
  for (const auto& e : entries) {
    out << e.iteration << ',' << e.loss << ',';
    if (e.psnr) out << *e.psnr;
    out << ',' << e.wall_ms << ',' << e.phase << '\n';
  }
}

StopDecision stopping_check(const TrainingLog& log, const TrainConfig& cfg) {
  if (log.evals.size() < 2) return StopDecision::keep_going;
  const auto& cur = log.evals[log.evals.size() - 1];
  const auto& prev = log.evals[log.evals.size() - 2];
  if (cur.psnr && prev.psnr)
    return std::abs(*cur.psnr - *prev.psnr) < cfg.stop_psnr_delta ? StopDecision::stop : StopDecision::keep_going;
  if (!(prev.window_loss > 0.0)) return StopDecision::stop;
  const double improvement = (prev.window_loss - cur.window_loss) / prev.window_loss;
  return improvement < cfg.stop_loss_rel ? StopDecision::stop : StopDecision::keep_going;
}

template <typename Scalar>
Trainer<Scalar>::Trainer(const Sinogram& sinogram, const Domain& domain, const EncoderConfig& enc_cfg,
                         const MLPConfig& mlp_cfg, const SamplingPlan& plan, const TrainConfig& cfg)
    : sinogram_(sinogram), domain_(domain), plan_(plan), cfg_(cfg) {
  sinogram.geometry.validate();
  domain.validate();
  plan.validate();
  cfg.validate();
  if (static_cast<std::size_t>(sinogram.values.size()) != sinogram.geometry.n_rays())
    throw std::invalid_argument("Trainer: sinogram size does not match its geometry");
  model_ = FieldModel<Scalar>::create(enc_cfg, mlp_cfg, domain.extended, cfg.seed);
  state_ = AdamState<Scalar>::for_model(model_);
  const int n_workers = resolve_workers(cfg.workers);
  workers_.resize(static_cast<std::size_t>(std::min(n_workers, cfg.batch_rays)));
  for (auto& w : workers_) {
    w.mlp_grads = MLPParams<Scalar>::zeros(mlp_cfg);
    w.enc_grads = EncoderGradBuffer<Scalar>(enc_cfg);
  }
}

template <typename Scalar>
void Trainer<Scalar>::resume(FieldModel<Scalar> model, AdamState<Scalar> state, int iteration) {
  model_ = std::move(model);
  state_ = std::move(state);
  iteration_ = iteration;
}

template <typename Scalar>
std::vector<std::size_t> Trainer<Scalar>::batch_indices(int iteration) const {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, sinogram_.size() - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(cfg_.batch_rays));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

template <typename Scalar>
std::vector<RaySampleSet> Trainer<Scalar>::batch_samples(std::span<const std::size_t> indices, int iteration) const {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(iteration), 0x6a177e5u};
  std::mt19937_64 jitter(seq);
  std::vector<RaySampleSet> sets;
  sets.reserve(indices.size());
  for (std::size_t i : indices) {
    const DetectorIndex d = sinogram_.unravel(i);
    const Ray ray = make_ray(sinogram_.geometry, d.view, d.row, d.col);
    switch (cfg_.mode) {
      case ProjectionMode::truncated:
        sets.push_back(sample_ray_uniform(ray, domain_.fov, plan_.step_inside));
        break;
      case ProjectionMode::naive:
        sets.push_back(sample_ray_uniform(ray, domain_.extended, plan_.step_inside, &domain_.fov));
        break;
      case ProjectionMode::extended:
        sets.push_back(sample_ray(ray, domain_, plan_, &jitter));
        break;
    }
  }
  return sets;
}

template <typename Scalar>
double Trainer<Scalar>::step() {
  const auto indices = batch_indices(iteration_);
  const auto sets = batch_samples(indices, iteration_);
  std::vector<double> measured(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) measured[i] = sinogram_.values[static_cast<Eigen::Index>(indices[i])];

  const double scale = 1.0 / static_cast<double>(indices.size());
  std::vector<double> partial(workers_.size(), 0.0);
  parallel_for(sets.size(), static_cast<int>(workers_.size()), [&](std::size_t begin, std::size_t end, int w) {
    auto& wk = workers_[static_cast<std::size_t>(w)];
    std::span<const RaySampleSet> rays(sets.data() + begin, end - begin);
    forward_project(model_, rays, cfg_.mode, wk.cache);
    partial[static_cast<std::size_t>(w)] =
        residual_and_backward(model_, std::span<const double>(measured.data() + begin, end - begin), wk.cache, scale,
                              wk.mlp_grads, wk.enc_grads);
  });
  double loss = 0.0;
  for (double p : partial) loss += p;
  auto& root = workers_.front();
  for (std::size_t w = 1; w < workers_.size(); ++w) {
    root.mlp_grads += workers_[w].mlp_grads;
    root.enc_grads.merge(workers_[w].enc_grads);
  }

  if (!std::isfinite(loss)) {
    if (!failure_checkpoint_.empty()) save_checkpoint(failure_checkpoint_, model_, &state_);
    throw NumericalFailure("non-finite loss at iteration " + std::to_string(iteration_));
  }
  adam_step(model_, root.mlp_grads, root.enc_grads, state_,
            AdamHyper{cfg_.learning_rate, 0.9, 0.999, 1e-8});
  for (auto& w : workers_) {
    w.mlp_grads.set_zero();
    w.enc_grads.clear();
  }
  ++iteration_;
  return loss;
}

template <typename Scalar>
std::optional<double> Trainer<Scalar>::evaluate_psnr() const {
  if (!ground_truth_) return std::nullopt;
  const VolumeGrid recon = reconstruct_volume(model_, ground_truth_->spec, resolve_workers(cfg_.workers));
  return psnr(recon, *ground_truth_, std::nullopt, &domain_.fov);
}

template <typename Scalar>
const TrainingLog& Trainer<Scalar>::run() {
  using clock = std::chrono::steady_clock;
  double window_sum = 0.0;
  int window_n = 0;
  log_.stop_reason = "max_iterations";
  while (iteration_ < cfg_.max_iterations) {
    const auto t0 = clock::now();
    const double loss = step();
    log_.train_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    log_.losses.push_back(loss);
    log_.iterations = iteration_;
    window_sum += loss;
    ++window_n;
    if (iteration_ % cfg_.log_every == 0) log_.entries.push_back({iteration_, loss, std::nullopt, log_.train_ms, "train"});
    if (iteration_ % cfg_.eval_every != 0) continue;

    const auto e0 = clock::now();
    const auto value = evaluate_psnr();
    log_.eval_ms += std::chrono::duration<double, std::milli>(clock::now() - e0).count();
    EvalPoint point{iteration_, value, window_sum / window_n, log_.train_ms};
    window_sum = 0.0;
    window_n = 0;
    log_.evals.push_back(point);
    log_.entries.push_back({iteration_, point.window_loss, value, log_.train_ms, "eval"});
    if (on_eval_) on_eval_(point);
    if (cfg_.target_psnr && value && *value >= *cfg_.target_psnr) {
      log_.stop_reason = "target_psnr";
      break;
    }
    if (cfg_.use_stopping_rule && stopping_check(log_, cfg_) == StopDecision::stop) {
      log_.stop_reason = value ? "psnr_plateau" : "loss_plateau";
      break;
    }
  }
  return log_;
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace hashct
