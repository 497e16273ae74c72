#pragma once

#include "hashct/adam.hpp"
#include "hashct/geometry.hpp"
#include "hashct/projector.hpp"
#include "hashct/sinogram.hpp"
#include "hashct/volume.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hashct {

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_rays = 128;
  int max_iterations = 200000;
  int eval_every = 10000;
  double stop_psnr_delta = 0.1;
  /// No-ground-truth fallback: stop when the windowed mean loss improves by
  /// less than this fraction between consecutive evaluation windows.
  double stop_loss_rel = 0.005;
  bool use_stopping_rule = true;
  /// Stop as soon as the evaluated PSNR reaches this value.
  std::optional<double> target_psnr;
  int log_every = 100;
  std::uint64_t seed = 0;
  ProjectionMode mode = ProjectionMode::extended;
  int workers = 1;

  std::vector<std::string> violations() const;
  void validate() const;
};

struct LogEntry {
  int iteration = 0;
  double loss = 0.0;
  std::optional<double> psnr;
  double wall_ms = 0.0;  // cumulative training time, evaluation excluded
  std::string phase;     // "train" or "eval"
};

struct EvalPoint {
  int iteration = 0;
  std::optional<double> psnr;
  double window_loss = 0.0;  // mean loss since the previous evaluation
  double train_ms = 0.0;
};

struct TrainingLog {
  std::vector<LogEntry> entries;
  std::vector<EvalPoint> evals;
  std::vector<double> losses;  // every iteration
  int iterations = 0;
  double train_ms = 0.0;
  double eval_ms = 0.0;
  std::string stop_reason;

  std::optional<double> final_psnr() const;
  /// Training time at the first evaluation whose PSNR reached `level`.
  std::optional<double> time_to_reach(double level) const;
  void write_csv(std::ostream& out) const;
};

enum class StopDecision { keep_going, stop };

/// PSNR rule: stop when consecutive evaluations differ by less than
/// stop_psnr_delta. Without PSNR, stop when the windowed loss improves by less
/// than stop_loss_rel (relative). Needs at least two evaluations.
StopDecision stopping_check(const TrainingLog& log, const TrainConfig& cfg);

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Joint Adam minimisation of the network and hash tables against a sinogram.
template <typename Scalar>
class Trainer {
 public:
  Trainer(const Sinogram& sinogram, const Domain& domain, const EncoderConfig& enc_cfg, const MLPConfig& mlp_cfg,
          const SamplingPlan& plan, const TrainConfig& cfg);

  void set_ground_truth(const VolumeGrid& gt) { ground_truth_ = gt; }
  /// Written with the current model when training aborts on a non-finite loss.
  void set_failure_checkpoint(std::string path) { failure_checkpoint_ = std::move(path); }
  /// Called after each evaluation with the log so far.
  void set_eval_callback(std::function<void(const EvalPoint&)> cb) { on_eval_ = std::move(cb); }
  /// Restores parameters and optimizer state; iteration numbering continues.
  void resume(FieldModel<Scalar> model, AdamState<Scalar> state, int iteration);

  FieldModel<Scalar>& model() { return model_; }
  const FieldModel<Scalar>& model() const { return model_; }
  AdamState<Scalar>& state() { return state_; }
  const TrainingLog& log() const { return log_; }
  int iteration() const { return iteration_; }

  /// Detector pixels (linear sinogram indices) drawn for a given iteration.
  std::vector<std::size_t> batch_indices(int iteration) const;
  /// Builds the sample sets for a batch under the configured mode.
  std::vector<RaySampleSet> batch_samples(std::span<const std::size_t> indices, int iteration) const;

  /// One optimizer iteration; returns the batch loss.
  double step();
  std::optional<double> evaluate_psnr() const;
  const TrainingLog& run();

 private:
  const Sinogram& sinogram_;
  Domain domain_;
  SamplingPlan plan_;
  TrainConfig cfg_;
  FieldModel<Scalar> model_;
  AdamState<Scalar> state_;
  TrainingLog log_;
  int iteration_ = 0;
  std::optional<VolumeGrid> ground_truth_;
  std::string failure_checkpoint_;
  std::function<void(const EvalPoint&)> on_eval_;

  struct Worker {
    ProjectionCache<Scalar> cache;
    MLPParams<Scalar> mlp_grads;
    EncoderGradBuffer<Scalar> enc_grads;
  };
  std::vector<Worker> workers_;
};

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace hashct
