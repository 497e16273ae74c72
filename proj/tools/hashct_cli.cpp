// Command-line front end: simulate | train | reconstruct | fdk | eval | ablate.

#include "hashct/allocator.hpp"
#include "hashct/baseline.hpp"
#include "hashct/config.hpp"
#include "hashct/io.hpp"
#include "hashct/metrics.hpp"
#include "hashct/parallel.hpp"
#include "hashct/phantom.hpp"
#include "hashct/trainer.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef HASHCT_VERSION
#define HASHCT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hashct;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

using Clock = std::chrono::steady_clock;

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

void write_manifest(const RunConfig& cfg, const std::string& command, const json& outputs, Clock::time_point start,
                    const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["config_hash"] = hex64(config_hash(cfg));
  m["seed"] = cfg.seed;
  m["versions"] = {{"hashct", HASHCT_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  m["workers"] = resolve_workers(cfg.workers);
  m["wall_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  m["outputs"] = outputs;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream(out_path(cfg, "manifest_" + command + ".json")) << m.dump(2) << '\n';
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError({what + " not found: " + path});
}

/// Middle xy slice of a volume as a PNG spanning [min, max].
void export_slice(const VolumeGrid& vol, const std::string& path) {
  const int iz = vol.spec.dims.z() / 2;
  const Eigen::MatrixXd s = extract_slice(vol, 2, iz);
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff() > lo ? s.maxCoeff() : lo + 1.0;
  write_png(path, slice_image(vol, 2, iz, lo, hi));
}

std::optional<VolumeGrid> ground_truth(const RunConfig& cfg) {
  if (!cfg.phantom.specified()) return std::nullopt;
  return rasterize(cfg.load_phantom(), cfg.recon_grid(), cfg.reconstruction.supersample);
}

int cmd_simulate(const RunConfig& cfg) {
  const auto start = Clock::now();
  const Phantom phantom = cfg.load_phantom();
  const Sinogram sino = simulate_sinogram(phantom, cfg.geometry, resolve_workers(cfg.workers));
  const std::string sino_path = cfg.resolved_sinogram_path();
  if (fs::path(sino_path).has_parent_path()) fs::create_directories(fs::path(sino_path).parent_path());
  save_sinogram(sino_path, sino);
  std::ofstream(out_path(cfg, "geometry.json")) << to_json(cfg)["geometry"].dump(2) << '\n';
  const VolumeGrid gt = rasterize(phantom, cfg.recon_grid(), cfg.reconstruction.supersample);
  save_volume(out_path(cfg, "ground_truth.vol"), gt);
  export_slice(gt, out_path(cfg, "ground_truth.png"));
  write_manifest(cfg, "simulate",
                 {{"sinogram", sino_path},
                  {"geometry", out_path(cfg, "geometry.json")},
                  {"ground_truth", out_path(cfg, "ground_truth.vol")}},
                 start);
  std::cout << "sinogram " << sino.geometry.n_views << "x" << sino.geometry.detector_rows << "x"
            << sino.geometry.detector_cols << " -> " << sino_path << '\n';
  return kExitOk;
}

struct TrainOutcome {
  TrainingLog log;
  VolumeGrid recon;
};

template <typename Scalar>
TrainOutcome train_one(const RunConfig& cfg, const Sinogram& sino, const std::optional<VolumeGrid>& gt,
                       const std::string& prefix, bool verbose) {
  Trainer<Scalar> trainer(sino, cfg.domain, cfg.encoder, cfg.mlp, cfg.sampling, cfg.training);
  if (gt) trainer.set_ground_truth(*gt);
  trainer.set_failure_checkpoint(out_path(cfg, prefix + "failure.ckpt"));
  if (verbose)
    trainer.set_eval_callback([](const EvalPoint& e) {
      std::cout << "iter " << e.iteration << "  loss " << e.window_loss;
      if (e.psnr) std::cout << "  psnr " << *e.psnr;
      std::cout << "  train_ms " << e.train_ms << std::endl;
    });
  TrainOutcome out;
  out.log = trainer.run();
  const std::string ckpt = out_path(cfg, prefix + "model.ckpt");
  save_checkpoint(ckpt, trainer.model(), &trainer.state());
  std::ofstream csv(out_path(cfg, prefix + "metrics.csv"));
  out.log.write_csv(csv);
  // Reconstruct from the stored (float32) parameters so `reconstruct` reproduces this volume.
  out.recon = reconstruct_volume(load_checkpoint<Scalar>(ckpt), cfg.recon_grid(), resolve_workers(cfg.workers));
  return out;
}

TrainOutcome train_dispatch(const RunConfig& cfg, const Sinogram& sino, const std::optional<VolumeGrid>& gt,
                            const std::string& prefix, bool verbose) {
  return cfg.precision == Precision::float32 ? train_one<float>(cfg, sino, gt, prefix, verbose)
                                             : train_one<double>(cfg, sino, gt, prefix, verbose);
}

Sinogram load_input_sinogram(const RunConfig& cfg) {
  const std::string path = cfg.resolved_sinogram_path();
  require_file(path, "sinogram");
  Sinogram sino = load_sinogram(path);
  if (sino.geometry.n_views != cfg.geometry.n_views || sino.geometry.detector_rows != cfg.geometry.detector_rows ||
      sino.geometry.detector_cols != cfg.geometry.detector_cols || sino.geometry.mode != cfg.geometry.mode)
    throw ConfigError({"sinogram " + path + " does not match the configured geometry"});
  return sino;
}

int cmd_train(const RunConfig& cfg) {
  const auto start = Clock::now();
  const Sinogram sino = load_input_sinogram(cfg);
  const auto gt = ground_truth(cfg);
  const TrainOutcome res = train_dispatch(cfg, sino, gt, "", true);
  save_volume(out_path(cfg, "recon.vol"), res.recon);
  export_slice(res.recon, out_path(cfg, "recon.png"));
  json summary = {{"iterations", res.log.iterations},
                  {"train_ms", res.log.train_ms},
                  {"eval_ms", res.log.eval_ms},
                  {"stop_reason", res.log.stop_reason}};
  if (auto p = res.log.final_psnr()) summary["final_psnr"] = *p;
  write_manifest(cfg, "train",
                 {{"checkpoint", out_path(cfg, "model.ckpt")},
                  {"metrics", out_path(cfg, "metrics.csv")},
                  {"volume", out_path(cfg, "recon.vol")}},
                 start, {{"summary", summary}});
  std::cout << "stopped after " << res.log.iterations << " iterations (" << res.log.stop_reason << ")\n";
  return kExitOk;
}

int cmd_reconstruct(const RunConfig& cfg, const std::string& checkpoint, const std::string& output) {
  const auto start = Clock::now();
  require_file(checkpoint, "checkpoint");
  const std::string out = output.empty() ? out_path(cfg, "recon.vol") : output;
  VolumeGrid vol;
  if (cfg.precision == Precision::float32)
    vol = reconstruct_volume(load_checkpoint<float>(checkpoint), cfg.recon_grid(), resolve_workers(cfg.workers));
  else
    vol = reconstruct_volume(load_checkpoint<double>(checkpoint), cfg.recon_grid(), resolve_workers(cfg.workers));
  save_volume(out, vol);
  export_slice(vol, fs::path(out).replace_extension(".png").string());
  write_manifest(cfg, "reconstruct", {{"volume", out}}, start, {{"checkpoint", checkpoint}});
  return kExitOk;
}

int cmd_fdk(const RunConfig& cfg, bool force_extrapolate) {
  const auto start = Clock::now();
  const Sinogram sino = load_input_sinogram(cfg);
  const bool extrapolate = cfg.fdk.extrapolate || force_extrapolate;
  const VolumeGrid vol = fdk_reconstruct(sino, cfg.recon_grid(), cfg.fdk.filter, extrapolate, cfg.fdk.margin_fraction,
                                         resolve_workers(cfg.workers));
  const std::string name = extrapolate ? "fdk_extrapolated" : "fdk";
  save_volume(out_path(cfg, name + ".vol"), vol);
  export_slice(vol, out_path(cfg, name + ".png"));
  write_manifest(cfg, "fdk", {{"volume", out_path(cfg, name + ".vol")}}, start, {{"extrapolate", extrapolate}});
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& recon_path, const std::string& reference_path) {
  const auto start = Clock::now();
  require_file(recon_path, "reconstruction");
  const VolumeGrid recon = load_volume(recon_path);
  VolumeGrid ref;
  if (!reference_path.empty()) {
    require_file(reference_path, "reference");
    ref = load_volume(reference_path);
  } else if (cfg.phantom.specified()) {
    ref = rasterize(cfg.load_phantom(), recon.spec, cfg.reconstruction.supersample);
  } else {
    throw ConfigError({"eval: give --reference or a phantom in the config"});
  }
  if (!recon.spec.same_lattice(ref.spec)) throw ConfigError({"eval: volumes are on different lattices"});
  const double p = psnr(recon, ref, std::nullopt, &cfg.domain.fov);
  const double s = ssim(recon, ref);
  const double window = std::max(1e-12, ref.values.cwiseAbs().maxCoeff() * 0.1);
  write_png(out_path(cfg, "diff.png"), diff_image(recon, ref, 2, recon.spec.dims.z() / 2, window));
  json result = {{"psnr_db", std::isinf(p) ? json("inf") : json(p)}, {"ssim", s}};
  std::ofstream(out_path(cfg, "eval.json")) << result.dump(2) << '\n';
  write_manifest(cfg, "eval", {{"eval", out_path(cfg, "eval.json")}, {"diff", out_path(cfg, "diff.png")}}, start,
                 {{"result", result}});
  std::cout << "PSNR " << (std::isinf(p) ? std::string("inf") : std::to_string(p)) << " dB  SSIM " << s << '\n';
  return kExitOk;
}

int cmd_ablate(const RunConfig& base) {
  const auto start = Clock::now();
  if (base.sweep.empty()) throw ConfigError({"ablation.sweep must not be empty"});
  const Sinogram sino = load_input_sinogram(base);
  const auto gt = ground_truth(base);
  std::ofstream csv(out_path(base, "ablation.csv"));
  csv << "m,step_outside_mm,final_psnr,train_ms,iterations,stop_reason\n";
  json runs = json::array();
  for (const auto& s : base.sweep) {
    RunConfig cfg = base;
    cfg.encoder.restricted_levels = s.restricted_levels;
    cfg.sampling.step_outside = s.step_outside;
    cfg.validate();
    std::ostringstream prefix;
    prefix << "ablate_m" << s.restricted_levels << "_d" << s.step_outside << "_";
    const TrainOutcome res = train_dispatch(cfg, sino, gt, prefix.str(), false);
    const auto p = res.log.final_psnr();
    csv << s.restricted_levels << ',' << s.step_outside << ',';
    if (p) csv << *p;
    csv << ',' << res.log.train_ms << ',' << res.log.iterations << ',' << res.log.stop_reason << '\n';
    csv.flush();
    runs.push_back({{"m", s.restricted_levels}, {"step_outside_mm", s.step_outside}, {"metrics", prefix.str() + "metrics.csv"}});
    std::cout << "m=" << s.restricted_levels << " step_outside=" << s.step_outside << " psnr="
              << (p ? std::to_string(*p) : std::string("n/a")) << " train_ms=" << res.log.train_ms << std::endl;
  }
  write_manifest(base, "ablate", {{"csv", out_path(base, "ablation.csv")}, {"runs", runs}}, start);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_allocations_on_heap();
  CLI::App app{"Hash-encoded implicit neural representation for truncated CBCT"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "run configuration (JSON)")->required();

  auto* simulate = app.add_subcommand("simulate", "forward-project the configured phantom");
  auto* train = app.add_subcommand("train", "fit the field to the sinogram");
  std::string mode_override;
  train->add_option("--mode", mode_override, "truncated | extended | naive");
  auto* reconstruct = app.add_subcommand("reconstruct", "sample a trained field onto the voxel grid");
  std::string checkpoint, volume_out;
  reconstruct->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  reconstruct->add_option("-o,--output", volume_out, "output volume");
  auto* fdk = app.add_subcommand("fdk", "analytic FDK / fan-beam FBP baseline");
  bool extrapolate = false;
  fdk->add_flag("--extrapolate", extrapolate, "extend truncated rows before filtering");
  auto* eval = app.add_subcommand("eval", "PSNR and SSIM against a reference");
  std::string recon_path, reference_path;
  eval->add_option("--recon", recon_path, "volume to score")->required();
  eval->add_option("--reference", reference_path, "reference volume (default: rasterised phantom)");
  auto* ablate = app.add_subcommand("ablate", "train once per (m, step_outside) setting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!mode_override.empty()) {
      try {
        cfg.training.mode = projection_mode_from_string(mode_override);
      } catch (const std::invalid_argument& e) {
        throw ConfigError({std::string("--mode: ") + e.what()});
      }
    }
    fs::create_directories(cfg.output_dir);
    if (*simulate) return cmd_simulate(cfg);
    if (*train) return cmd_train(cfg);
    if (*reconstruct) return cmd_reconstruct(cfg, checkpoint, volume_out);
    if (*fdk) return cmd_fdk(cfg, extrapolate);
    if (*eval) return cmd_eval(cfg, recon_path, reference_path);
    if (*ablate) return cmd_ablate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
