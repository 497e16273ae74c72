#pragma once

#include "hashct/baseline.hpp"
#include "hashct/encoder.hpp"
#include "hashct/geometry.hpp"
#include "hashct/network.hpp"
#include "hashct/phantom.hpp"
#include "hashct/projector.hpp"
#include "hashct/trainer.hpp"
#include "hashct/volume.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hashct {

/// Carries every violation found, one per line in what().
struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct PhantomRef {
  std::string builtin;  // name for builtin_phantom, or empty
  std::string file;     // ellipsoid list, or empty
  double scale = 1.0;

  bool specified() const { return !builtin.empty() || !file.empty(); }
};

enum class ReconRegion { fov, extended };

struct ReconSpec {
  double pitch_mm = 0.5;
  ReconRegion region = ReconRegion::fov;
  int supersample = 4;  // ground-truth rasterisation
};

struct FdkSpec {
  FilterSpec filter;
  bool extrapolate = false;
  double margin_fraction = 0.25;
};

struct AblationSetting {
  int restricted_levels = 2;
  double step_outside = 2.0;
};

enum class Precision { float32, float64 };

/// Everything a command needs, parsed from one JSON document with a section
/// per module. Missing keys take the library defaults.
struct RunConfig {
  ScanGeometry geometry;
  Domain domain;
  PhantomRef phantom;
  std::string sinogram_path;  // empty: <output_dir>/sinogram.bin
  EncoderConfig encoder;
  MLPConfig mlp;
  SamplingPlan sampling;
  TrainConfig training;
  ReconSpec reconstruction;
  FdkSpec fdk;
  std::vector<AblationSetting> sweep;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  Precision precision = Precision::float64;
  int workers = 1;

  /// Cross-section consistency plus each section's own invariants.
  std::vector<std::string> violations() const;
  void validate() const;

  std::string resolved_sinogram_path() const;
  /// Reconstruction / ground-truth lattice over the configured region.
  GridSpec recon_grid() const;
  Phantom load_phantom() const;
};

/// Parses and validates; unknown keys and type errors are violations too.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// 64-bit FNV-1a of the compact serialisation of the resolved config.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace hashct
