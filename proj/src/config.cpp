#include "hashct/config.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace hashct {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::ostringstream out;
  out << "invalid configuration:";
  for (const auto& s : v) out << "\n  - " << s;
  return out.str();
}

constexpr double kDeg = std::numbers::pi / 180.0;

/// Reads keys of one section, records type errors and reports unknown keys.
class Section {
 public:
  Section(const json& root, std::string name, std::vector<std::string>& errors)
      : name_(std::move(name)), errors_(errors) {
    if (!root.contains(name_)) return;
    if (!root[name_].is_object()) {
      errors_.push_back(name_ + ": must be an object");
      return;
    }
    obj_ = &root[name_];
  }

  bool present() const { return obj_ != nullptr; }
  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }

  template <typename T>
  void get(const std::string& key, T& dst) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      dst = (*obj_)[key].template get<T>();
    } catch (const json::exception&) {
      errors_.push_back(name_ + "." + key + ": wrong type (" + std::string((*obj_)[key].type_name()) + ")");
    }
  }

  /// Box extents as [x, y] or [x, y, z]; a missing z takes `default_z`.
  void get_extent(const std::string& key, Box& dst, double default_z) {
    used_.insert(key);
    if (!has(key)) return;
    std::vector<double> v;
    try {
      v = (*obj_)[key].get<std::vector<double>>();
    } catch (const json::exception&) {
      errors_.push_back(name_ + "." + key + ": expected an array of 2 or 3 numbers");
      return;
    }
    if (v.size() != 2 && v.size() != 3) {
      errors_.push_back(name_ + "." + key + ": expected an array of 2 or 3 numbers");
      return;
    }
    dst = Box::centered(Vec3(v[0], v[1], v.size() == 3 ? v[2] : default_z));
  }

  const json* raw(const std::string& key) {
    used_.insert(key);
    return has(key) ? &(*obj_)[key] : nullptr;
  }

  void finish() {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items())
      if (!used_.count(key)) errors_.push_back(name_ + "." + key + ": unknown key");
  }

 private:
  std::string name_;
  std::vector<std::string>& errors_;
  const json* obj_ = nullptr;
  std::set<std::string> used_;
};

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p) : std::runtime_error(join_lines(p)), problems(std::move(p)) {}

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> out;
  append(out, geometry.violations());
  append(out, domain.violations());
  append(out, encoder.violations());
  append(out, mlp.violations());
  append(out, sampling.violations());
  append(out, training.violations());
  append(out, fdk.filter.violations());
  const int want_dims = geometry.mode == ScanMode::fan2d ? 2 : 3;
  if (encoder.dims != want_dims)
    out.push_back("encoder.dims must be " + std::to_string(want_dims) + " for " + to_string(geometry.mode) +
                  " geometry");
  if (mlp.input_dim != encoder.output_dim())
    out.push_back("mlp.input_dim (" + std::to_string(mlp.input_dim) + ") must equal encoder n_levels * feature_dim (" +
                  std::to_string(encoder.output_dim()) + ")");
  if (geometry.mode == ScanMode::fan2d) {
    if (domain.fov.lo.z() > 0.0 || domain.fov.hi.z() < 0.0)
      out.push_back("domain.fov_mm: fan2d boxes must contain the plane z = 0");
  }
  if (!(reconstruction.pitch_mm > 0.0)) out.push_back("reconstruction.pitch_mm must be positive");
  if (reconstruction.supersample < 1) out.push_back("reconstruction.supersample must be >= 1");
  if (!(fdk.margin_fraction >= 0.0)) out.push_back("fdk.margin_fraction must be >= 0");
  if (!(phantom.scale > 0.0)) out.push_back("phantom.scale must be positive");
  if (!phantom.builtin.empty() && !phantom.file.empty()) out.push_back("phantom: give either builtin or file, not both");
  if (workers < 0) out.push_back("workers must be >= 0 (0 = all cores)");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& s = sweep[i];
    const std::string at = "ablation.sweep[" + std::to_string(i) + "]";
    if (s.restricted_levels < 1 || s.restricted_levels > encoder.n_levels)
      out.push_back(at + ".m must lie in [1, encoder.n_levels]");
    if (!(s.step_outside >= sampling.step_inside))
      out.push_back(at + ".step_outside must be >= sampling.step_inside");
  }
  return out;
}

void RunConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

std::string RunConfig::resolved_sinogram_path() const {
  if (!sinogram_path.empty()) return sinogram_path;
  return (std::filesystem::path(output_dir) / "sinogram.bin").string();
}

GridSpec RunConfig::recon_grid() const {
  const Box& box = reconstruction.region == ReconRegion::fov ? domain.fov : domain.extended;
  return GridSpec::covering(box, reconstruction.pitch_mm, geometry.mode == ScanMode::fan2d);
}

Phantom RunConfig::load_phantom() const {
  if (!phantom.specified()) throw ConfigError({"phantom: a builtin name or file is required"});
  Phantom p = phantom.builtin.empty() ? load_phantom_file(phantom.file)
                                      : builtin_phantom(phantom.builtin, geometry.mode == ScanMode::fan2d);
  return phantom.scale == 1.0 ? p : p.scaled(phantom.scale);
}

RunConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  RunConfig cfg;
  if (!doc.is_object()) throw ConfigError({"config root must be a JSON object"});

  static const std::set<std::string> known = {"geometry", "domain",       "phantom", "sinogram", "encoder",
                                              "mlp",      "sampling",     "training", "reconstruction", "fdk",
                                              "ablation", "output_dir",   "seed",     "precision", "workers"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) errors.push_back(key + ": unknown section");

  auto top = [&](const char* key, auto& dst) {
    if (!doc.contains(key)) return;
    try {
      dst = doc[key].get<std::decay_t<decltype(dst)>>();
    } catch (const json::exception&) {
      errors.push_back(std::string(key) + ": wrong type");
    }
  };
  top("output_dir", cfg.output_dir);
  top("seed", cfg.seed);
  top("workers", cfg.workers);
  std::string precision = "float64";
  top("precision", precision);
  if (precision == "float64" || precision == "double") cfg.precision = Precision::float64;
  else if (precision == "float32" || precision == "float") cfg.precision = Precision::float32;
  else errors.push_back("precision: expected float32 or float64, got '" + precision + "'");

  {
    Section s(doc, "geometry", errors);
    auto& g = cfg.geometry;
    std::string mode = to_string(g.mode);
    s.get("mode", mode);
    try {
      g.mode = scan_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("geometry.mode: ") + e.what());
    }
    if (g.mode == ScanMode::fan2d) g.detector_rows = 1;
    s.get("source_to_detector_mm", g.source_to_detector_mm);
    s.get("source_to_isocenter_mm", g.source_to_isocenter_mm);
    s.get("detector_rows", g.detector_rows);
    s.get("detector_cols", g.detector_cols);
    s.get("pitch_col_mm", g.pitch_col_mm);
    s.get("pitch_row_mm", g.pitch_row_mm);
    s.get("n_views", g.n_views);
    double start_deg = g.angle_start / kDeg, range_deg = g.angle_range / kDeg;
    s.get("angle_start_deg", start_deg);
    s.get("angle_range_deg", range_deg);
    g.angle_start = start_deg * kDeg;
    g.angle_range = range_deg * kDeg;
    s.finish();
  }
  const bool planar = cfg.geometry.mode == ScanMode::fan2d;
  cfg.encoder.dims = planar ? 2 : 3;
  {
    Section s(doc, "domain", errors);
    // Defaults: the detector's inscribed FOV square and twice that.
    const double r = cfg.geometry.transaxial_fov_radius();
    const double side = std::sqrt(2.0) * r;
    const double z = planar ? 1.0 : cfg.geometry.detector_rows * cfg.geometry.pitch_row_mm *
                                        cfg.geometry.source_to_isocenter_mm / cfg.geometry.source_to_detector_mm;
    cfg.domain.fov = Box::centered(Vec3(side, side, z));
    cfg.domain.extended = Box::centered(Vec3(2 * side, 2 * side, planar ? z : 2 * z));
    s.get_extent("fov_mm", cfg.domain.fov, planar ? 1.0 : z);
    s.get_extent("extended_mm", cfg.domain.extended, planar ? 1.0 : 2 * z);
    s.finish();
  }
  {
    Section s(doc, "phantom", errors);
    s.get("builtin", cfg.phantom.builtin);
    s.get("file", cfg.phantom.file);
    s.get("scale", cfg.phantom.scale);
    s.finish();
  }
  {
    Section s(doc, "sinogram", errors);
    s.get("path", cfg.sinogram_path);
    s.finish();
  }
  {
    Section s(doc, "encoder", errors);
    auto& e = cfg.encoder;
    s.get("dims", e.dims);
    s.get("n_levels", e.n_levels);
    s.get("n_min", e.n_min);
    s.get("n_max", e.n_max);
    s.get("table_size", e.table_size);
    s.get("feature_dim", e.feature_dim);
    s.get("restricted_levels", e.restricted_levels);
    s.finish();
  }
  {
    Section s(doc, "mlp", errors);
    cfg.mlp.input_dim = cfg.encoder.output_dim();
    s.get("input_dim", cfg.mlp.input_dim);
    s.get("hidden_layers", cfg.mlp.hidden_layers);
    s.get("hidden_width", cfg.mlp.hidden_width);
    s.get("mu_max", cfg.mlp.mu_max);
    s.finish();
  }
  {
    Section s(doc, "sampling", errors);
    s.get("step_inside_mm", cfg.sampling.step_inside);
    s.get("step_outside_mm", cfg.sampling.step_outside);
    s.get("jitter", cfg.sampling.jitter);
    s.finish();
  }
  {
    Section s(doc, "training", errors);
    auto& t = cfg.training;
    s.get("learning_rate", t.learning_rate);
    s.get("batch_rays", t.batch_rays);
    s.get("max_iterations", t.max_iterations);
    s.get("eval_every", t.eval_every);
    s.get("log_every", t.log_every);
    s.get("stop_psnr_delta", t.stop_psnr_delta);
    s.get("stop_loss_rel", t.stop_loss_rel);
    s.get("use_stopping_rule", t.use_stopping_rule);
    if (const json* v = s.raw("target_psnr"); v && !v->is_null()) {
      if (v->is_number()) t.target_psnr = v->get<double>();
      else errors.push_back("training.target_psnr: wrong type");
    }
    std::string mode = to_string(t.mode);
    s.get("mode", mode);
    try {
      t.mode = projection_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("training.mode: ") + e.what());
    }
    s.finish();
  }
  cfg.training.seed = cfg.seed;
  cfg.training.workers = cfg.workers;
  {
    Section s(doc, "reconstruction", errors);
    s.get("pitch_mm", cfg.reconstruction.pitch_mm);
    s.get("supersample", cfg.reconstruction.supersample);
    std::string region = "fov";
    s.get("region", region);
    if (region == "fov") cfg.reconstruction.region = ReconRegion::fov;
    else if (region == "extended") cfg.reconstruction.region = ReconRegion::extended;
    else errors.push_back("reconstruction.region: expected fov or extended, got '" + region + "'");
    s.finish();
  }
  {
    Section s(doc, "fdk", errors);
    s.get("cosine_window", cfg.fdk.filter.cosine_window);
    s.get("padding_factor", cfg.fdk.filter.padding_factor);
    s.get("extrapolate", cfg.fdk.extrapolate);
    s.get("margin_fraction", cfg.fdk.margin_fraction);
    s.finish();
  }
  {
    Section s(doc, "ablation", errors);
    if (const json* sw = s.raw("sweep")) {
      if (!sw->is_array()) {
        errors.push_back("ablation.sweep: expected an array of {m, step_outside_mm}");
      } else {
        for (std::size_t i = 0; i < sw->size(); ++i) {
          const auto& item = (*sw)[i];
          AblationSetting a{cfg.encoder.restricted_levels, cfg.sampling.step_outside};
          try {
            for (const auto& [k, v] : item.items()) {
              if (k == "m") a.restricted_levels = v.get<int>();
              else if (k == "step_outside_mm") a.step_outside = v.get<double>();
              else errors.push_back("ablation.sweep[" + std::to_string(i) + "]." + k + ": unknown key");
            }
          } catch (const json::exception&) {
            errors.push_back("ablation.sweep[" + std::to_string(i) + "]: wrong type");
          }
          cfg.sweep.push_back(a);
        }
      }
    }
    s.finish();
  }

  append(errors, cfg.violations());
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path});
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json j;
  const auto& g = c.geometry;
  j["geometry"] = {{"mode", to_string(g.mode)},
                   {"source_to_detector_mm", g.source_to_detector_mm},
                   {"source_to_isocenter_mm", g.source_to_isocenter_mm},
                   {"detector_rows", g.detector_rows},
                   {"detector_cols", g.detector_cols},
                   {"pitch_col_mm", g.pitch_col_mm},
                   {"pitch_row_mm", g.pitch_row_mm},
                   {"n_views", g.n_views},
                   {"angle_start_deg", g.angle_start / kDeg},
                   {"angle_range_deg", g.angle_range / kDeg}};
  auto ext = [](const Box& b) {
    const Vec3 e = b.extent();
    return std::vector<double>{e.x(), e.y(), e.z()};
  };
  j["domain"] = {{"fov_mm", ext(c.domain.fov)}, {"extended_mm", ext(c.domain.extended)}};
  j["phantom"] = {{"builtin", c.phantom.builtin}, {"file", c.phantom.file}, {"scale", c.phantom.scale}};
  j["sinogram"] = {{"path", c.resolved_sinogram_path()}};
  const auto& e = c.encoder;
  j["encoder"] = {{"dims", e.dims},           {"n_levels", e.n_levels},       {"n_min", e.n_min},
                  {"n_max", e.n_max},         {"table_size", e.table_size},   {"feature_dim", e.feature_dim},
                  {"restricted_levels", e.restricted_levels}};
  j["mlp"] = {{"input_dim", c.mlp.input_dim},
              {"hidden_layers", c.mlp.hidden_layers},
              {"hidden_width", c.mlp.hidden_width},
              {"mu_max", c.mlp.mu_max}};
  j["sampling"] = {{"step_inside_mm", c.sampling.step_inside},
                   {"step_outside_mm", c.sampling.step_outside},
                   {"jitter", c.sampling.jitter}};
  const auto& t = c.training;
  j["training"] = {{"learning_rate", t.learning_rate},
                   {"batch_rays", t.batch_rays},
                   {"max_iterations", t.max_iterations},
                   {"eval_every", t.eval_every},
                   {"log_every", t.log_every},
                   {"stop_psnr_delta", t.stop_psnr_delta},
                   {"stop_loss_rel", t.stop_loss_rel},
                   {"use_stopping_rule", t.use_stopping_rule},
                   {"target_psnr", t.target_psnr ? json(*t.target_psnr) : json(nullptr)},
                   {"mode", to_string(t.mode)}};
  j["reconstruction"] = {{"pitch_mm", c.reconstruction.pitch_mm},
                         {"supersample", c.reconstruction.supersample},
                         {"region", c.reconstruction.region == ReconRegion::fov ? "fov" : "extended"}};
  j["fdk"] = {{"cosine_window", c.fdk.filter.cosine_window},
              {"padding_factor", c.fdk.filter.padding_factor},
              {"extrapolate", c.fdk.extrapolate},
              {"margin_fraction", c.fdk.margin_fraction}};
  json sweep = json::array();
  for (const auto& s : c.sweep) sweep.push_back({{"m", s.restricted_levels}, {"step_outside_mm", s.step_outside}});
  j["ablation"] = {{"sweep", sweep}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["precision"] = c.precision == Precision::float32 ? "float32" : "float64";
  j["workers"] = c.workers;
  return j;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace hashct
