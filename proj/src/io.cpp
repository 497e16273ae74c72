#include "hashct/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hashct {

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> b;
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), b.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw std::runtime_error("unexpected end of file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
float get_f32(std::istream& in) { return std::bit_cast<float>(get_le<std::uint32_t>(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void put_tag(std::ostream& out, const char* tag, std::size_t n) { out.write(tag, static_cast<std::streamsize>(n)); }

void expect_tag(std::istream& in, const char* tag, std::size_t n) {
  std::string got(n, '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(n)) || got != std::string(tag, n))
    throw std::runtime_error(std::string("bad container tag, expected ") + std::string(tag, n));
}

template <typename Derived>
void put_floats(std::ostream& out, const Eigen::DenseBase<Derived>& m) {
  // Row-major traversal regardless of storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out, static_cast<float>(m(r, c)));
}

template <typename Derived>
void get_floats(std::istream& in, Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<typename Derived::Scalar>(get_f32(in));
}

template <typename T, typename Fn>
void save_to(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

void write_sinogram(std::ostream& out, const Sinogram& sino) {
  const auto& g = sino.geometry;
  put_tag(out, "SINO0001", 8);
  put_u32(out, static_cast<std::uint32_t>(g.n_views));
  put_u32(out, static_cast<std::uint32_t>(g.detector_rows));
  put_u32(out, static_cast<std::uint32_t>(g.detector_cols));
  put_f64(out, g.source_to_detector_mm);
  put_f64(out, g.source_to_isocenter_mm);
  put_f64(out, g.pitch_col_mm);
  put_f64(out, g.pitch_row_mm);
  put_f64(out, g.angle_start);
  put_f64(out, g.angle_range);
  put_u32(out, g.mode == ScanMode::fan2d ? 1u : 0u);
  for (Eigen::Index i = 0; i < sino.values.size(); ++i) put_f32(out, static_cast<float>(sino.values[i]));
}

Sinogram read_sinogram(std::istream& in) {
  expect_tag(in, "SINO0001", 8);
  ScanGeometry g;
  g.n_views = static_cast<int>(get_u32(in));
  g.detector_rows = static_cast<int>(get_u32(in));
  g.detector_cols = static_cast<int>(get_u32(in));
  g.source_to_detector_mm = get_f64(in);
  g.source_to_isocenter_mm = get_f64(in);
  g.pitch_col_mm = get_f64(in);
  g.pitch_row_mm = get_f64(in);
  g.angle_start = get_f64(in);
  g.angle_range = get_f64(in);
  g.mode = get_u32(in) == 1 ? ScanMode::fan2d : ScanMode::cone3d;
  g.validate();
  Sinogram sino(g);
  for (Eigen::Index i = 0; i < sino.values.size(); ++i) sino.values[i] = get_f32(in);
  return sino;
}

void save_sinogram(const std::string& path, const Sinogram& sino) {
  save_to<Sinogram>(path, [&](std::ostream& o) { write_sinogram(o, sino); });
}

Sinogram load_sinogram(const std::string& path) {
  auto in = open_in(path);
  return read_sinogram(in);
}

void write_volume(std::ostream& out, const VolumeGrid& vol) {
  put_tag(out, "VOL00001", 8);
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(vol.spec.dims[a]));
  for (int a = 0; a < 3; ++a) put_f64(out, vol.spec.pitch[a]);
  for (int a = 0; a < 3; ++a) put_f64(out, vol.spec.origin[a]);
  for (Eigen::Index i = 0; i < vol.values.size(); ++i) put_f32(out, static_cast<float>(vol.values[i]));
}

VolumeGrid read_volume(std::istream& in) {
  expect_tag(in, "VOL00001", 8);
  GridSpec spec;
  for (int a = 0; a < 3; ++a) spec.dims[a] = static_cast<int>(get_u32(in));
  for (int a = 0; a < 3; ++a) spec.pitch[a] = get_f64(in);
  for (int a = 0; a < 3; ++a) spec.origin[a] = get_f64(in);
  VolumeGrid vol(spec);
  for (Eigen::Index i = 0; i < vol.values.size(); ++i) vol.values[i] = get_f32(in);
  return vol;
}

void save_volume(const std::string& path, const VolumeGrid& vol) {
  save_to<VolumeGrid>(path, [&](std::ostream& o) { write_volume(o, vol); });
}

VolumeGrid load_volume(const std::string& path) {
  auto in = open_in(path);
  return read_volume(in);
}

template <typename Scalar>
void write_checkpoint(std::ostream& out, const FieldModel<Scalar>& model, const AdamState<Scalar>* state) {
  const auto& c = model.encoding.config();
  put_tag(out, "INRHASH1", 8);
  for (auto v : {c.dims, c.n_levels, static_cast<int>(c.table_size), c.feature_dim, c.n_min, c.n_max,
                 c.restricted_levels})
    put_u32(out, static_cast<std::uint32_t>(v));
  for (const auto& t : model.encoding.tables()) put_floats(out, t);

  put_tag(out, "MLP1", 4);
  const auto dims = model.mlp_config.layer_dims();
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_f64(out, model.mlp_config.mu_max);
  for (std::size_t i = 0; i < model.mlp.weights.size(); ++i) {
    put_floats(out, model.mlp.weights[i]);
    put_floats(out, model.mlp.biases[i]);
  }

  put_tag(out, "BNDS", 4);
  for (int a = 0; a < 3; ++a) put_f64(out, model.bounds.lo[a]);
  for (int a = 0; a < 3; ++a) put_f64(out, model.bounds.hi[a]);

  if (state) {
    put_tag(out, "ADM1", 4);
    put_u64(out, state->step);
    for (const auto* p : {&state->mlp_m, &state->mlp_v})
      for (std::size_t i = 0; i < p->weights.size(); ++i) {
        put_floats(out, p->weights[i]);
        put_floats(out, p->biases[i]);
      }
    for (const auto* tabs : {&state->table_m, &state->table_v})
      for (const auto& t : *tabs) put_floats(out, t);
  }
}

template <typename Scalar>
FieldModel<Scalar> read_checkpoint(std::istream& in, AdamState<Scalar>* state) {
  expect_tag(in, "INRHASH1", 8);
  EncoderConfig c;
  c.dims = static_cast<int>(get_u32(in));
  c.n_levels = static_cast<int>(get_u32(in));
  c.table_size = get_u32(in);
  c.feature_dim = static_cast<int>(get_u32(in));
  c.n_min = static_cast<int>(get_u32(in));
  c.n_max = static_cast<int>(get_u32(in));
  c.restricted_levels = static_cast<int>(get_u32(in));
  FieldModel<Scalar> model;
  model.encoding = HashEncoding<Scalar>(c);
  for (auto& t : model.encoding.tables()) get_floats(in, t);

  expect_tag(in, "MLP1", 4);
  const auto n = get_u32(in);
  std::vector<int> dims(n);
  for (auto& d : dims) d = static_cast<int>(get_u32(in));
  if (n < 2 || dims.back() != 1) throw std::runtime_error("checkpoint: malformed MLP layer dims");
  MLPConfig mc;
  mc.input_dim = dims.front();
  mc.hidden_layers = static_cast<int>(n) - 2;
  mc.hidden_width = n > 2 ? dims[1] : 0;
  mc.mu_max = get_f64(in);
  if (mc.layer_dims() != dims) throw std::runtime_error("checkpoint: hidden layers must share one width");
  model.mlp_config = mc;
  model.mlp = MLPParams<Scalar>::zeros(mc);
  for (std::size_t i = 0; i < model.mlp.weights.size(); ++i) {
    get_floats(in, model.mlp.weights[i]);
    get_floats(in, model.mlp.biases[i]);
  }

  expect_tag(in, "BNDS", 4);
  for (int a = 0; a < 3; ++a) model.bounds.lo[a] = get_f64(in);
  for (int a = 0; a < 3; ++a) model.bounds.hi[a] = get_f64(in);

  char tag[4];
  if (state && in.read(tag, 4) && std::string(tag, 4) == "ADM1") {
    *state = AdamState<Scalar>::for_model(model);
    state->step = get_u64(in);
    for (auto* p : {&state->mlp_m, &state->mlp_v})
      for (std::size_t i = 0; i < p->weights.size(); ++i) {
        get_floats(in, p->weights[i]);
        get_floats(in, p->biases[i]);
      }
    for (auto* tabs : {&state->table_m, &state->table_v})
      for (auto& t : *tabs) get_floats(in, t);
  } else if (state) {
    *state = AdamState<Scalar>::for_model(model);
  }
  return model;
}

template <typename Scalar>
void save_checkpoint(const std::string& path, const FieldModel<Scalar>& model, const AdamState<Scalar>* state) {
  save_to<FieldModel<Scalar>>(path, [&](std::ostream& o) { write_checkpoint(o, model, state); });
}

template <typename Scalar>
FieldModel<Scalar> load_checkpoint(const std::string& path, AdamState<Scalar>* state) {
  auto in = open_in(path);
  return read_checkpoint<Scalar>(in, state);
}

#define HASHCT_INSTANTIATE_IO(S)                                                                         \
  template void write_checkpoint<S>(std::ostream&, const FieldModel<S>&, const AdamState<S>*);          \
  template FieldModel<S> read_checkpoint<S>(std::istream&, AdamState<S>*);                               \
  template void save_checkpoint<S>(const std::string&, const FieldModel<S>&, const AdamState<S>*);      \
  template FieldModel<S> load_checkpoint<S>(const std::string&, AdamState<S>*);

HASHCT_INSTANTIATE_IO(float)
HASHCT_INSTANTIATE_IO(double)

}  // namespace hashct
