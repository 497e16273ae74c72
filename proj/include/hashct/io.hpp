#pragma once

#include "hashct/adam.hpp"
#include "hashct/projector.hpp"
#include "hashct/sinogram.hpp"
#include "hashct/volume.hpp"

#include <iosfwd>
#include <string>

namespace hashct {

// Binary containers, all little-endian.
//
// Sinogram:  "SINO0001", u32 views, rows, cols, f64 SDD, SID, pitch_col,
//            pitch_row, angle_start, angle_range, u32 mode (0 cone3d, 1 fan2d),
//            then f32 payload view-major, columns fastest.
// Volume:    "VOL00001", u32 nx, ny, nz, f64 pitch[3], f64 origin[3], then f32
//            payload with x fastest.
// Checkpoint:"INRHASH1", u32 d, L, T, F, N_min, N_max, m, then f32 tables
//            level-major/row-major; "MLP1", u32 layer count n, u32 dims[n],
//            f64 mu_max, then per layer f32 weights (row-major) and biases;
//            "BNDS", f64 lo[3], hi[3]; optionally "ADM1", u64 step, then first
//            and second moments in the same order as the parameters.

void write_sinogram(std::ostream& out, const Sinogram& sino);
Sinogram read_sinogram(std::istream& in);
void save_sinogram(const std::string& path, const Sinogram& sino);
Sinogram load_sinogram(const std::string& path);

void write_volume(std::ostream& out, const VolumeGrid& vol);
VolumeGrid read_volume(std::istream& in);
void save_volume(const std::string& path, const VolumeGrid& vol);
VolumeGrid load_volume(const std::string& path);

template <typename Scalar>
void write_checkpoint(std::ostream& out, const FieldModel<Scalar>& model, const AdamState<Scalar>* state);
template <typename Scalar>
FieldModel<Scalar> read_checkpoint(std::istream& in, AdamState<Scalar>* state);

template <typename Scalar>
void save_checkpoint(const std::string& path, const FieldModel<Scalar>& model, const AdamState<Scalar>* state);
template <typename Scalar>
FieldModel<Scalar> load_checkpoint(const std::string& path, AdamState<Scalar>* state = nullptr);

}  // namespace hashct
