#ifndef REG_IO_HPP
#define REG_IO_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "reg/core.hpp"
#include "reg/transform.hpp"

namespace reg {

enum class VolumeKind { image, label, ddf };

// Volumes persist as a pair of files: <base>.json (plain-text header
// with shape, channels, dtype "f32", storage order and kind) and
// <base>.raw (little-endian 32-bit floats, i slowest / c fastest).
void save_volume(const Volume3& v, const std::string& base_path,
                 VolumeKind kind = VolumeKind::image);

struct LoadedVolume {
    Volume3 volume;
    VolumeKind kind;
};

// Accepts the base path or the .json path. Validates the header and the
// payload byte length; throws IoError with a distinct code per failure.
LoadedVolume load_volume(const std::string& path);

void save_affine(const AffineParams& theta, const std::string& path);
AffineParams load_affine(const std::string& path);

Volume3 ddf_to_volume(const DisplacementField& ddf);
DisplacementField volume_to_ddf(const Volume3& v);

// Passes every value through float precision, so an in-memory volume
// matches its on-disk f32 representation bitwise.
Volume3 quantize_f32(const Volume3& v);
DisplacementField quantize_f32(const DisplacementField& d);

// 8-bit binary PGM (P5) of one slice of channel 0, min-max scaled to
// [0, 255]; constant slices map to 0. Rounding is half-away-from-zero.
void export_slice(const Volume3& v, int axis, int index,
                  const std::string& path);

// Binary PPM (P6) of one slice of a 3-channel comparison map.
void export_comparison(const Volume3& map, int axis, int index,
                       const std::string& path);

// Sum of three low-frequency sinusoidal components per axis, rescaled
// so the largest absolute displacement component equals max_amplitude.
DisplacementField smooth_sinusoid_ddf(const Shape3& shape,
                                      double max_amplitude,
                                      std::uint64_t seed);

struct SmoothDdfSpec {
    double max_amplitude = 2.0;
};

struct PhantomSpec {
    Shape3 shape{32, 32, 32};
    std::uint64_t seed = 0;
    int n_blobs = 5;
    // at most one of the two warps
    std::optional<RandomTransformSpec> affine_warp;
    std::optional<SmoothDdfSpec> ddf_warp;
};

struct Phantom {
    Volume3 image;
    Volume3 labels;
    std::optional<Volume3> moving_image;
    std::optional<Volume3> moving_labels;
    std::optional<AffineParams> truth_affine;
    std::optional<DisplacementField> truth_ddf;
};

// Deterministic synthetic volume: a normalized sum of Gaussian blobs
// with binary sphere labels at the blob centers. If a warp is
// requested, also returns the warped (moving) pair and the generating
// transform. All outputs are f32-quantized.
Phantom make_phantom(const PhantomSpec& spec);

}  // namespace reg

#endif  // REG_IO_HPP
