#ifndef REG_TRANSFORM_HPP
#define REG_TRANSFORM_HPP

#include <cstdint>

#include "reg/core.hpp"

namespace reg {

// Identity-plus-perturbation affine generator.
//
// Each of the 12 theta entries receives an independent uniform draw from
// [-scale * s, +scale * s], with s = 1 for the linear part and
// s = max(shape) for the translation row, so `scale` controls relative
// deformation magnitude in both parts. scale = 0 yields the exact
// identity.
struct RandomTransformSpec {
    double scale = 0.0;
    std::uint64_t seed = 0;
};

AffineParams random_affine(const RandomTransformSpec& spec,
                           const Shape3& shape);

// coords'(v) = [coords(v), 1] * theta.
Grid3 warp_grid_affine(const Grid3& grid, const AffineParams& theta);

// coords'(v) = coords(v) + ddf(v). Shapes must match.
Grid3 apply_ddf(const Grid3& grid, const DisplacementField& ddf);

// Affine that applies `inner` then `outer`:
// p -> [[p,1] * inner, 1] * outer.
AffineParams compose_affine(const AffineParams& inner,
                            const AffineParams& outer);

// RMS over the reference grid of `shape` of the Euclidean distance
// between the two warped coordinates, in voxel units.
double affine_from_ddf_residual(const AffineParams& theta_a,
                                const AffineParams& theta_b,
                                const Shape3& shape);

}  // namespace reg

#endif  // REG_TRANSFORM_HPP
