#ifndef REG_RESAMPLE_HPP
#define REG_RESAMPLE_HPP

#include <vector>

#include "reg/core.hpp"

namespace reg {

// Trilinear interpolation of `vol` at the coordinates of `loc`.
//
// Coordinates are clamped componentwise to [0, D-1] before
// interpolation (clamp-to-edge). The output takes loc's shape and
// preserves vol's channels; vol and loc may have different shapes.
Volume3 resample(const Volume3& vol, const Grid3& loc);

// d(sampled value)/d(coordinate), computed from the trilinear weights.
//
// Returned flat array has size loc.num_voxels() * vol.channels() * 3,
// indexed (voxel, channel, axis) with axis fastest. At lattice points
// the derivative is one-sided into the cell chosen by floor(coordinate)
// (clamped to the last cell at the upper edge); for coordinates clamped
// from outside [0, D-1] the derivative is 0.
std::vector<double> resample_grad_loc(const Volume3& vol, const Grid3& loc);

}  // namespace reg

#endif  // REG_RESAMPLE_HPP
