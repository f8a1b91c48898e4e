#ifndef REG_CORE_HPP
#define REG_CORE_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "reg/errors.hpp"

namespace reg {

// Voxel counts (D1, D2, D3). All shapes in this library are voxel-index
// shapes; there is no physical spacing.
using Shape3 = std::array<int, 3>;

std::size_t num_voxels(const Shape3& shape);
std::string shape_to_string(const Shape3& shape);

// Throws ShapeError unless every dimension is >= 2.
void check_shape(const Shape3& shape);

// Throws ValueError if any entry is NaN or infinite.
void check_finite(const std::vector<double>& data, const char* what);

// A dense 3D scalar grid of intensities, optionally multi-channel.
//
// Storage is row-major with i slowest and c fastest:
//   index(i, j, k, c) = ((i * D2 + j) * D3 + k) * C + c.
// Immutable after construction; constructors reject non-finite values.
class Volume3 {
public:
    Volume3(const Shape3& shape, int channels, std::vector<double> data);

    static Volume3 filled(const Shape3& shape, int channels, double value);

    const Shape3& shape() const { return shape_; }
    int channels() const { return channels_; }
    std::size_t num_voxels() const { return reg::num_voxels(shape_); }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int i, int j, int k, int c = 0) const {
        return (((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2]) + k) *
                   channels_ + c;
    }
    double at(int i, int j, int k, int c = 0) const {
        return data_[index(i, j, k, c)];
    }

    const std::vector<double>& data() const { return data_; }

private:
    Shape3 shape_;
    int channels_;
    std::vector<double> data_;
};

// A 4x3 homogeneous-affine parameter block (12 degrees of freedom).
// Rows 0-2 are the linear part, row 3 the translation, all in voxel
// units; a point p maps to [p, 1] * theta (row-vector convention).
class AffineParams {
public:
    using Matrix = std::array<std::array<double, 3>, 4>;

    explicit AffineParams(const Matrix& theta);

    static AffineParams identity();

    const Matrix& theta() const { return theta_; }
    double at(int row, int col) const { return theta_[row][col]; }

private:
    Matrix theta_;
};

// Per-voxel 3-vector displacement on a fixed grid, in voxel units.
// Indexed (i, j, k, axis) with axis fastest.
class DisplacementField {
public:
    DisplacementField(const Shape3& shape, std::vector<double> vectors);

    static DisplacementField zeros(const Shape3& shape);

    const Shape3& shape() const { return shape_; }
    std::size_t num_voxels() const { return reg::num_voxels(shape_); }

    std::size_t index(int i, int j, int k, int axis) const {
        return (((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2]) + k) * 3 +
               axis;
    }
    double at(int i, int j, int k, int axis) const {
        return vectors_[index(i, j, k, axis)];
    }

    const std::vector<double>& vectors() const { return vectors_; }

private:
    Shape3 shape_;
    std::vector<double> vectors_;
};

// Per-voxel 3-vector of sampling coordinates in voxel units of some
// source volume. Same layout as DisplacementField.
class Grid3 {
public:
    Grid3(const Shape3& shape, std::vector<double> coords);

    const Shape3& shape() const { return shape_; }
    std::size_t num_voxels() const { return reg::num_voxels(shape_); }

    std::size_t index(int i, int j, int k, int axis) const {
        return (((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2]) + k) * 3 +
               axis;
    }
    double at(int i, int j, int k, int axis) const {
        return coords_[index(i, j, k, axis)];
    }

    const std::vector<double>& coords() const { return coords_; }

private:
    Shape3 shape_;
    std::vector<double> coords_;
};

// The identity sampling grid: coords(i,j,k) = (i,j,k).
Grid3 reference_grid(const Shape3& shape);

struct VolumeStats {
    double min;
    double max;
    double mean;
};

VolumeStats volume_stats(const Volume3& v);

// (v - min) / (max - min). Throws DegenerateRangeError on constant input.
Volume3 normalize01(const Volume3& v);

}  // namespace reg

#endif  // REG_CORE_HPP
