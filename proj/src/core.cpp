#include "reg/core.hpp"

#include <cmath>
#include <string>

namespace reg {

std::size_t num_voxels(const Shape3& shape) {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
}

std::string shape_to_string(const Shape3& shape) {
    return "(" + std::to_string(shape[0]) + ", " + std::to_string(shape[1]) +
           ", " + std::to_string(shape[2]) + ")";
}

void check_shape(const Shape3& shape) {
    for (int d : shape) {
        if (d < 2) {
            throw ShapeError("every dimension must be >= 2, got " +
                             shape_to_string(shape));
        }
    }
}

void check_finite(const std::vector<double>& data, const char* what) {
    for (double x : data) {
        if (!std::isfinite(x)) {
            throw ValueError(std::string(what) + ": non-finite value");
        }
    }
}

Volume3::Volume3(const Shape3& shape, int channels, std::vector<double> data)
    : shape_(shape), channels_(channels), data_(std::move(data)) {
    check_shape(shape_);
    if (channels_ < 1) {
        throw ShapeError("channels must be >= 1, got " +
                         std::to_string(channels_));
    }
    const std::size_t expected = reg::num_voxels(shape_) * channels_;
    if (data_.size() != expected) {
        throw ShapeError("volume data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_) +
                         " x " + std::to_string(channels_) + " channels");
    }
    check_finite(data_, "Volume3");
}

Volume3 Volume3::filled(const Shape3& shape, int channels, double value) {
    return Volume3(shape, channels,
                   std::vector<double>(reg::num_voxels(shape) * channels,
                                       value));
}

AffineParams::AffineParams(const Matrix& theta) : theta_(theta) {
    for (const auto& row : theta_) {
        for (double x : row) {
            if (!std::isfinite(x)) {
                throw ValueError("AffineParams: non-finite entry");
            }
        }
    }
}

AffineParams AffineParams::identity() {
    return AffineParams(Matrix{{{1.0, 0.0, 0.0},
                                {0.0, 1.0, 0.0},
                                {0.0, 0.0, 1.0},
                                {0.0, 0.0, 0.0}}});
}

DisplacementField::DisplacementField(const Shape3& shape,
                                     std::vector<double> vectors)
    : shape_(shape), vectors_(std::move(vectors)) {
    check_shape(shape_);
    if (vectors_.size() != reg::num_voxels(shape_) * 3) {
        throw ShapeError("displacement field length " +
                         std::to_string(vectors_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
    check_finite(vectors_, "DisplacementField");
}

DisplacementField DisplacementField::zeros(const Shape3& shape) {
    return DisplacementField(
        shape, std::vector<double>(reg::num_voxels(shape) * 3, 0.0));
}

Grid3::Grid3(const Shape3& shape, std::vector<double> coords)
    : shape_(shape), coords_(std::move(coords)) {
    check_shape(shape_);
    if (coords_.size() != reg::num_voxels(shape_) * 3) {
        throw ShapeError("grid coordinate length " +
                         std::to_string(coords_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
    check_finite(coords_, "Grid3");
}

Grid3 reference_grid(const Shape3& shape) {
    check_shape(shape);
    std::vector<double> coords(num_voxels(shape) * 3);
    std::size_t n = 0;
    for (int i = 0; i < shape[0]; ++i) {
        for (int j = 0; j < shape[1]; ++j) {
            for (int k = 0; k < shape[2]; ++k) {
                coords[n++] = static_cast<double>(i);
                coords[n++] = static_cast<double>(j);
                coords[n++] = static_cast<double>(k);
            }
        }
    }
    return Grid3(shape, std::move(coords));
}

VolumeStats volume_stats(const Volume3& v) {
    const auto& data = v.data();
    double lo = data[0];
    double hi = data[0];
    double sum = 0.0;
    for (double x : data) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
    }
    return VolumeStats{lo, hi, sum / static_cast<double>(data.size())};
}

Volume3 normalize01(const Volume3& v) {
    const VolumeStats stats = volume_stats(v);
    if (!(stats.max > stats.min)) {
        throw DegenerateRangeError("normalize01: constant volume (min == max)");
    }
    const double span = stats.max - stats.min;
    std::vector<double> out(v.size());
    const auto& data = v.data();
    for (std::size_t n = 0; n < data.size(); ++n) {
        out[n] = (data[n] - stats.min) / span;
    }
    return Volume3(v.shape(), v.channels(), std::move(out));
}

}  // namespace reg
