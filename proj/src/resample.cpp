#include "reg/resample.hpp"

#include <algorithm>
#include <cmath>

namespace reg {

namespace {

struct AxisSample {
    int i0;         // lower corner index, in [0, D-2]
    double frac;    // fractional position within the cell, in [0, 1]
    double dscale;  // 1 inside [0, D-1], 0 where the clamp is active
};

AxisSample sample_axis(double x, int dim) {
    const double hi = static_cast<double>(dim - 1);
    const double xc = std::clamp(x, 0.0, hi);
    int i0 = static_cast<int>(std::floor(xc));
    i0 = std::min(i0, dim - 2);
    return AxisSample{i0, xc - i0, (x < 0.0 || x > hi) ? 0.0 : 1.0};
}

}  // namespace

Volume3 resample(const Volume3& vol, const Grid3& loc) {
    const Shape3& vs = vol.shape();
    const int channels = vol.channels();
    const auto& coords = loc.coords();
    const std::size_t nvox = loc.num_voxels();
    std::vector<double> out(nvox * channels);

    for (std::size_t v = 0; v < nvox; ++v) {
        const AxisSample ax = sample_axis(coords[v * 3], vs[0]);
        const AxisSample ay = sample_axis(coords[v * 3 + 1], vs[1]);
        const AxisSample az = sample_axis(coords[v * 3 + 2], vs[2]);
        const double wx[2] = {1.0 - ax.frac, ax.frac};
        const double wy[2] = {1.0 - ay.frac, ay.frac};
        const double wz[2] = {1.0 - az.frac, az.frac};
        for (int c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    for (int dk = 0; dk < 2; ++dk) {
                        acc += wx[di] * wy[dj] * wz[dk] *
                               vol.at(ax.i0 + di, ay.i0 + dj, az.i0 + dk, c);
                    }
                }
            }
            out[v * channels + c] = acc;
        }
    }
    return Volume3(loc.shape(), channels, std::move(out));
}

std::vector<double> resample_grad_loc(const Volume3& vol, const Grid3& loc) {
    const Shape3& vs = vol.shape();
    const int channels = vol.channels();
    const auto& coords = loc.coords();
    const std::size_t nvox = loc.num_voxels();
    std::vector<double> grad(nvox * channels * 3, 0.0);

    for (std::size_t v = 0; v < nvox; ++v) {
        const AxisSample ax = sample_axis(coords[v * 3], vs[0]);
        const AxisSample ay = sample_axis(coords[v * 3 + 1], vs[1]);
        const AxisSample az = sample_axis(coords[v * 3 + 2], vs[2]);
        const double wx[2] = {1.0 - ax.frac, ax.frac};
        const double wy[2] = {1.0 - ay.frac, ay.frac};
        const double wz[2] = {1.0 - az.frac, az.frac};
        // d(weight)/d(coordinate) along each axis: -1 for the lower
        // corner, +1 for the upper, zeroed where the clamp is active.
        const double dx[2] = {-ax.dscale, ax.dscale};
        const double dy[2] = {-ay.dscale, ay.dscale};
        const double dz[2] = {-az.dscale, az.dscale};
        for (int c = 0; c < channels; ++c) {
            double gx = 0.0, gy = 0.0, gz = 0.0;
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    for (int dk = 0; dk < 2; ++dk) {
                        const double val =
                            vol.at(ax.i0 + di, ay.i0 + dj, az.i0 + dk, c);
                        gx += dx[di] * wy[dj] * wz[dk] * val;
                        gy += wx[di] * dy[dj] * wz[dk] * val;
                        gz += wx[di] * wy[dj] * dz[dk] * val;
                    }
                }
            }
            const std::size_t base = (v * channels + c) * 3;
            grad[base] = gx;
            grad[base + 1] = gy;
            grad[base + 2] = gz;
        }
    }
    return grad;
}

}  // namespace reg
