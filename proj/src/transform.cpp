#include "reg/transform.hpp"

#include <algorithm>
#include <cmath>

#include "reg/rng.hpp"

namespace reg {

AffineParams random_affine(const RandomTransformSpec& spec,
                           const Shape3& shape) {
    if (spec.scale < 0.0 || !std::isfinite(spec.scale)) {
        throw ValueError("random_affine: scale must be finite and >= 0");
    }
    check_shape(shape);
    AffineParams::Matrix theta = AffineParams::identity().theta();
    if (spec.scale == 0.0) {
        return AffineParams(theta);
    }
    Rng rng(spec.seed);
    const double max_dim =
        static_cast<double>(std::max({shape[0], shape[1], shape[2]}));
    // Draw order: rows 0..3, columns 0..2.
    for (int r = 0; r < 4; ++r) {
        const double s = (r < 3) ? spec.scale : spec.scale * max_dim;
        for (int c = 0; c < 3; ++c) {
            theta[r][c] += rng.uniform(-s, s);
        }
    }
    return AffineParams(theta);
}

Grid3 warp_grid_affine(const Grid3& grid, const AffineParams& theta) {
    const auto& t = theta.theta();
    const auto& in = grid.coords();
    std::vector<double> out(in.size());
    for (std::size_t n = 0; n < in.size(); n += 3) {
        const double x = in[n];
        const double y = in[n + 1];
        const double z = in[n + 2];
        for (int c = 0; c < 3; ++c) {
            out[n + c] = x * t[0][c] + y * t[1][c] + z * t[2][c] + t[3][c];
        }
    }
    return Grid3(grid.shape(), std::move(out));
}

Grid3 apply_ddf(const Grid3& grid, const DisplacementField& ddf) {
    if (grid.shape() != ddf.shape()) {
        throw ShapeError("apply_ddf: grid shape " +
                         shape_to_string(grid.shape()) +
                         " does not match field shape " +
                         shape_to_string(ddf.shape()));
    }
    const auto& g = grid.coords();
    const auto& d = ddf.vectors();
    std::vector<double> out(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
        out[n] = g[n] + d[n];
    }
    return Grid3(grid.shape(), std::move(out));
}

AffineParams compose_affine(const AffineParams& inner,
                            const AffineParams& outer) {
    const auto& a = inner.theta();
    const auto& b = outer.theta();
    AffineParams::Matrix out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c];
        }
    }
    for (int c = 0; c < 3; ++c) {
        out[3][c] = a[3][0] * b[0][c] + a[3][1] * b[1][c] + a[3][2] * b[2][c] +
                    b[3][c];
    }
    return AffineParams(out);
}

double affine_from_ddf_residual(const AffineParams& theta_a,
                                const AffineParams& theta_b,
                                const Shape3& shape) {
    check_shape(shape);
    const auto& a = theta_a.theta();
    const auto& b = theta_b.theta();
    double sum_sq = 0.0;
    for (int i = 0; i < shape[0]; ++i) {
        for (int j = 0; j < shape[1]; ++j) {
            for (int k = 0; k < shape[2]; ++k) {
                const double x = static_cast<double>(i);
                const double y = static_cast<double>(j);
                const double z = static_cast<double>(k);
                for (int c = 0; c < 3; ++c) {
                    const double pa =
                        x * a[0][c] + y * a[1][c] + z * a[2][c] + a[3][c];
                    const double pb =
                        x * b[0][c] + y * b[1][c] + z * b[2][c] + b[3][c];
                    const double diff = pa - pb;
                    sum_sq += diff * diff;
                }
            }
        }
    }
    return std::sqrt(sum_sq / static_cast<double>(num_voxels(shape)));
}

}  // namespace reg
