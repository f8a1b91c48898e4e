#include "reg/optimize.hpp"

#include <chrono>
#include <cmath>

#include "reg/resample.hpp"
#include "reg/rng.hpp"
#include "reg/transform.hpp"

namespace reg {

namespace {

AffineParams theta_from_flat(const std::array<double, 12>& flat) {
    AffineParams::Matrix m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
            m[r][c] = flat[r * 3 + c];
        }
    }
    return AffineParams(m);
}

std::array<double, 12> theta_to_flat(const AffineParams& theta) {
    std::array<double, 12> flat;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
            flat[r * 3 + c] = theta.at(r, c);
        }
    }
    return flat;
}

// Relative change over a 50-iteration lookback.
bool early_stop_hit(const std::vector<double>& history, double loss) {
    const std::size_t lag = 50;
    if (history.size() < lag) return false;
    const double prev = history[history.size() - lag];
    return std::abs(loss - prev) <
           1e-8 * std::max({std::abs(loss), std::abs(prev), 1e-30});
}

}  // namespace

AdamState::AdamState(double lr_, std::size_t n)
    : lr(lr_), m(n, 0.0), v(n, 0.0) {
    if (!(lr > 0.0)) {
        throw ValueError("AdamState: lr must be > 0");
    }
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state size mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t n = 0; n < params.size(); ++n) {
        state.m[n] = state.beta1 * state.m[n] + (1.0 - state.beta1) * grads[n];
        state.v[n] =
            state.beta2 * state.v[n] + (1.0 - state.beta2) * grads[n] * grads[n];
        const double m_hat = state.m[n] / bc1;
        const double v_hat = state.v[n] / bc2;
        params[n] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

AffineObjective affine_objective(const AffineParams& theta,
                                 const Volume3& moving, const Volume3& fixed,
                                 const Grid3& grid_ref) {
    if (grid_ref.shape() != fixed.shape()) {
        throw ShapeError("affine_objective: reference grid shape " +
                         shape_to_string(grid_ref.shape()) +
                         " does not match fixed shape " +
                         shape_to_string(fixed.shape()));
    }
    const Grid3 warped = warp_grid_affine(grid_ref, theta);
    const Volume3 pred = resample(moving, warped);
    const double loss = ssd(pred, fixed).value;

    const std::vector<double> d_pred = ssd_grad(pred, fixed);
    const std::vector<double> d_loc = resample_grad_loc(moving, warped);
    const int channels = moving.channels();
    const auto& ref = grid_ref.coords();

    std::array<double, 12> grad{};
    const std::size_t nvox = grid_ref.num_voxels();
    for (std::size_t v = 0; v < nvox; ++v) {
        double g[3] = {0.0, 0.0, 0.0};
        for (int c = 0; c < channels; ++c) {
            const double gp = d_pred[v * channels + c];
            const std::size_t base = (v * channels + c) * 3;
            g[0] += gp * d_loc[base];
            g[1] += gp * d_loc[base + 1];
            g[2] += gp * d_loc[base + 2];
        }
        // d(coord_c)/d(theta[r][c]) is the r-th homogeneous component
        // (x, y, z, 1) of the reference-grid point.
        const double hom[4] = {ref[v * 3], ref[v * 3 + 1], ref[v * 3 + 2], 1.0};
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 3; ++c) {
                grad[r * 3 + c] += hom[r] * g[c];
            }
        }
    }
    return AffineObjective{loss, grad};
}

DdfObjective ddf_objective(const DisplacementField& ddf, const Volume3& moving,
                           const Volume3& fixed, const Grid3& grid_ref,
                           double lambda, const LnccConfig& lncc_cfg) {
    if (ddf.shape() != fixed.shape() || grid_ref.shape() != fixed.shape()) {
        throw ShapeError("ddf_objective: ddf/grid/fixed shapes must agree");
    }
    const Grid3 warped = apply_ddf(grid_ref, ddf);
    const Volume3 pred = resample(moving, warped);
    const double image = lncc(pred, fixed, lncc_cfg).value;
    const double deform = bending_energy(ddf).value;
    const double total = image + lambda * deform;

    const std::vector<double> d_pred = lncc_grad(pred, fixed, lncc_cfg);
    const std::vector<double> d_loc = resample_grad_loc(moving, warped);
    std::vector<double> grad = bending_energy_grad(ddf);
    const std::size_t nvox = ddf.num_voxels();
    for (std::size_t v = 0; v < nvox; ++v) {
        const double gp = d_pred[v];
        for (int axis = 0; axis < 3; ++axis) {
            grad[v * 3 + axis] =
                lambda * grad[v * 3 + axis] + gp * d_loc[v * 3 + axis];
        }
    }
    return DdfObjective{total, image, deform, std::move(grad)};
}

OptimRun register_affine(const Volume3& moving, const Volume3& fixed,
                         const AffineRegConfig& cfg) {
    if (cfg.iters < 1) {
        throw ValueError("register_affine: iters must be >= 1");
    }
    if (moving.channels() != fixed.channels()) {
        throw ShapeError("register_affine: channel count mismatch");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Grid3 grid_ref = reference_grid(fixed.shape());

    std::vector<double> params(12);
    {
        const auto flat = theta_to_flat(AffineParams::identity());
        std::copy(flat.begin(), flat.end(), params.begin());
    }
    AdamState adam(cfg.lr, params.size());

    OptimRun run{cfg, {}, AffineParams::identity(), 0.0};
    std::vector<double> history;
    for (std::int64_t step = 0; step < cfg.iters; ++step) {
        std::array<double, 12> flat;
        std::copy(params.begin(), params.end(), flat.begin());
        const AffineObjective obj =
            affine_objective(theta_from_flat(flat), moving, fixed, grid_ref);
        if (!std::isfinite(obj.loss)) {
            throw DivergenceError(step, "register_affine: non-finite loss at "
                                        "iteration " + std::to_string(step));
        }
        if (step % cfg.log_every == 0) {
            run.trace.push_back(TraceRow{step, obj.loss, obj.loss, 0.0});
        }
        history.push_back(obj.loss);
        if (cfg.early_stop && early_stop_hit(history, obj.loss)) break;
        const std::vector<double> grads(obj.grad.begin(), obj.grad.end());
        adam_step(adam, params, grads);
    }
    std::array<double, 12> flat;
    std::copy(params.begin(), params.end(), flat.begin());
    run.params = theta_from_flat(flat);
    run.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    return run;
}

OptimRun register_ddf(const Volume3& moving, const Volume3& fixed,
                      const DdfRegConfig& cfg) {
    if (cfg.iters < 1) {
        throw ValueError("register_ddf: iters must be >= 1");
    }
    if (cfg.weight_deform_loss < 0.0 || cfg.ddf_init_std < 0.0) {
        throw ValueError("register_ddf: weight and init std must be >= 0");
    }
    if (moving.channels() != 1 || fixed.channels() != 1) {
        throw ShapeError("register_ddf: single-channel volumes required");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Grid3 grid_ref = reference_grid(fixed.shape());

    std::vector<double> params(num_voxels(fixed.shape()) * 3);
    Rng rng(cfg.seed);
    for (double& x : params) {
        x = rng.normal(0.0, cfg.ddf_init_std);
    }
    AdamState adam(cfg.lr, params.size());

    OptimRun run{cfg, {}, DisplacementField::zeros(fixed.shape()), 0.0};
    std::vector<double> history;
    for (std::int64_t step = 0; step < cfg.iters; ++step) {
        const DisplacementField ddf(fixed.shape(), params);
        const DdfObjective obj =
            ddf_objective(ddf, moving, fixed, grid_ref, cfg.weight_deform_loss,
                          cfg.lncc);
        if (!std::isfinite(obj.total)) {
            throw DivergenceError(step, "register_ddf: non-finite loss at "
                                        "iteration " + std::to_string(step));
        }
        if (step % cfg.log_every == 0) {
            run.trace.push_back(TraceRow{step, obj.total, obj.image, obj.deform});
        }
        history.push_back(obj.total);
        if (cfg.early_stop && early_stop_hit(history, obj.total)) break;
        adam_step(adam, params, obj.grad);
    }
    run.params = DisplacementField(fixed.shape(), std::move(params));
    run.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    return run;
}

Volume3 warp_with_result(const OptimRun& run, const Volume3& vol,
                         const Grid3& grid_ref) {
    return std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AffineParams>) {
                return resample(vol, warp_grid_affine(grid_ref, p));
            } else {
                return resample(vol, apply_ddf(grid_ref, p));
            }
        },
        run.params);
}

}  // namespace reg
