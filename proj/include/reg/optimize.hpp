#ifndef REG_OPTIMIZE_HPP
#define REG_OPTIMIZE_HPP

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "reg/core.hpp"
#include "reg/losses.hpp"

namespace reg {

// Standard Adam with bias correction.
struct AdamState {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;

    AdamState(double lr_, std::size_t n);
};

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads);

struct AffineRegConfig {
    double lr = 0.01;
    std::int64_t iters = 1001;
    std::int64_t log_every = 100;
    // relative loss change < 1e-8 over 50 iterations; off by default
    bool early_stop = false;
};

struct DdfRegConfig {
    LnccConfig lncc;
    double weight_deform_loss = 1.0;
    double lr = 0.1;
    std::int64_t iters = 3001;
    double ddf_init_std = 1e-3;
    std::uint64_t seed = 0;
    std::int64_t log_every = 100;
    bool early_stop = false;
};

struct TraceRow {
    std::int64_t iteration;
    double total;
    double image;
    double deform;
};

// One registration run: config snapshot, loss trace, final parameters.
struct OptimRun {
    std::variant<AffineRegConfig, DdfRegConfig> config;
    std::vector<TraceRow> trace;
    std::variant<AffineParams, DisplacementField> params;
    double seconds = 0.0;
};

struct AffineObjective {
    double loss;
    std::array<double, 12> grad;  // row-major over the 4x3 theta
};

// loss = ssd(resample(moving, warp_grid_affine(grid_ref, theta)), fixed)
// with the analytic gradient chained through resampling and the
// homogeneous-coordinate structure of the warp.
AffineObjective affine_objective(const AffineParams& theta,
                                 const Volume3& moving, const Volume3& fixed,
                                 const Grid3& grid_ref);

struct DdfObjective {
    double total;
    double image;
    double deform;
    std::vector<double> grad;  // same layout as DisplacementField vectors
};

// image = lncc(resample(moving, apply_ddf(grid_ref, ddf)), fixed),
// deform = bending_energy(ddf), total = image + lambda * deform.
DdfObjective ddf_objective(const DisplacementField& ddf, const Volume3& moving,
                           const Volume3& fixed, const Grid3& grid_ref,
                           double lambda, const LnccConfig& lncc_cfg);

// Affine self-registration: identity init, Adam on the SSD objective.
// Throws DivergenceError if the loss goes non-finite.
OptimRun register_affine(const Volume3& moving, const Volume3& fixed,
                         const AffineRegConfig& cfg);

// DDF registration: seeded normal(0, ddf_init_std) init, Adam on
// LNCC + lambda * bending.
OptimRun register_ddf(const Volume3& moving, const Volume3& fixed,
                      const DdfRegConfig& cfg);

// Resamples `vol` at the grid warped by the run's final parameters.
Volume3 warp_with_result(const OptimRun& run, const Volume3& vol,
                         const Grid3& grid_ref);

}  // namespace reg

#endif  // REG_OPTIMIZE_HPP
