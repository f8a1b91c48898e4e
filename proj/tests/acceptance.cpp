// Acceptance suite: one pass/fail line per criterion, nonzero exit on
// any failure. Each criterion is self-contained and seeds its own data.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "reg/core.hpp"
#include "reg/io.hpp"
#include "reg/losses.hpp"
#include "reg/optimize.hpp"
#include "reg/resample.hpp"
#include "reg/rng.hpp"
#include "reg/transform.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace reg;

namespace {

bool report(int number, const char* name, bool ok) {
    std::printf("criterion %d (%s): %s\n", number, name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    return ok;
}

// 1. Affine self-registration recovers the generating transform.
bool affine_recovery() {
    PhantomSpec spec;
    spec.shape = {32, 32, 32};
    spec.seed = 9;
    spec.n_blobs = 8;
    spec.affine_warp = RandomTransformSpec{0.2, 4};
    const Phantom p = make_phantom(spec);

    const OptimRun run = register_affine(*p.moving_image, p.image, {});
    const double initial = run.trace.front().total;
    const double final_ssd = run.trace.back().total;
    bool ok = final_ssd <= 0.05 * initial;

    const AffineParams& theta = std::get<AffineParams>(run.params);
    const AffineParams composite = compose_affine(theta, *p.truth_affine);
    const double rms = affine_from_ddf_residual(
        composite, AffineParams::identity(), spec.shape);
    ok = ok && rms <= 0.5;

    // sanity oracle: the optimizer should beat a coarse brute-force
    // search over integer translations
    const Grid3 grid = reference_grid(spec.shape);
    double best_grid = 1e300;
    for (int ti = -6; ti <= 6; ti += 2) {
        for (int tj = -6; tj <= 6; tj += 2) {
            for (int tk = -6; tk <= 6; tk += 2) {
                AffineParams::Matrix m = AffineParams::identity().theta();
                m[3] = {double(ti), double(tj), double(tk)};
                const Grid3 warped =
                    warp_grid_affine(grid, AffineParams(m));
                best_grid = std::min(
                    best_grid,
                    ssd(resample(*p.moving_image, warped), p.image).value);
            }
        }
    }
    ok = ok && final_ssd <= best_grid;
    return ok;
}

// 2. DDF registration improves label overlap on a sinusoidally warped pair.
bool nonrigid_improvement() {
    PhantomSpec spec;
    spec.shape = {24, 24, 24};
    spec.seed = 13;
    // dense texture keeps every lncc window's variance well above the
    // eps floor, so true alignment is the similarity optimum
    spec.n_blobs = 80;
    spec.ddf_warp = SmoothDdfSpec{2.0};
    const Phantom p = make_phantom(spec);

    const OptimRun run = register_ddf(*p.moving_image, p.image, {});
    const bool loss_ok = run.trace.back().total <= run.trace.front().total;

    const Grid3 grid = reference_grid(spec.shape);
    const double dice_before =
        dice_score(*p.moving_labels, p.labels).value;
    const Volume3 warped_labels =
        warp_with_result(run, *p.moving_labels, grid);
    const double dice_after = dice_score(warped_labels, p.labels).value;
    return loss_ok && dice_after >= dice_before + 0.2;
}

// 3. Analytic gradients vs central finite differences on random data.
bool gradient_suite() {
    // step small enough that objective probes do not straddle a
    // trilinear cell boundary
    const double h = 1e-5;
    for (int seed = 0; seed < 20; ++seed) {
        const Shape3 shape{5 + seed % 4, 5 + (seed / 2) % 4, 5 + seed % 3};
        const Volume3 a = oracle::random_volume(shape, 1, 100 + seed);
        const Volume3 b = oracle::random_volume(shape, 1, 200 + seed);
        const DisplacementField d =
            oracle::random_ddf(shape, 300 + seed, 0.5);
        const Grid3 grid = reference_grid(shape);
        const LnccConfig lncc_cfg{3 + 2 * (seed % 2), 1e-5};
        Rng pick(400 + seed);

        auto probe_volume = [&](const std::vector<double>& analytic,
                                auto&& f) {
            for (int t = 0; t < 8; ++t) {
                const std::size_t n = static_cast<std::size_t>(
                    pick.uniform(0.0, double(analytic.size())));
                std::vector<double> data = a.data();
                data[n] += h;
                const double up = f(Volume3(shape, 1, data));
                data[n] -= 2 * h;
                const double dn = f(Volume3(shape, 1, data));
                if (!oracle::grad_close(analytic[n], (up - dn) / (2 * h))) {
                    return false;
                }
            }
            return true;
        };
        auto probe_field = [&](const std::vector<double>& analytic,
                               auto&& f) {
            for (int t = 0; t < 8; ++t) {
                const std::size_t n = static_cast<std::size_t>(
                    pick.uniform(0.0, double(analytic.size())));
                std::vector<double> vec = d.vectors();
                vec[n] += h;
                const double up = f(DisplacementField(shape, vec));
                vec[n] -= 2 * h;
                const double dn = f(DisplacementField(shape, vec));
                if (!oracle::grad_close(analytic[n], (up - dn) / (2 * h))) {
                    return false;
                }
            }
            return true;
        };

        if (!probe_volume(ssd_grad(a, b),
                          [&](const Volume3& v) { return ssd(v, b).value; }))
            return false;
        if (!probe_volume(lncc_grad(a, b, lncc_cfg), [&](const Volume3& v) {
                return lncc(v, b, lncc_cfg).value;
            }))
            return false;
        if (!probe_field(bending_energy_grad(d), [&](const auto& f) {
                return bending_energy(f).value;
            }))
            return false;

        // affine objective: all 12 parameters
        const AffineParams theta =
            random_affine({0.05, 500u + static_cast<std::uint64_t>(seed)},
                          shape);
        const AffineObjective obj = affine_objective(theta, a, b, grid);
        for (int n = 0; n < 12; ++n) {
            AffineParams::Matrix m = theta.theta();
            m[n / 3][n % 3] += h;
            const double up =
                affine_objective(AffineParams(m), a, b, grid).loss;
            m[n / 3][n % 3] -= 2 * h;
            const double dn =
                affine_objective(AffineParams(m), a, b, grid).loss;
            if (!oracle::grad_close(obj.grad[n], (up - dn) / (2 * h))) {
                return false;
            }
        }

        // ddf objective: random probes through the full chain
        const DdfObjective dobj =
            ddf_objective(d, a, b, grid, 1.0, lncc_cfg);
        if (!probe_field(dobj.grad, [&](const auto& f) {
                return ddf_objective(f, a, b, grid, 1.0, lncc_cfg).total;
            }))
            return false;
    }
    return true;
}

// 4. Trilinear resampling matches the 8-corner brute force.
bool resample_oracle() {
    Rng rng(7);
    int done = 0;
    for (int batch = 0; batch < 10; ++batch) {
        const Volume3 v = oracle::random_volume({4, 4, 4}, 1, 700 + batch);
        std::vector<double> coords;
        for (int n = 0; n < 100 * 3; ++n) {
            coords.push_back(rng.uniform(-0.5, 3.5));
        }
        const Volume3 out = resample(v, Grid3({4, 5, 5}, coords));
        for (int n = 0; n < 100; ++n) {
            const double want = oracle::trilinear(
                v, coords[n * 3], coords[n * 3 + 1], coords[n * 3 + 2]);
            if (std::abs(out.data()[n] - want) > 1e-6) return false;
            ++done;
        }
        // identity-grid resampling reproduces the volume exactly
        const Volume3 id = resample(v, reference_grid(v.shape()));
        if (id.data() != v.data()) return false;
    }
    return done == 1000;
}

// 5. Loss axioms.
bool loss_axioms() {
    const Shape3 s{6, 6, 6};
    const Volume3 a = oracle::random_volume(s, 1, 50);
    const Volume3 b = oracle::random_volume(s, 1, 51);

    if (ssd(a, a).value != 0.0) return false;
    if (ssd(a, b).value != ssd(b, a).value) return false;

    // self-overlap on a binary mask (soft dice of a continuous volume
    // with itself is sum(a^2)/sum(a), below 1 by construction)
    std::vector<double> mask(num_voxels(s));
    for (std::size_t n = 0; n < mask.size(); ++n) {
        mask[n] = a.data()[n] > 0.5 ? 1.0 : 0.0;
    }
    const Volume3 binary(s, 1, mask);
    if (dice_score(binary, binary).value < 1.0 - 1e-6) return false;
    std::vector<double> left(num_voxels(s), 0.0), right(num_voxels(s), 0.0);
    Volume3 probe(s, 1, left);
    for (int i = 0; i < s[0]; ++i) {
        for (int j = 0; j < s[1]; ++j) {
            for (int k = 0; k < s[2]; ++k) {
                if (i < 3) left[probe.index(i, j, k)] = 1.0;
                if (i >= 3) right[probe.index(i, j, k)] = 1.0;
            }
        }
    }
    if (dice_score(Volume3(s, 1, left), Volume3(s, 1, right)).value > 1e-3)
        return false;
    // equal-size masks sharing half their voxels: dice = 0.5
    std::vector<double> ma(num_voxels(s), 0.0), mb(num_voxels(s), 0.0);
    for (int j = 0; j < s[1]; ++j) {
        for (int k = 0; k < s[2]; ++k) {
            ma[probe.index(0, j, k)] = 1.0;
            ma[probe.index(1, j, k)] = 1.0;
            mb[probe.index(1, j, k)] = 1.0;
            mb[probe.index(2, j, k)] = 1.0;
        }
    }
    const double dice_mid =
        dice_score(Volume3(s, 1, ma), Volume3(s, 1, mb)).value;
    if (std::abs(dice_mid - 0.5) > 1e-6) return false;

    // lncc affine-intensity invariance
    std::vector<double> scaled(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        scaled[n] = 2.5 * a.data()[n] + 0.75;
    }
    const double self =
        lncc(a, Volume3(s, 1, scaled), LnccConfig{3, 1e-5}).value;
    if (std::abs(self + 1.0) > 1e-3) return false;

    // bending energy vanishes exactly on affine displacement fields;
    // dyadic coefficients keep every coordinate exactly representable
    const AffineParams theta(AffineParams::Matrix{{{1.25, 0.125, -0.0625},
                                                   {0.25, 0.75, 0.5},
                                                   {-0.125, 0.375, 1.5},
                                                   {2.5, -1.75, 0.625}}});
    const Grid3 grid = reference_grid(s);
    const Grid3 warped = warp_grid_affine(grid, theta);
    std::vector<double> disp(warped.coords());
    for (std::size_t n = 0; n < disp.size(); ++n) {
        disp[n] -= grid.coords()[n];
    }
    return bending_energy(DisplacementField(s, disp)).value == 0.0;
}

std::uint64_t fnv1a(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::uint64_t hash = 14695981039346656037ull;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ull;
    }
    return hash;
}

// 6. Bitwise-identical outputs from identical CLI pipelines.
bool cli_reproducibility() {
    const fs::path root = fs::temp_directory_path() / "regkit_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string tool = REGTOOL_PATH;

    auto pipeline = [&](const std::string& dir) {
        const std::string base = (root / dir).string();
        std::ofstream cfg(base + "_cfg.json");
        cfg << R"({"iters": 101, "log_every": 20})";
        cfg.close();
        const std::string cmds[] = {
            tool + " synth --shape 14,14,14 --seed 12 --blobs 4 "
                   "--warp affine:0.15 --out " + base + "/data",
            tool + " register --mode affine --moving " + base +
                "/data/moving_image --fixed " + base +
                "/data/fixed_image --config " + base + "_cfg.json --out " +
                base + "/run",
            tool + " warp --input " + base + "/data/moving_labels --params " +
                base + "/run/params.json --out " + base + "/warped_labels",
        };
        for (const std::string& cmd : cmds) {
            if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) {
                return false;
            }
        }
        return true;
    };
    if (!pipeline("a") || !pipeline("b")) return false;

    bool ok = true;
    for (const char* rel :
         {"data/fixed_image.raw", "data/moving_image.raw",
          "data/fixed_labels.raw", "data/moving_labels.raw",
          "data/truth_affine.json", "run/trace.csv", "run/params.json",
          "run/warped_moving.raw", "warped_labels.raw"}) {
        const std::uint64_t ha = fnv1a((root / "a" / rel).string());
        const std::uint64_t hb = fnv1a((root / "b" / rel).string());
        ok = ok && ha != 0 && ha == hb;
    }
    fs::remove_all(root);
    return ok;
}

// 7. The comparison map assigns the documented colors exactly.
bool comparison_map() {
    const Shape3 s{4, 4, 4};
    std::vector<double> pred(num_voxels(s), 0.0), truth(num_voxels(s), 0.0);
    Volume3 probe(s, 1, pred);
    // one voxel per outcome class, everything else true negative
    pred[probe.index(1, 1, 1)] = 1.0;
    truth[probe.index(1, 1, 1)] = 1.0;  // TP
    pred[probe.index(2, 2, 2)] = 1.0;   // FP
    truth[probe.index(3, 3, 3)] = 1.0;  // FN
    const Volume3 map =
        label_comparison_map(Volume3(s, 1, pred), Volume3(s, 1, truth));
    if (map.channels() != 3) return false;

    auto rgb_is = [&](int i, int j, int k, double r, double g, double b) {
        return map.at(i, j, k, 0) == r && map.at(i, j, k, 1) == g &&
               map.at(i, j, k, 2) == b;
    };
    if (!rgb_is(1, 1, 1, 1, 1, 1)) return false;  // white
    if (!rgb_is(2, 2, 2, 0, 1, 0)) return false;  // green
    if (!rgb_is(3, 3, 3, 1, 0, 0)) return false;  // red
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            for (int k = 0; k < 4; ++k) {
                const bool special = (i == j && j == k && i >= 1);
                if (!special && !rgb_is(i, j, k, 0, 0, 0)) return false;
            }
        }
    }
    return true;
}

}  // namespace

int main() {
    bool all = true;
    all &= report(1, "affine self-registration recovery", affine_recovery());
    all &= report(2, "nonrigid Dice improvement", nonrigid_improvement());
    all &= report(3, "analytic gradient suite", gradient_suite());
    all &= report(4, "trilinear resampling oracle", resample_oracle());
    all &= report(5, "loss axioms", loss_axioms());
    all &= report(6, "CLI reproducibility", cli_reproducibility());
    all &= report(7, "label comparison map", comparison_map());
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
