#include "reg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace reg {

namespace {

void require_same_shape(const Volume3& a, const Volume3& b, const char* op) {
    if (a.shape() != b.shape() || a.channels() != b.channels()) {
        throw ShapeError(std::string(op) + ": shape mismatch, " +
                         shape_to_string(a.shape()) + " x " +
                         std::to_string(a.channels()) + " vs " +
                         shape_to_string(b.shape()) + " x " +
                         std::to_string(b.channels()));
    }
}

void require_single_channel(const Volume3& v, const char* op) {
    if (v.channels() != 1) {
        throw ShapeError(std::string(op) + ": expected a single channel, got " +
                         std::to_string(v.channels()));
    }
}

// Sliding-window sums over the cubic window, one axis at a time. Each
// output entry is an independent short sum (no running add/subtract),
// so results do not depend on traversal history.
void box_pass(const std::vector<double>& in, std::vector<double>& out,
              const Shape3& s, int axis, int radius) {
    const int d1 = s[0], d2 = s[1], d3 = s[2];
    auto idx = [d2, d3](int i, int j, int k) {
        return (static_cast<std::size_t>(i) * d2 + j) * d3 + k;
    };
    for (int i = 0; i < d1; ++i) {
        for (int j = 0; j < d2; ++j) {
            for (int k = 0; k < d3; ++k) {
                int lo, hi;
                double acc = 0.0;
                switch (axis) {
                    case 0:
                        lo = std::max(0, i - radius);
                        hi = std::min(d1 - 1, i + radius);
                        for (int t = lo; t <= hi; ++t) acc += in[idx(t, j, k)];
                        break;
                    case 1:
                        lo = std::max(0, j - radius);
                        hi = std::min(d2 - 1, j + radius);
                        for (int t = lo; t <= hi; ++t) acc += in[idx(i, t, k)];
                        break;
                    default:
                        lo = std::max(0, k - radius);
                        hi = std::min(d3 - 1, k + radius);
                        for (int t = lo; t <= hi; ++t) acc += in[idx(i, j, t)];
                        break;
                }
                out[idx(i, j, k)] = acc;
            }
        }
    }
}

std::vector<double> box_sum(std::vector<double> field, const Shape3& s,
                            int radius) {
    std::vector<double> tmp(field.size());
    box_pass(field, tmp, s, 0, radius);
    box_pass(tmp, field, s, 1, radius);
    box_pass(field, tmp, s, 2, radius);
    return tmp;
}

int window_extent(int center, int dim, int radius) {
    return std::min(dim - 1, center + radius) - std::max(0, center - radius) + 1;
}

void check_lncc_config(const LnccConfig& cfg) {
    if (cfg.window < 3 || cfg.window % 2 == 0) {
        throw ValueError("lncc: window must be odd and >= 3");
    }
    if (!(cfg.eps > 0.0)) {
        throw ValueError("lncc: eps must be > 0");
    }
}

void require_interior(const Shape3& s, const char* op) {
    for (int d : s) {
        if (d < 3) {
            throw ShapeError(std::string(op) +
                             ": every dimension must be >= 3, got " +
                             shape_to_string(s));
        }
    }
}

// Per-window statistics shared by the lncc value and gradient paths.
struct LnccFields {
    std::vector<double> sum_a, sum_b, sum_aa, sum_bb, sum_ab;
    int radius;
};

LnccFields lncc_window_sums(const Volume3& a, const Volume3& b,
                            const LnccConfig& cfg) {
    const Shape3& s = a.shape();
    const int radius = cfg.window / 2;
    const auto& da = a.data();
    const auto& db = b.data();
    std::vector<double> aa(da.size()), bb(da.size()), ab(da.size());
    for (std::size_t n = 0; n < da.size(); ++n) {
        aa[n] = da[n] * da[n];
        bb[n] = db[n] * db[n];
        ab[n] = da[n] * db[n];
    }
    return LnccFields{box_sum(da, s, radius), box_sum(db, s, radius),
                      box_sum(std::move(aa), s, radius),
                      box_sum(std::move(bb), s, radius),
                      box_sum(std::move(ab), s, radius), radius};
}

}  // namespace

LossValue ssd(const Volume3& a, const Volume3& b) {
    require_same_shape(a, b, "ssd");
    const auto& da = a.data();
    const auto& db = b.data();
    double acc = 0.0;
    for (std::size_t n = 0; n < da.size(); ++n) {
        const double diff = da[n] - db[n];
        acc += diff * diff;
    }
    return LossValue{acc / static_cast<double>(da.size()), LossKind::ssd};
}

std::vector<double> ssd_grad(const Volume3& a, const Volume3& b) {
    require_same_shape(a, b, "ssd");
    const auto& da = a.data();
    const auto& db = b.data();
    const double inv_n = 1.0 / static_cast<double>(da.size());
    std::vector<double> grad(da.size());
    for (std::size_t n = 0; n < da.size(); ++n) {
        grad[n] = 2.0 * (da[n] - db[n]) * inv_n;
    }
    return grad;
}

LossValue lncc(const Volume3& a, const Volume3& b, const LnccConfig& cfg) {
    require_same_shape(a, b, "lncc");
    require_single_channel(a, "lncc");
    check_lncc_config(cfg);
    const Shape3& s = a.shape();
    const LnccFields f = lncc_window_sums(a, b, cfg);

    double acc = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < s[0]; ++i) {
        for (int j = 0; j < s[1]; ++j) {
            for (int k = 0; k < s[2]; ++k, ++n) {
                const double cnt =
                    static_cast<double>(window_extent(i, s[0], f.radius)) *
                    window_extent(j, s[1], f.radius) *
                    window_extent(k, s[2], f.radius);
                const double mu_a = f.sum_a[n] / cnt;
                const double mu_b = f.sum_b[n] / cnt;
                const double cov = f.sum_ab[n] / cnt - mu_a * mu_b;
                const double var_a = f.sum_aa[n] / cnt - mu_a * mu_a;
                const double var_b = f.sum_bb[n] / cnt - mu_b * mu_b;
                acc += cov * cov / (var_a * var_b + cfg.eps);
            }
        }
    }
    return LossValue{-acc / static_cast<double>(a.num_voxels()),
                     LossKind::lncc};
}

std::vector<double> lncc_grad(const Volume3& a, const Volume3& b,
                              const LnccConfig& cfg) {
    require_same_shape(a, b, "lncc");
    require_single_channel(a, "lncc");
    check_lncc_config(cfg);
    const Shape3& s = a.shape();
    const LnccFields f = lncc_window_sums(a, b, cfg);
    const std::size_t nvox = a.num_voxels();

    // Per-window coefficients of the score derivative with respect to a
    // member voxel u of window v:
    //   d(score_v)/d(a_u) = c1_v * (b_u - mu_b_v) - c2_v * (a_u - mu_a_v)
    // with c1 = 2*cov/(n*den) and c2 = 2*cov^2*var_b/(n*den^2),
    // den = var_a*var_b + eps. Summing over the windows containing u is
    // again a box sum because window membership is symmetric.
    std::vector<double> c1(nvox), c1_mu_b(nvox), c2(nvox), c2_mu_a(nvox);
    std::size_t n = 0;
    for (int i = 0; i < s[0]; ++i) {
        for (int j = 0; j < s[1]; ++j) {
            for (int k = 0; k < s[2]; ++k, ++n) {
                const double cnt =
                    static_cast<double>(window_extent(i, s[0], f.radius)) *
                    window_extent(j, s[1], f.radius) *
                    window_extent(k, s[2], f.radius);
                const double mu_a = f.sum_a[n] / cnt;
                const double mu_b = f.sum_b[n] / cnt;
                const double cov = f.sum_ab[n] / cnt - mu_a * mu_b;
                const double var_a = f.sum_aa[n] / cnt - mu_a * mu_a;
                const double var_b = f.sum_bb[n] / cnt - mu_b * mu_b;
                const double den = var_a * var_b + cfg.eps;
                const double c1v = 2.0 * cov / (cnt * den);
                const double c2v = 2.0 * cov * cov * var_b / (cnt * den * den);
                c1[n] = c1v;
                c1_mu_b[n] = c1v * mu_b;
                c2[n] = c2v;
                c2_mu_a[n] = c2v * mu_a;
            }
        }
    }
    const auto sc1 = box_sum(std::move(c1), s, f.radius);
    const auto sc1_mu_b = box_sum(std::move(c1_mu_b), s, f.radius);
    const auto sc2 = box_sum(std::move(c2), s, f.radius);
    const auto sc2_mu_a = box_sum(std::move(c2_mu_a), s, f.radius);

    const auto& da = a.data();
    const auto& db = b.data();
    const double inv_n = 1.0 / static_cast<double>(nvox);
    std::vector<double> grad(nvox);
    for (std::size_t u = 0; u < nvox; ++u) {
        grad[u] = -inv_n * (db[u] * sc1[u] - sc1_mu_b[u] - da[u] * sc2[u] +
                            sc2_mu_a[u]);
    }
    return grad;
}

LossValue dice_score(const Volume3& a, const Volume3& b, double smooth) {
    require_same_shape(a, b, "dice_score");
    const auto& da = a.data();
    const auto& db = b.data();
    double inter = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::size_t n = 0; n < da.size(); ++n) {
        inter += da[n] * db[n];
        sum_a += da[n];
        sum_b += db[n];
    }
    return LossValue{(2.0 * inter + smooth) / (sum_a + sum_b + smooth),
                     LossKind::dice_score};
}

LossValue bending_energy(const DisplacementField& ddf) {
    require_interior(ddf.shape(), "bending_energy");
    const Shape3& s = ddf.shape();
    double acc = 0.0;
    for (int i = 1; i < s[0] - 1; ++i) {
        for (int j = 1; j < s[1] - 1; ++j) {
            for (int k = 1; k < s[2] - 1; ++k) {
                for (int m = 0; m < 3; ++m) {
                    const double c = ddf.at(i, j, k, m);
                    const double dxx =
                        ddf.at(i + 1, j, k, m) - 2.0 * c + ddf.at(i - 1, j, k, m);
                    const double dyy =
                        ddf.at(i, j + 1, k, m) - 2.0 * c + ddf.at(i, j - 1, k, m);
                    const double dzz =
                        ddf.at(i, j, k + 1, m) - 2.0 * c + ddf.at(i, j, k - 1, m);
                    const double dxy = 0.25 * (ddf.at(i + 1, j + 1, k, m) -
                                               ddf.at(i + 1, j - 1, k, m) -
                                               ddf.at(i - 1, j + 1, k, m) +
                                               ddf.at(i - 1, j - 1, k, m));
                    const double dxz = 0.25 * (ddf.at(i + 1, j, k + 1, m) -
                                               ddf.at(i + 1, j, k - 1, m) -
                                               ddf.at(i - 1, j, k + 1, m) +
                                               ddf.at(i - 1, j, k - 1, m));
                    const double dyz = 0.25 * (ddf.at(i, j + 1, k + 1, m) -
                                               ddf.at(i, j + 1, k - 1, m) -
                                               ddf.at(i, j - 1, k + 1, m) +
                                               ddf.at(i, j - 1, k - 1, m));
                    acc += dxx * dxx + dyy * dyy + dzz * dzz +
                           2.0 * (dxy * dxy + dxz * dxz + dyz * dyz);
                }
            }
        }
    }
    const double n_int = static_cast<double>(s[0] - 2) * (s[1] - 2) * (s[2] - 2);
    return LossValue{acc / (3.0 * n_int), LossKind::bending};
}

std::vector<double> bending_energy_grad(const DisplacementField& ddf) {
    require_interior(ddf.shape(), "bending_energy");
    const Shape3& s = ddf.shape();
    const double n_int = static_cast<double>(s[0] - 2) * (s[1] - 2) * (s[2] - 2);
    const double scale = 1.0 / (3.0 * n_int);
    std::vector<double> grad(ddf.vectors().size(), 0.0);

    auto add = [&](int i, int j, int k, int m, double w) {
        grad[ddf.index(i, j, k, m)] += w;
    };
    for (int i = 1; i < s[0] - 1; ++i) {
        for (int j = 1; j < s[1] - 1; ++j) {
            for (int k = 1; k < s[2] - 1; ++k) {
                for (int m = 0; m < 3; ++m) {
                    const double c = ddf.at(i, j, k, m);
                    const double dxx =
                        ddf.at(i + 1, j, k, m) - 2.0 * c + ddf.at(i - 1, j, k, m);
                    const double dyy =
                        ddf.at(i, j + 1, k, m) - 2.0 * c + ddf.at(i, j - 1, k, m);
                    const double dzz =
                        ddf.at(i, j, k + 1, m) - 2.0 * c + ddf.at(i, j, k - 1, m);
                    const double dxy = 0.25 * (ddf.at(i + 1, j + 1, k, m) -
                                               ddf.at(i + 1, j - 1, k, m) -
                                               ddf.at(i - 1, j + 1, k, m) +
                                               ddf.at(i - 1, j - 1, k, m));
                    const double dxz = 0.25 * (ddf.at(i + 1, j, k + 1, m) -
                                               ddf.at(i + 1, j, k - 1, m) -
                                               ddf.at(i - 1, j, k + 1, m) +
                                               ddf.at(i - 1, j, k - 1, m));
                    const double dyz = 0.25 * (ddf.at(i, j + 1, k + 1, m) -
                                               ddf.at(i, j + 1, k - 1, m) -
                                               ddf.at(i, j - 1, k + 1, m) +
                                               ddf.at(i, j - 1, k - 1, m));

                    double w = 2.0 * scale * dxx;
                    add(i + 1, j, k, m, w);
                    add(i - 1, j, k, m, w);
                    add(i, j, k, m, -2.0 * w);
                    w = 2.0 * scale * dyy;
                    add(i, j + 1, k, m, w);
                    add(i, j - 1, k, m, w);
                    add(i, j, k, m, -2.0 * w);
                    w = 2.0 * scale * dzz;
                    add(i, j, k + 1, m, w);
                    add(i, j, k - 1, m, w);
                    add(i, j, k, m, -2.0 * w);

                    // d(2*t^2)/dt = 4t, times the 1/4 stencil weight.
                    w = scale * dxy;
                    add(i + 1, j + 1, k, m, w);
                    add(i + 1, j - 1, k, m, -w);
                    add(i - 1, j + 1, k, m, -w);
                    add(i - 1, j - 1, k, m, w);
                    w = scale * dxz;
                    add(i + 1, j, k + 1, m, w);
                    add(i + 1, j, k - 1, m, -w);
                    add(i - 1, j, k + 1, m, -w);
                    add(i - 1, j, k - 1, m, w);
                    w = scale * dyz;
                    add(i, j + 1, k + 1, m, w);
                    add(i, j + 1, k - 1, m, -w);
                    add(i, j - 1, k + 1, m, -w);
                    add(i, j - 1, k - 1, m, w);
                }
            }
        }
    }
    return grad;
}

LossValue displacement_gradient_norm(const DisplacementField& ddf, int p) {
    if (p != 1 && p != 2) {
        throw ValueError("displacement_gradient_norm: p must be 1 or 2");
    }
    require_interior(ddf.shape(), "displacement_gradient_norm");
    const Shape3& s = ddf.shape();
    double acc = 0.0;
    for (int i = 1; i < s[0] - 1; ++i) {
        for (int j = 1; j < s[1] - 1; ++j) {
            for (int k = 1; k < s[2] - 1; ++k) {
                for (int m = 0; m < 3; ++m) {
                    const double jx =
                        0.5 * (ddf.at(i + 1, j, k, m) - ddf.at(i - 1, j, k, m));
                    const double jy =
                        0.5 * (ddf.at(i, j + 1, k, m) - ddf.at(i, j - 1, k, m));
                    const double jz =
                        0.5 * (ddf.at(i, j, k + 1, m) - ddf.at(i, j, k - 1, m));
                    if (p == 1) {
                        acc += std::abs(jx) + std::abs(jy) + std::abs(jz);
                    } else {
                        acc += jx * jx + jy * jy + jz * jz;
                    }
                }
            }
        }
    }
    const double n_int = static_cast<double>(s[0] - 2) * (s[1] - 2) * (s[2] - 2);
    return LossValue{acc / n_int,
                     p == 1 ? LossKind::grad_l1 : LossKind::grad_l2};
}

std::vector<double> displacement_gradient_norm_grad(
    const DisplacementField& ddf, int p) {
    if (p != 1 && p != 2) {
        throw ValueError("displacement_gradient_norm: p must be 1 or 2");
    }
    require_interior(ddf.shape(), "displacement_gradient_norm");
    const Shape3& s = ddf.shape();
    const double n_int = static_cast<double>(s[0] - 2) * (s[1] - 2) * (s[2] - 2);
    std::vector<double> grad(ddf.vectors().size(), 0.0);

    auto coeff = [p, n_int](double jac) {
        if (p == 2) return 2.0 * jac / n_int;
        // subgradient 0 at exactly zero
        return (jac > 0.0 ? 1.0 : (jac < 0.0 ? -1.0 : 0.0)) / n_int;
    };
    for (int i = 1; i < s[0] - 1; ++i) {
        for (int j = 1; j < s[1] - 1; ++j) {
            for (int k = 1; k < s[2] - 1; ++k) {
                for (int m = 0; m < 3; ++m) {
                    const double jx =
                        0.5 * (ddf.at(i + 1, j, k, m) - ddf.at(i - 1, j, k, m));
                    const double jy =
                        0.5 * (ddf.at(i, j + 1, k, m) - ddf.at(i, j - 1, k, m));
                    const double jz =
                        0.5 * (ddf.at(i, j, k + 1, m) - ddf.at(i, j, k - 1, m));
                    double c = 0.5 * coeff(jx);
                    grad[ddf.index(i + 1, j, k, m)] += c;
                    grad[ddf.index(i - 1, j, k, m)] -= c;
                    c = 0.5 * coeff(jy);
                    grad[ddf.index(i, j + 1, k, m)] += c;
                    grad[ddf.index(i, j - 1, k, m)] -= c;
                    c = 0.5 * coeff(jz);
                    grad[ddf.index(i, j, k + 1, m)] += c;
                    grad[ddf.index(i, j, k - 1, m)] -= c;
                }
            }
        }
    }
    return grad;
}

Volume3 label_comparison_map(const Volume3& pred, const Volume3& truth,
                             double thresh) {
    require_same_shape(pred, truth, "label_comparison_map");
    require_single_channel(pred, "label_comparison_map");
    const auto& dp = pred.data();
    const auto& dt = truth.data();
    std::vector<double> rgb(dp.size() * 3, 0.0);
    for (std::size_t n = 0; n < dp.size(); ++n) {
        const bool p = dp[n] > thresh;
        const bool t = dt[n] > 0.5;
        double r = 0.0, g = 0.0, b = 0.0;
        if (p && t) {
            r = g = b = 1.0;  // true positive: white
        } else if (p && !t) {
            g = 1.0;  // false positive: green
        } else if (!p && t) {
            r = 1.0;  // false negative: red
        }
        rgb[n * 3] = r;
        rgb[n * 3 + 1] = g;
        rgb[n * 3 + 2] = b;
    }
    return Volume3(pred.shape(), 3, std::move(rgb));
}

}  // namespace reg
