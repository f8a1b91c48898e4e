#ifndef REG_LOSSES_HPP
#define REG_LOSSES_HPP

#include <vector>

#include "reg/core.hpp"

namespace reg {

enum class LossKind {
    ssd,
    lncc,
    dice_score,
    dice_loss,
    bending,
    grad_l1,
    grad_l2,
};

struct LossValue {
    double value;
    LossKind kind;
};

struct LnccConfig {
    int window = 9;       // cubic window side, odd, >= 3
    double eps = 1e-5;    // variance-product floor
};

// Mean of squared differences over all voxels and channels.
LossValue ssd(const Volume3& a, const Volume3& b);

// Negated mean of the local squared correlation cov^2/(var_a*var_b+eps)
// over cubic windows clamped at the boundary. Value in [-1, 0]; lower
// is better. Single-channel only.
LossValue lncc(const Volume3& a, const Volume3& b, const LnccConfig& cfg);

// Soft Dice overlap (2*sum(a*b)+smooth)/(sum(a)+sum(b)+smooth).
LossValue dice_score(const Volume3& a, const Volume3& b,
                     double smooth = 1e-6);

// Mean over interior voxels and displacement components of the squared
// second derivatives (cross terms double-weighted), central differences
// at unit spacing. Requires every dimension >= 3.
LossValue bending_energy(const DisplacementField& ddf);

// Mean over interior voxels of the entrywise p-norm (p = 1 or 2) of the
// 3x3 displacement Jacobian, central differences.
LossValue displacement_gradient_norm(const DisplacementField& ddf, int p);

// Threshold pred at `thresh` and compare against binary truth:
// TP -> white (1,1,1), FP -> green (0,1,0), FN -> red (1,0,0),
// TN -> black (0,0,0). Returns a 3-channel RGB volume.
Volume3 label_comparison_map(const Volume3& pred, const Volume3& truth,
                             double thresh = 0.5);

// Analytic gradients, each with respect to the first argument (images)
// or the field (regularizers). Flat arrays in the argument's storage
// order.
std::vector<double> ssd_grad(const Volume3& a, const Volume3& b);
std::vector<double> lncc_grad(const Volume3& a, const Volume3& b,
                              const LnccConfig& cfg);
std::vector<double> bending_energy_grad(const DisplacementField& ddf);
std::vector<double> displacement_gradient_norm_grad(
    const DisplacementField& ddf, int p);

}  // namespace reg

#endif  // REG_LOSSES_HPP
