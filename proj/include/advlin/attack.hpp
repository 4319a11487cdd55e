#pragma once

#include <cstdint>

#include "advlin/core.hpp"

namespace advlin {

/// Perturbation budget: ‖Δx‖ <= delta in `norm`, delta in input units.
struct AttackSpec {
    NormKind norm = NormKind::Linf;
    double delta = 0.0;
};

/// h(z) = log(1 + exp(-z)), evaluated without overflow for large |z|.
double logistic_loss(double z);

/// h'(z) = -1 / (1 + exp(z)), always in (-1, 0).
double logistic_loss_derivative(double z);

/// Worst-case squared error over the attack set, (|y - x^T beta| + delta ‖beta‖_*)^2.
double adversarial_loss_regression(const Vector& x, double y, const Vector& beta, const AttackSpec& spec);

/// Worst-case logistic loss over the attack set, h(y x^T beta - delta ‖beta‖_*).
double adversarial_loss_classification(const Vector& x, double y, const Vector& beta,
                                       const AttackSpec& spec);

/// Perturbation attaining the inner maximum. For Linf it is delta * s * sign(beta)
/// (zero where beta_j = 0), for L2 delta * s * beta / ‖beta‖_2, with s = -y for
/// classification and s = -sign(y - x^T beta) for regression. beta = 0 gives zero.
Vector worst_case_perturbation(const Vector& x, double y, const Vector& beta, const AttackSpec& spec,
                               Task task);

/// Monte-Carlo rule for the adversarial radius: the `percentile` (nearest rank) of
/// ‖X^T e‖ / ‖e‖_1 over `mc_samples` standard normal draws e of length n, where ‖.‖
/// is the perturbation norm itself (Linf or L2). Sample k draws from its own
/// generator seeded by (seed, k), so results do not depend on evaluation order.
double default_delta(const Matrix& X, NormKind norm, int mc_samples = 1000, double percentile = 95.0,
                     std::uint64_t seed = 0);

/// Smallest radius at which beta = 0 minimizes adversarial least squares:
/// ‖X^T y‖ / ‖y‖_1 in the perturbation norm. Returns 0 for y = 0.
double zero_solution_threshold(const Dataset& data, NormKind norm);

} // namespace advlin
