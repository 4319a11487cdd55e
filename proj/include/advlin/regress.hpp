#pragma once

#include "advlin/core.hpp"

namespace advlin {

/// Reweighting state of the iterative ridge scheme. Entries are finite and
/// positive whenever eps > 0.
struct WeightState {
    Vector w;      ///< sample weights, length n
    Vector gamma;  ///< parameter weights, length p
    double eps = 1e-20;

    /// w = 1, gamma = 1: the starting weights of the outer loop.
    static WeightState unit(Eigen::Index n, Eigen::Index p, double eps = 1e-20);
};

/// A = X^T W X + delta Gamma and b = X^T W y, applied matrix-free.
class RidgeSystem {
public:
    RidgeSystem(const Dataset& data, const WeightState& weights, double delta);

    Eigen::Index size() const { return b_.size(); }
    const Vector& rhs() const { return b_; }
    const Vector& diagonal() const { return diag_; }
    Vector apply(const Vector& v) const;

private:
    const Matrix* X_;
    WeightState weights_;
    double delta_;
    Vector b_;
    Vector diag_;
};

/// Dense SPD matrix wrapped in the same operator interface as RidgeSystem.
class DenseSpdSystem {
public:
    DenseSpdSystem(Matrix A, Vector b);

    Eigen::Index size() const { return b_.size(); }
    const Vector& rhs() const { return b_; }
    const Vector& diagonal() const { return diag_; }
    Vector apply(const Vector& v) const { return A_ * v; }

private:
    Matrix A_;
    Vector b_;
    Vector diag_;
};

/// sum_i (|y_i - x_i^T beta| + delta ‖beta‖_1)^2
double objective_linf(const Vector& beta, const Dataset& data, double delta);

/// sum_i (|y_i - x_i^T beta| + delta ‖beta‖_2)^2
double objective_l2(const Vector& beta, const Dataset& data, double delta);

double adversarial_squared_objective(const Vector& beta, const Dataset& data, double delta, NormKind norm);

/// Minimizer over the simplex of sum_t (a_t^2 + eps) / eta_t:
/// eta_t = sqrt(a_t^2 + eps) / sum_s sqrt(a_s^2 + eps).
/// Throws std::invalid_argument when eps = 0 and some a_t = 0.
Vector eta_trick_weights(const Vector& a, double eps);

/// Majorize-minimize weights at beta. With r_i = sqrt(res_i^2 + eps) and
/// S_i = r_i + delta * sum_j sqrt(beta_j^2 + eps) (Linf) or
/// S_i = r_i + delta * sqrt(‖beta‖^2 + eps) (L2): w_i = S_i / r_i and
/// gamma_j = (sum_i S_i) / sqrt(beta_j^2 + eps) (Linf) or
/// (sum_i S_i) / sqrt(‖beta‖^2 + eps) (L2). Requires eps > 0.
WeightState update_weights(const Vector& beta, const Dataset& data, double delta, NormKind norm, double eps);

/// (X^T W X + delta Gamma)^{-1} X^T W y by Cholesky.
Vector ridge_solve_primal(const Dataset& data, const WeightState& weights, double delta);

/// Gamma^{-1} X^T (X Gamma^{-1} X^T + delta W^{-1})^{-1} y, the n x n form.
Vector ridge_solve_dual(const Dataset& data, const WeightState& weights, double delta);

struct PcgResult {
    Vector x;
    int iterations = 0;
    double initial_residual = 0.0;
    double residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradient from x0, stopping at
/// ‖Ax - b‖ <= rtol ‖b‖ or after max_iter steps.
template <class System>
PcgResult pcg_solve(const System& system, const Vector& x0, int max_iter, double rtol);

struct IcgOptions {
    int inner_iter = 20;
    double initial_rtol = 1e-3;
};

/// Iterative reweighted ridge regression with exact inner solves (primal when
/// p <= n, dual otherwise). max_iter counts outer iterations.
FitResult solve_irrr(const Dataset& data, double delta, NormKind norm, const SolveOptions& opts,
                     double eps = 1e-20);

/// Same outer loop with the ridge systems solved approximately by warm-started PCG.
FitResult solve_icg(const Dataset& data, double delta, NormKind norm, const SolveOptions& opts,
                    const IcgOptions& icg = {}, double eps = 1e-20);

} // namespace advlin

#include "advlin/pcg.ipp"
