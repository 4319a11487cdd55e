#pragma once

#include <functional>
#include <vector>

#include "advlin/attack.hpp"
#include "advlin/core.hpp"

namespace advlin {

/// Augmented variable (beta, t) of the smooth constrained logistic formulation.
struct ExtendedPoint {
    Vector beta;
    double t = 0.0;
};

/// Feasible cone C = {(beta, t) : rho t >= delta ‖beta‖_*}.
struct ConeSpec {
    NormKind norm = NormKind::Linf;
    double delta = 0.0;
    double rho = 1.0;

    void validate() const;
};

/// Root-mean-square row norm sqrt((1/n) sum ‖x_i‖^2), so rho^2 equals the trace of
/// the empirical second-moment matrix. Throws DataError when X is identically zero.
double choose_rho(const Dataset& data);

ConeSpec make_cone(const Dataset& data, NormKind norm, double delta);

bool is_feasible(const ExtendedPoint& w, const ConeSpec& cone, double slack = 0.0);

struct RiskEvaluation {
    double value = 0.0;
    /// Length p + 1; the last entry is the t-component.
    Vector gradient;
};

/// R(beta, t) = (1/n) sum h(y_i x_i^T beta - rho t) with logistic h.
double risk_value(const ExtendedPoint& w, const Dataset& data, const ConeSpec& cone);
RiskEvaluation risk_value_and_grad(const ExtendedPoint& w, const Dataset& data, const ConeSpec& cone);

/// Euclidean projection onto C for the L2 (self-dual) cone, in closed form.
ExtendedPoint project_l2_cone(const ExtendedPoint& w, const ConeSpec& cone);

/// Euclidean projection onto C for Linf perturbations (L1 dual). Solves
/// delta * sum_j (|beta_j| - delta lambda)_+ = rho (t + rho lambda) by scanning the
/// sorted breakpoints, O(p log p).
ExtendedPoint project_l1_cone(const ExtendedPoint& w, const ConeSpec& cone);

/// Dispatches on cone.norm.
ExtendedPoint project_onto_cone(const ExtendedPoint& w, const ConeSpec& cone);

/// Mean adversarial logistic loss (1/n) sum h(y_i x_i^T beta - delta ‖beta‖_*). All
/// classification solvers report this value so they can be compared directly.
double adversarial_logistic_objective(const Vector& beta, const Dataset& data, const AttackSpec& spec);

/// L = 1/2 max(lambda_max estimate, rho^2).
double risk_smoothness_bound(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts);

/// Feasible starting point: beta = 0 and t = (delta / rho) ‖beta‖_* + 1e-12.
ExtendedPoint initial_point(Eigen::Index p, const ConeSpec& cone);

/// Per-sample loss derivatives h'(z_i) for SAGA. Sample i's gradient is
/// h'(z_i) (y_i x_i, -rho), so one scalar per sample reconstructs it.
class SagaState {
public:
    SagaState(const Dataset& data, const ConeSpec& cone, const ExtendedPoint& w0);

    const std::vector<double>& gradient_table() const { return table_; }
    const Vector& running_mean() const { return mean_; }

    /// Stores a new derivative for sample i and updates the running mean.
    /// Returns the previous derivative.
    double replace(Eigen::Index i, double derivative);

    /// Relative gap between running_mean() and the mean recomputed from the table.
    double mean_residual() const;

private:
    const Dataset* data_;
    double rho_;
    std::vector<double> table_;
    Vector mean_;
};

/// Projected gradient descent with fixed step (opts.step_size or 1/L).
FitResult solve_pgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts);

/// Projected gradient with backtracking: halve the step until
/// R(w+) <= R(w) + (w+ - w)^T grad + ‖w+ - w‖^2 / (2 step). The step carries over.
FitResult solve_pgd_linesearch(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts);

/// Accelerated projected gradient (FISTA momentum) with the same backtracking.
FitResult solve_apgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts);

/// Projected SGD, step gamma0 / sqrt(1 + k / n); max_iter counts epochs.
FitResult solve_sgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts);

using SagaEpochHook = std::function<void(int epoch, const SagaState&)>;

/// Projected SAGA with fixed step 1/(3L); max_iter counts epochs.
FitResult solve_saga(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts,
                     const SagaEpochHook& on_epoch = {});

/// Baseline: (sub)gradient descent on beta alone against FGSM-perturbed inputs,
/// fixed step 1/L. With stochastic = true, one sample per step and max_iter epochs.
FitResult solve_fgsm_baseline(const Dataset& data, const AttackSpec& spec, const SolveOptions& opts,
                              bool stochastic);

} // namespace advlin
