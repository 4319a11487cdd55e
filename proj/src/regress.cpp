#include "advlin/regress.hpp"

#include <cmath>
#include <stdexcept>

namespace advlin {

WeightState WeightState::unit(Eigen::Index n, Eigen::Index p, double eps)
{
    return WeightState{Vector::Ones(n), Vector::Ones(p), eps};
}

RidgeSystem::RidgeSystem(const Dataset& data, const WeightState& weights, double delta)
    : X_(&data.X()), weights_(weights), delta_(delta)
{
    if (weights.w.size() != data.n() || weights.gamma.size() != data.p())
        throw std::invalid_argument("weight vectors do not match the dataset shape");
    b_ = data.X().transpose() * weights.w.cwiseProduct(data.y());
    diag_ = data.X().array().square().matrix().transpose() * weights.w + delta * weights.gamma;
}

Vector RidgeSystem::apply(const Vector& v) const
{
    const Vector Xv = *X_ * v;
    return X_->transpose() * weights_.w.cwiseProduct(Xv) + delta_ * weights_.gamma.cwiseProduct(v);
}

DenseSpdSystem::DenseSpdSystem(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b))
{
    if (A_.rows() != A_.cols() || A_.rows() != b_.size())
        throw std::invalid_argument("dense system: shape mismatch");
    diag_ = A_.diagonal();
}

namespace {

void require_regression(const Dataset& data)
{
    if (data.task() != Task::Regression)
        throw std::invalid_argument("regression solver called on a classification dataset");
}

double sum_of_shifted_squares(const Vector& beta, const Dataset& data, double shift)
{
    const Vector residual = data.y() - data.X() * beta;
    return (residual.array().abs() + shift).square().sum();
}

} // namespace

double objective_linf(const Vector& beta, const Dataset& data, double delta)
{
    return sum_of_shifted_squares(beta, data, delta * beta.lpNorm<1>());
}

double objective_l2(const Vector& beta, const Dataset& data, double delta)
{
    return sum_of_shifted_squares(beta, data, delta * beta.norm());
}

double adversarial_squared_objective(const Vector& beta, const Dataset& data, double delta, NormKind norm)
{
    return norm == NormKind::Linf ? objective_linf(beta, data, delta) : objective_l2(beta, data, delta);
}

Vector eta_trick_weights(const Vector& a, double eps)
{
    if (a.size() == 0) throw std::invalid_argument("eta trick needs at least one term");
    if (!(eps >= 0.0)) throw std::invalid_argument("eta trick smoothing must be nonnegative");
    if (eps == 0.0 && (a.array() == 0.0).any())
        throw std::invalid_argument("eta trick with eps = 0 requires every a_t > 0 (minimizer not unique)");
    const Vector smoothed = (a.array().square() + eps).sqrt().matrix();
    return smoothed / smoothed.sum();
}

WeightState update_weights(const Vector& beta, const Dataset& data, double delta, NormKind norm, double eps)
{
    if (!(eps > 0.0)) throw std::invalid_argument("update_weights requires eps > 0");
    const Vector r = ((data.y() - data.X() * beta).array().square() + eps).sqrt().matrix();

    WeightState out;
    out.eps = eps;
    if (norm == NormKind::Linf) {
        const Vector b = (beta.array().square() + eps).sqrt().matrix();
        const Vector S = (r.array() + delta * b.sum()).matrix();
        out.w = S.cwiseQuotient(r);
        out.gamma = (S.sum() / b.array()).matrix();
    } else {
        const double b = std::sqrt(beta.squaredNorm() + eps);
        const Vector S = (r.array() + delta * b).matrix();
        out.w = S.cwiseQuotient(r);
        out.gamma = Vector::Constant(beta.size(), S.sum() / b);
    }
    return out;
}

Vector ridge_solve_primal(const Dataset& data, const WeightState& weights, double delta)
{
    const Matrix& X = data.X();
    Matrix A = X.transpose() * weights.w.asDiagonal() * X;
    A.diagonal() += delta * weights.gamma;
    const Vector b = X.transpose() * weights.w.cwiseProduct(data.y());
    const Eigen::LLT<Matrix> chol(A);
    if (chol.info() != Eigen::Success)
        throw NumericalError("ridge (primal): Cholesky factorization of X^T W X + delta Gamma failed");
    return chol.solve(b);
}

Vector ridge_solve_dual(const Dataset& data, const WeightState& weights, double delta)
{
    const Matrix& X = data.X();
    const Vector inv_gamma = weights.gamma.cwiseInverse();
    Matrix K = X * inv_gamma.asDiagonal() * X.transpose();
    K.diagonal() += delta * weights.w.cwiseInverse();
    const Eigen::LLT<Matrix> chol(K);
    if (chol.info() != Eigen::Success)
        throw NumericalError("ridge (dual): Cholesky factorization of X Gamma^-1 X^T + delta W^-1 failed");
    const Vector alpha = chol.solve(data.y());
    return inv_gamma.cwiseProduct(X.transpose() * alpha);
}

namespace {

void check_regression_inputs(const Dataset& data, double delta, const SolveOptions& opts, double eps)
{
    require_regression(data);
    opts.validate();
    if (!(delta >= 0.0)) throw std::invalid_argument("adversarial radius must be nonnegative");
    if (!(eps > 0.0)) throw std::invalid_argument("reweighting requires eps > 0");
}

constexpr double kMinInnerRtol = 1e-10;

// Smoothed reweighting shrinks coefficients toward zero only geometrically, so an
// all-zero optimum is approached but never reached. Compare against it directly.
void prefer_zero_if_no_worse(FitResult& fit, const Dataset& data)
{
    const double at_zero = data.y().squaredNorm();
    if (at_zero > fit.objective) return;
    fit.beta.setZero();
    fit.objective = at_zero;
    if (!fit.trace.empty()) fit.trace.back().objective = at_zero;
}

} // namespace

FitResult solve_irrr(const Dataset& data, double delta, NormKind norm, const SolveOptions& opts, double eps)
{
    check_regression_inputs(data, delta, opts, eps);
    const bool primal = data.p() <= data.n();
    Stopwatch clock;

    FitResult fit;
    fit.solver = "irrr";
    WeightState weights = WeightState::unit(data.n(), data.p(), eps);
    double previous = 0.0;
    int k = 0;
    while (k < opts.max_iter) {
        ++k;
        fit.beta = primal ? ridge_solve_primal(data, weights, delta) : ridge_solve_dual(data, weights, delta);
        if (!fit.beta.allFinite()) throw NumericalError("irrr: non-finite coefficients");
        fit.objective = adversarial_squared_objective(fit.beta, data, delta, norm);
        if (opts.record_trace) fit.trace.push_back({k, fit.objective, clock.seconds()});
        if (k > 1 && relative_change_below(previous, fit.objective, opts.tol)) {
            fit.converged = true;
            break;
        }
        previous = fit.objective;
        weights = update_weights(fit.beta, data, delta, norm, eps);
    }
    prefer_zero_if_no_worse(fit, data);
    fit.iterations = k;
    fit.config["norm"] = to_string(norm);
    fit.config["delta"] = format_double(delta);
    fit.config["eps"] = format_double(eps);
    fit.config["inner_solver"] = primal ? "cholesky-primal" : "cholesky-dual";
    return fit;
}

FitResult solve_icg(const Dataset& data, double delta, NormKind norm, const SolveOptions& opts,
                    const IcgOptions& icg, double eps)
{
    check_regression_inputs(data, delta, opts, eps);
    if (icg.inner_iter < 0) throw std::invalid_argument("icg: inner_iter must be nonnegative");
    Stopwatch clock;

    FitResult fit;
    fit.solver = "icg";
    fit.beta = Vector::Zero(data.p());
    WeightState weights = WeightState::unit(data.n(), data.p(), eps);
    double rtol = icg.initial_rtol;
    double previous = 0.0;
    int k = 0;
    while (k < opts.max_iter) {
        ++k;
        const RidgeSystem system(data, weights, delta);
        const PcgResult inner = pcg_solve(system, fit.beta, icg.inner_iter, rtol);
        fit.beta = inner.x;
        fit.objective = adversarial_squared_objective(fit.beta, data, delta, norm);
        if (opts.record_trace) fit.trace.push_back({k, fit.objective, clock.seconds()});
        // A warm start that already meets a loose rtol leaves beta unchanged; that
        // is not convergence, so tighten the inner tolerance instead.
        const bool stalled = inner.iterations == 0 && icg.inner_iter > 0 && rtol > kMinInnerRtol;
        if (stalled) {
            rtol = std::max(kMinInnerRtol, 0.1 * rtol);
        } else if (k > 1) {
            if (relative_change_below(previous, fit.objective, opts.tol)) {
                fit.converged = true;
                break;
            }
            const double change = std::abs(previous - fit.objective) / (1.0 + std::abs(fit.objective));
            rtol = std::max(kMinInnerRtol, 0.1 * change);
        }
        previous = fit.objective;
        weights = update_weights(fit.beta, data, delta, norm, eps);
    }
    prefer_zero_if_no_worse(fit, data);
    fit.iterations = k;
    fit.config["norm"] = to_string(norm);
    fit.config["delta"] = format_double(delta);
    fit.config["eps"] = format_double(eps);
    fit.config["inner_solver"] = "jacobi-pcg";
    fit.config["inner_iter"] = std::to_string(icg.inner_iter);
    fit.config["initial_rtol"] = format_double(icg.initial_rtol);
    fit.config["rtol_schedule"] = "max(1e-10, 0.1 * relative objective change)";
    return fit;
}

} // namespace advlin
