#include "advlin/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace advlin {

void ConeSpec::validate() const
{
    if (!(rho > 0.0)) throw std::invalid_argument("cone scale rho must be positive");
    if (!(delta >= 0.0)) throw std::invalid_argument("adversarial radius must be nonnegative");
}

double choose_rho(const Dataset& data)
{
    const double mean_sq = data.X().squaredNorm() / static_cast<double>(data.n());
    if (mean_sq == 0.0) throw DataError("design matrix is identically zero; cannot choose rho");
    return std::sqrt(mean_sq);
}

ConeSpec make_cone(const Dataset& data, NormKind norm, double delta)
{
    ConeSpec cone{norm, delta, choose_rho(data)};
    cone.validate();
    return cone;
}

bool is_feasible(const ExtendedPoint& w, const ConeSpec& cone, double slack)
{
    return cone.rho * w.t >= cone.delta * dual_norm(w.beta, cone.norm) - slack;
}

namespace {

void require_classification(const Dataset& data)
{
    if (data.task() != Task::BinaryClassification)
        throw std::invalid_argument("classification solver called on a regression dataset");
}

// z_i = y_i x_i^T beta - offset
Vector margins(const Dataset& data, const Vector& beta, double offset)
{
    Vector z = data.y().cwiseProduct(data.X() * beta);
    z.array() -= offset;
    return z;
}

double mean_logistic(const Vector& z)
{
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) sum += logistic_loss(z[i]);
    return sum / static_cast<double>(z.size());
}

Vector stack(const ExtendedPoint& w)
{
    Vector v(w.beta.size() + 1);
    v.head(w.beta.size()) = w.beta;
    v[w.beta.size()] = w.t;
    return v;
}

ExtendedPoint unstack(const Vector& v)
{
    const auto p = v.size() - 1;
    return ExtendedPoint{v.head(p), v[p]};
}

} // namespace

double risk_value(const ExtendedPoint& w, const Dataset& data, const ConeSpec& cone)
{
    return mean_logistic(margins(data, w.beta, cone.rho * w.t));
}

RiskEvaluation risk_value_and_grad(const ExtendedPoint& w, const Dataset& data, const ConeSpec& cone)
{
    const Vector z = margins(data, w.beta, cone.rho * w.t);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    Vector d(z.size());
    double value = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        value += logistic_loss(z[i]);
        d[i] = logistic_loss_derivative(z[i]);
    }
    RiskEvaluation out;
    out.value = value * inv_n;
    out.gradient.resize(data.p() + 1);
    out.gradient.head(data.p()) = inv_n * (data.X().transpose() * d.cwiseProduct(data.y()));
    out.gradient[data.p()] = -cone.rho * inv_n * d.sum();
    return out;
}

ExtendedPoint project_l2_cone(const ExtendedPoint& w, const ConeSpec& cone)
{
    const double delta = cone.delta;
    const double rho = cone.rho;
    const double bnorm = w.beta.norm();
    if (rho * w.t >= delta * bnorm) return w;
    if (delta == 0.0) return ExtendedPoint{w.beta, 0.0};
    if (rho * bnorm + delta * w.t <= 0.0) return ExtendedPoint{Vector::Zero(w.beta.size()), 0.0};

    const double t = delta * (rho * bnorm + delta * w.t) / (delta * delta + rho * rho);
    return ExtendedPoint{(rho * t / (delta * bnorm)) * w.beta, t};
}

ExtendedPoint project_l1_cone(const ExtendedPoint& w, const ConeSpec& cone)
{
    const double delta = cone.delta;
    const double rho = cone.rho;
    const auto p = w.beta.size();
    if (rho * w.t >= delta * w.beta.lpNorm<1>()) return w;
    if (delta == 0.0) return ExtendedPoint{w.beta, 0.0};

    std::vector<double> a(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) a[static_cast<std::size_t>(j)] = std::abs(w.beta[j]);
    std::sort(a.begin(), a.end(), std::greater<>());

    // phi(lambda) = delta * sum_j (a_j - delta lambda)_+ - rho (t + rho lambda) is
    // strictly decreasing. Walk breakpoints lambda_k = a_k / delta from the largest
    // down; the first one with phi >= 0 bounds the root from below, and the root
    // then has the k - 1 leading entries active.
    std::size_t active = a.size();
    double prefix = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double lambda_k = a[k] / delta;
        const double phi = delta * (prefix - static_cast<double>(k) * a[k]) - rho * (w.t + rho * lambda_k);
        if (phi >= 0.0) {
            active = k;
            break;
        }
        prefix += a[k];
    }
    if (active == 0) return ExtendedPoint{Vector::Zero(p), 0.0};

    double sum_active = 0.0;
    for (std::size_t k = 0; k < active; ++k) sum_active += a[k];
    const double lambda =
        (delta * sum_active - rho * w.t) / (static_cast<double>(active) * delta * delta + rho * rho);

    ExtendedPoint out{Vector(p), w.t + rho * lambda};
    const double shrink = delta * lambda;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mag = std::max(std::abs(w.beta[j]) - shrink, 0.0);
        out.beta[j] = w.beta[j] > 0.0 ? mag : (w.beta[j] < 0.0 ? -mag : 0.0);
    }
    return out;
}

ExtendedPoint project_onto_cone(const ExtendedPoint& w, const ConeSpec& cone)
{
    cone.validate();
    return cone.norm == NormKind::L2 ? project_l2_cone(w, cone) : project_l1_cone(w, cone);
}

double adversarial_logistic_objective(const Vector& beta, const Dataset& data, const AttackSpec& spec)
{
    return mean_logistic(margins(data, beta, spec.delta * dual_norm(beta, spec.norm)));
}

double risk_smoothness_bound(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    const double lambda = empirical_second_moment_lambda_max(data, opts.power_iters, opts.seed);
    return 0.5 * std::max(lambda, cone.rho * cone.rho);
}

ExtendedPoint initial_point(Eigen::Index p, const ConeSpec& cone)
{
    ExtendedPoint w{Vector::Zero(p), 0.0};
    w.t = cone.delta / cone.rho * dual_norm(w.beta, cone.norm) + 1e-12;
    return w;
}

SagaState::SagaState(const Dataset& data, const ConeSpec& cone, const ExtendedPoint& w0)
    : data_(&data), rho_(cone.rho), table_(static_cast<std::size_t>(data.n())), mean_(data.p() + 1)
{
    const Vector z = margins(data, w0.beta, cone.rho * w0.t);
    Vector d(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        d[i] = logistic_loss_derivative(z[i]);
        table_[static_cast<std::size_t>(i)] = d[i];
    }
    const double inv_n = 1.0 / static_cast<double>(data.n());
    mean_.head(data.p()) = inv_n * (data.X().transpose() * d.cwiseProduct(data.y()));
    mean_[data.p()] = -rho_ * inv_n * d.sum();
}

double SagaState::replace(Eigen::Index i, double derivative)
{
    auto& slot = table_[static_cast<std::size_t>(i)];
    const double old = slot;
    const double change = (derivative - old) / static_cast<double>(data_->n());
    const auto p = data_->p();
    mean_.head(p) += (change * data_->y()[i]) * data_->X().row(i).transpose();
    mean_[p] -= rho_ * change;
    slot = derivative;
    return old;
}

double SagaState::mean_residual() const
{
    const Eigen::Map<const Vector> d(table_.data(), static_cast<Eigen::Index>(table_.size()));
    const double inv_n = 1.0 / static_cast<double>(data_->n());
    Vector exact(data_->p() + 1);
    exact.head(data_->p()) = inv_n * (data_->X().transpose() * d.cwiseProduct(data_->y()));
    exact[data_->p()] = -rho_ * inv_n * d.sum();
    return (exact - mean_).norm() / std::max(exact.norm(), 1e-300);
}

namespace {

constexpr double kMinStep = 1e-18;

// Tracks the beta-space adversarial objective and the best iterate seen so far.
class Recorder {
public:
    Recorder(const Dataset& data, const ConeSpec& cone, bool keep_trace, bool best_so_far)
        : data_(data), spec_{cone.norm, cone.delta}, keep_trace_(keep_trace), best_so_far_(best_so_far)
    {
    }

    void record(int iter, const Vector& beta)
    {
        const double f = adversarial_logistic_objective(beta, data_, spec_);
        if (iter == 0 || f < best_value_) {
            best_value_ = f;
            best_beta_ = beta;
        }
        last_value_ = f;
        last_beta_ = beta;
        if (keep_trace_) trace_.push_back({iter, best_so_far_ ? best_value_ : f, clock_.seconds()});
    }

    FitResult finish(std::string solver, int iterations, bool converged)
    {
        FitResult out;
        out.solver = std::move(solver);
        out.beta = best_so_far_ ? best_beta_ : last_beta_;
        out.objective = best_so_far_ ? best_value_ : last_value_;
        out.trace = std::move(trace_);
        out.iterations = iterations;
        out.converged = converged;
        return out;
    }

private:
    const Dataset& data_;
    AttackSpec spec_;
    bool keep_trace_;
    bool best_so_far_;
    Stopwatch clock_;
    std::vector<TracePoint> trace_;
    double best_value_ = 0.0;
    double last_value_ = 0.0;
    Vector best_beta_;
    Vector last_beta_;
};

struct Setup {
    double L = 0.0;
    double step = 0.0;
};

Setup prepare(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    require_classification(data);
    opts.validate();
    cone.validate();
    Setup s;
    s.L = risk_smoothness_bound(data, cone, opts);
    s.step = opts.step_size ? *opts.step_size : 1.0 / s.L;
    return s;
}

void echo_common(FitResult& fit, const ConeSpec& cone, const Setup& s)
{
    fit.config["norm"] = to_string(cone.norm);
    fit.config["delta"] = format_double(cone.delta);
    fit.config["rho"] = format_double(cone.rho);
    fit.config["smoothness_bound"] = format_double(s.L);
}

// Projected step from `from` along `grad`, with halving until the quadratic
// upper model holds. `step` is updated in place.
ExtendedPoint backtracking_step(const ExtendedPoint& from, const RiskEvaluation& at_from, double& step,
                                const Dataset& data, const ConeSpec& cone, double& value_out)
{
    const Vector x = stack(from);
    while (true) {
        const ExtendedPoint cand = project_onto_cone(unstack(x - step * at_from.gradient), cone);
        const Vector diff = stack(cand) - x;
        const double value = risk_value(cand, data, cone);
        const double model = at_from.value + diff.dot(at_from.gradient) + diff.squaredNorm() / (2.0 * step);
        if (value <= model + 1e-13 * std::abs(at_from.value)) {
            value_out = value;
            return cand;
        }
        step *= 0.5;
        if (step < kMinStep) {
            std::ostringstream msg;
            msg << "line search step underflow (step < " << kMinStep << ") at objective " << at_from.value;
            throw NumericalError(msg.str());
        }
    }
}

} // namespace

FitResult solve_pgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    const Setup s = prepare(data, cone, opts);
    Recorder rec(data, cone, opts.record_trace, true);
    ExtendedPoint w = initial_point(data.p(), cone);
    rec.record(0, w.beta);

    RiskEvaluation eval = risk_value_and_grad(w, data, cone);
    int k = 0;
    bool converged = false;
    while (k < opts.max_iter) {
        ++k;
        w = project_onto_cone(unstack(stack(w) - s.step * eval.gradient), cone);
        const double previous = eval.value;
        eval = risk_value_and_grad(w, data, cone);
        rec.record(k, w.beta);
        if (relative_change_below(previous, eval.value, opts.tol)) {
            converged = true;
            break;
        }
    }
    FitResult fit = rec.finish("gd", k, converged);
    echo_common(fit, cone, s);
    fit.config["step_size"] = format_double(s.step);
    return fit;
}

FitResult solve_pgd_linesearch(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    const Setup s = prepare(data, cone, opts);
    Recorder rec(data, cone, opts.record_trace, true);
    ExtendedPoint w = initial_point(data.p(), cone);
    rec.record(0, w.beta);

    double step = s.step;
    RiskEvaluation eval = risk_value_and_grad(w, data, cone);
    int k = 0;
    bool converged = false;
    while (k < opts.max_iter) {
        ++k;
        double value = 0.0;
        w = backtracking_step(w, eval, step, data, cone, value);
        const double previous = eval.value;
        eval = risk_value_and_grad(w, data, cone);
        rec.record(k, w.beta);
        if (relative_change_below(previous, eval.value, opts.tol)) {
            converged = true;
            break;
        }
    }
    FitResult fit = rec.finish("gd-ls", k, converged);
    echo_common(fit, cone, s);
    fit.config["initial_step_size"] = format_double(s.step);
    fit.config["final_step_size"] = format_double(step);
    return fit;
}

FitResult solve_apgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    const Setup s = prepare(data, cone, opts);
    Recorder rec(data, cone, opts.record_trace, true);
    ExtendedPoint w = initial_point(data.p(), cone);
    ExtendedPoint w_prev = w;
    rec.record(0, w.beta);

    double step = s.step;
    double alpha = 1.0;
    double previous = risk_value(w, data, cone);
    int k = 0;
    bool converged = false;
    while (k < opts.max_iter) {
        ++k;
        const double alpha_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha));
        const double momentum = (alpha - 1.0) / alpha_next;
        alpha = alpha_next;

        const ExtendedPoint z = unstack(stack(w) + momentum * (stack(w) - stack(w_prev)));
        const RiskEvaluation at_z = risk_value_and_grad(z, data, cone);
        double value = 0.0;
        ExtendedPoint next = backtracking_step(z, at_z, step, data, cone, value);
        w_prev = std::move(w);
        w = std::move(next);
        rec.record(k, w.beta);
        if (relative_change_below(previous, value, opts.tol)) {
            converged = true;
            break;
        }
        previous = value;
    }
    FitResult fit = rec.finish("agd", k, converged);
    echo_common(fit, cone, s);
    fit.config["initial_step_size"] = format_double(s.step);
    fit.config["final_step_size"] = format_double(step);
    return fit;
}

FitResult solve_sgd(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts)
{
    const Setup s = prepare(data, cone, opts);
    Recorder rec(data, cone, opts.record_trace, false);
    ExtendedPoint w = initial_point(data.p(), cone);
    rec.record(0, w.beta);

    const auto n = data.n();
    const double dn = static_cast<double>(n);
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

    double previous = adversarial_logistic_objective(w.beta, data, {cone.norm, cone.delta});
    long long step_index = 0;
    int epoch = 0;
    bool converged = false;
    while (epoch < opts.max_iter) {
        ++epoch;
        for (Eigen::Index j = 0; j < n; ++j, ++step_index) {
            const Eigen::Index i = pick(rng);
            const double yi = data.y()[i];
            const double zi = yi * data.X().row(i).dot(w.beta) - cone.rho * w.t;
            const double hd = logistic_loss_derivative(zi);
            const double gamma = s.step / std::sqrt(1.0 + static_cast<double>(step_index) / dn);
            ExtendedPoint moved{w.beta - (gamma * hd * yi) * data.X().row(i).transpose(),
                                w.t + gamma * hd * cone.rho};
            w = project_onto_cone(moved, cone);
        }
        rec.record(epoch, w.beta);
        const double current = adversarial_logistic_objective(w.beta, data, {cone.norm, cone.delta});
        if (relative_change_below(previous, current, opts.tol)) {
            converged = true;
            break;
        }
        previous = current;
    }
    FitResult fit = rec.finish("sgd", epoch, converged);
    echo_common(fit, cone, s);
    fit.config["initial_step_size"] = format_double(s.step);
    fit.config["schedule"] = "gamma0/sqrt(1+k/n)";
    return fit;
}

FitResult solve_saga(const Dataset& data, const ConeSpec& cone, const SolveOptions& opts,
                     const SagaEpochHook& on_epoch)
{
    Setup s = prepare(data, cone, opts);
    if (!opts.step_size) s.step = 1.0 / (3.0 * s.L);
    Recorder rec(data, cone, opts.record_trace, false);
    ExtendedPoint w = initial_point(data.p(), cone);
    rec.record(0, w.beta);

    const auto n = data.n();
    const auto p = data.p();
    SagaState state(data, cone, w);
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

    double previous = adversarial_logistic_objective(w.beta, data, {cone.norm, cone.delta});
    int epoch = 0;
    bool converged = false;
    Vector direction(p + 1);
    while (epoch < opts.max_iter) {
        ++epoch;
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index i = pick(rng);
            const double yi = data.y()[i];
            const double zi = yi * data.X().row(i).dot(w.beta) - cone.rho * w.t;
            const double fresh = logistic_loss_derivative(zi);
            const double stale = state.gradient_table()[static_cast<std::size_t>(i)];
            const double diff = fresh - stale;
            // g = grad f_i(w) - v_old + mean, using the mean before this update.
            direction = state.running_mean();
            direction.head(p) += (diff * yi) * data.X().row(i).transpose();
            direction[p] -= diff * cone.rho;
            w = project_onto_cone(unstack(stack(w) - s.step * direction), cone);
            state.replace(i, fresh);
        }
        rec.record(epoch, w.beta);
        if (on_epoch) on_epoch(epoch, state);
        const double current = adversarial_logistic_objective(w.beta, data, {cone.norm, cone.delta});
        if (relative_change_below(previous, current, opts.tol)) {
            converged = true;
            break;
        }
        previous = current;
    }
    FitResult fit = rec.finish("saga", epoch, converged);
    echo_common(fit, cone, s);
    fit.config["step_size"] = format_double(s.step);
    return fit;
}

FitResult solve_fgsm_baseline(const Dataset& data, const AttackSpec& spec, const SolveOptions& opts,
                              bool stochastic)
{
    if (spec.norm != NormKind::Linf)
        throw std::invalid_argument("the FGSM baseline is defined for Linf attacks only");
    const ConeSpec cone = make_cone(data, spec.norm, spec.delta);
    const Setup s = prepare(data, cone, opts);
    Recorder rec(data, cone, opts.record_trace, false);

    const auto n = data.n();
    const auto p = data.p();
    const double inv_n = 1.0 / static_cast<double>(n);
    Vector beta = Vector::Zero(p);
    rec.record(0, beta);

    auto perturbed_margin = [&](Eigen::Index i) {
        return data.y()[i] * data.X().row(i).dot(beta) - spec.delta * beta.lpNorm<1>();
    };

    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    double previous = adversarial_logistic_objective(beta, data, spec);
    int k = 0;
    bool converged = false;
    while (k < opts.max_iter) {
        ++k;
        if (stochastic) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::Index i = pick(rng);
                const double hd = logistic_loss_derivative(perturbed_margin(i));
                // d/dbeta of h(y_i (x_i + dx_i)^T beta) with dx_i = -delta y_i sign(beta) held fixed.
                const Vector sign = beta.array().sign().matrix();
                beta -= s.step * hd * (data.y()[i] * data.X().row(i).transpose() - spec.delta * sign);
            }
        } else {
            Vector d(n);
            for (Eigen::Index i = 0; i < n; ++i) d[i] = logistic_loss_derivative(perturbed_margin(i));
            const Vector sign = beta.array().sign().matrix();
            const Vector grad = inv_n * (data.X().transpose() * d.cwiseProduct(data.y())) -
                                (inv_n * d.sum() * spec.delta) * sign;
            beta -= s.step * grad;
        }
        rec.record(k, beta);
        const double current = adversarial_logistic_objective(beta, data, spec);
        if (relative_change_below(previous, current, opts.tol)) {
            converged = true;
            break;
        }
        previous = current;
    }
    FitResult fit = rec.finish(stochastic ? "fgsm-sgd" : "fgsm-gd", k, converged);
    echo_common(fit, cone, s);
    fit.config["step_size"] = format_double(s.step);
    return fit;
}

} // namespace advlin
