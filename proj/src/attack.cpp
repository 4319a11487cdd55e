#include "advlin/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace advlin {

double logistic_loss(double z)
{
    // log(1 + e^{-z}) = max(-z, 0) + log1p(e^{-|z|})
    return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logistic_loss_derivative(double z)
{
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(z));
}

namespace {

void check_dims(const Vector& x, const Vector& beta)
{
    if (x.size() != beta.size())
        throw std::invalid_argument("feature vector and coefficients differ in length");
}

void check_spec(const AttackSpec& spec)
{
    if (!(spec.delta >= 0.0)) throw std::invalid_argument("attack radius must be nonnegative");
}

} // namespace

double adversarial_loss_regression(const Vector& x, double y, const Vector& beta, const AttackSpec& spec)
{
    check_dims(x, beta);
    check_spec(spec);
    const double z = std::abs(y - x.dot(beta)) + spec.delta * dual_norm(beta, spec.norm);
    return z * z;
}

double adversarial_loss_classification(const Vector& x, double y, const Vector& beta,
                                       const AttackSpec& spec)
{
    check_dims(x, beta);
    check_spec(spec);
    return logistic_loss(y * x.dot(beta) - spec.delta * dual_norm(beta, spec.norm));
}

Vector worst_case_perturbation(const Vector& x, double y, const Vector& beta, const AttackSpec& spec,
                               Task task)
{
    check_dims(x, beta);
    check_spec(spec);
    Vector dx = Vector::Zero(beta.size());
    if (beta.isZero(0.0) || spec.delta == 0.0) return dx;

    double s = 0.0;
    if (task == Task::BinaryClassification) {
        s = -y;
    } else {
        s = (y - x.dot(beta)) >= 0.0 ? -1.0 : 1.0;
    }
    if (spec.norm == NormKind::Linf) {
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (beta[j] > 0.0) dx[j] = spec.delta * s;
            else if (beta[j] < 0.0) dx[j] = -spec.delta * s;
        }
    } else {
        dx = (spec.delta * s / beta.norm()) * beta;
    }
    return dx;
}

double default_delta(const Matrix& X, NormKind norm, int mc_samples, double percentile, std::uint64_t seed)
{
    if (mc_samples < 1) throw std::invalid_argument("mc_samples must be at least 1");
    if (!(percentile > 0.0 && percentile < 100.0))
        throw std::invalid_argument("percentile must lie in (0, 100)");
    if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("empty design matrix");

    const auto n = X.rows();
    const auto lo = static_cast<std::uint32_t>(seed & 0xffffffffu);
    const auto hi = static_cast<std::uint32_t>(seed >> 32);
    std::vector<double> ratios(static_cast<std::size_t>(mc_samples));
    Vector e(n);
    for (int k = 0; k < mc_samples; ++k) {
        std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < n; ++i) e[i] = normal(rng);
        ratios[static_cast<std::size_t>(k)] = primal_norm(X.transpose() * e, norm) / e.lpNorm<1>();
    }
    std::sort(ratios.begin(), ratios.end());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * mc_samples));
    return ratios[std::max<std::size_t>(rank, 1) - 1];
}

double zero_solution_threshold(const Dataset& data, NormKind norm)
{
    const double y1 = data.y().lpNorm<1>();
    if (y1 == 0.0) return 0.0;
    return primal_norm(data.X().transpose() * data.y(), norm) / y1;
}

} // namespace advlin
