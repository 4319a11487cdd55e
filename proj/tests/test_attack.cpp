#include <gtest/gtest.h>

#include <algorithm>

#include "advlin/attack.hpp"
#include "advlin/regress.hpp"
#include "oracles.hpp"

using namespace advlin;

namespace {

// Direction u with ‖u‖ <= 1 maximizing u^T beta.
Vector maximizing_direction(const Vector& beta, NormKind norm)
{
    if (norm == NormKind::Linf) return beta.unaryExpr([](double b) { return double((b > 0) - (b < 0)); });
    const double nb = beta.norm();
    return nb > 0 ? Vector(beta / nb) : Vector(Vector::Zero(beta.size()));
}

} // namespace

TEST(Logistic, StableAndCorrect)
{
    EXPECT_NEAR(logistic_loss(0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(logistic_loss(0.3), std::log1p(std::exp(-0.3)), 1e-15);
    EXPECT_NEAR(logistic_loss(-800.0), 800.0, 1e-12);
    EXPECT_TRUE(std::isfinite(logistic_loss(-1e6)));
    EXPECT_NEAR(logistic_loss(800.0), 0.0, 1e-300);
    EXPECT_NEAR(logistic_loss_derivative(0.0), -0.5, 1e-15);
    for (double z : {-30.0, -2.0, 0.5, 7.0}) {
        const double h = 1e-6;
        const double fd = (logistic_loss(z + h) - logistic_loss(z - h)) / (2 * h);
        EXPECT_NEAR(logistic_loss_derivative(z), fd, 1e-8);
    }
}

TEST(AdversarialLoss, RegressionExamples)
{
    // y = 2, x^T beta = 1, delta ‖beta‖_1 = 0.5.
    const Vector x{{1.0, 0.0}};
    const Vector beta{{1.0, -0.25}};
    EXPECT_DOUBLE_EQ(adversarial_loss_regression(x, 2.0, beta, {NormKind::Linf, 0.4}), 2.25);
    EXPECT_DOUBLE_EQ(adversarial_loss_regression(x, 2.0, beta, {NormKind::Linf, 0.0}), 1.0);
}

TEST(AdversarialLoss, ClassificationExamples)
{
    const Vector x{{1.0}};
    EXPECT_NEAR(adversarial_loss_classification(x, 1.0, Vector{{0.0}}, {NormKind::Linf, 0.0}), 0.693147, 1e-6);
    // x^T beta = 0.5, delta ‖beta‖_1 = 0.2.
    EXPECT_DOUBLE_EQ(adversarial_loss_classification(x, 1.0, Vector{{0.5}}, {NormKind::Linf, 0.4}),
                     logistic_loss(0.3));
    const double big = adversarial_loss_classification(x, -1.0, Vector{{800.0}}, {NormKind::Linf, 0.0});
    EXPECT_NEAR(big, 800.0, 1e-9);
}

TEST(AdversarialLoss, EqualsSignEnumeration)
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 500; ++k) {
        const auto p = 1 + k % 4;
        const Vector x = oracle::gaussian_vec(p, rng);
        const Vector beta = oracle::gaussian_vec(p, rng);
        const double delta = oracle::uniform(rng, 0.0, 2.0);
        for (NormKind norm : {NormKind::Linf, NormKind::L2}) {
            const double dn = norm == NormKind::Linf ? beta.lpNorm<1>() : beta.norm();
            const double y = oracle::gaussian_vec(1, rng)(0);
            double reg = 0.0;
            for (double s : {-1.0, 1.0}) reg = std::max(reg, std::pow(y - x.dot(beta) - delta * s * dn, 2));
            EXPECT_NEAR(adversarial_loss_regression(x, y, beta, {norm, delta}), reg, 1e-12 * reg);

            const double lbl = y < 0 ? -1.0 : 1.0;
            const Vector u = maximizing_direction(beta, norm);
            double clf = 0.0;
            for (double s : {-1.0, 1.0})
                clf = std::max(clf, oracle::logistic(lbl * (x + s * delta * u).dot(beta)));
            EXPECT_NEAR(adversarial_loss_classification(x, lbl, beta, {norm, delta}), clf, 1e-12 * clf);
        }
    }
}

TEST(AdversarialLoss, MonotoneInDelta)
{
    std::mt19937_64 rng(8);
    const Vector x = oracle::gaussian_vec(3, rng), beta = oracle::gaussian_vec(3, rng);
    double prev_r = 0.0, prev_c = 0.0;
    for (double d = 0.0; d <= 2.0; d += 0.1) {
        const double r = adversarial_loss_regression(x, 0.3, beta, {NormKind::L2, d});
        const double c = adversarial_loss_classification(x, -1.0, beta, {NormKind::Linf, d});
        EXPECT_GE(r, prev_r);
        EXPECT_GE(c, prev_c);
        prev_r = r;
        prev_c = c;
    }
}

TEST(WorstCase, ClassificationLinfExample)
{
    const Vector dx = worst_case_perturbation(Vector{{0.0, 0.0}}, 1.0, Vector{{1.0, -2.0}},
                                              {NormKind::Linf, 0.1}, Task::BinaryClassification);
    EXPECT_DOUBLE_EQ(dx(0), -0.1);
    EXPECT_DOUBLE_EQ(dx(1), 0.1);
}

TEST(WorstCase, RegressionL2Example)
{
    const Vector beta{{3.0, 4.0}};
    const Vector x{{0.0, 0.0}};
    const Vector dx = worst_case_perturbation(x, 5.0, beta, {NormKind::L2, 0.5}, Task::Regression);
    EXPECT_TRUE(dx.isApprox(-0.5 * beta / 5.0, 1e-15));
}

TEST(WorstCase, ZeroBetaAndZeroComponents)
{
    EXPECT_EQ(worst_case_perturbation(Vector{{1.0, 1.0}}, 1.0, Vector::Zero(2), {NormKind::Linf, 1.0},
                                      Task::Regression),
              Vector::Zero(2));
    const Vector dx = worst_case_perturbation(Vector{{1.0, 1.0}}, 1.0, Vector{{0.0, 2.0}},
                                              {NormKind::Linf, 0.3}, Task::BinaryClassification);
    EXPECT_EQ(dx(0), 0.0);
}

TEST(WorstCase, AttainsClosedFormAndIsFeasible)
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 300; ++k) {
        const auto p = 1 + k % 6;
        const Vector x = oracle::gaussian_vec(p, rng), beta = oracle::gaussian_vec(p, rng);
        const double delta = oracle::uniform(rng, 0.0, 1.5);
        for (NormKind norm : {NormKind::Linf, NormKind::L2}) {
            const AttackSpec spec{norm, delta};
            const double y = oracle::gaussian_vec(1, rng)(0);
            const Vector dr = worst_case_perturbation(x, y, beta, spec, Task::Regression);
            EXPECT_LE(primal_norm(dr, norm), delta * (1 + 1e-12));
            const double closed_r = adversarial_loss_regression(x, y, beta, spec);
            EXPECT_NEAR(std::pow(y - (x + dr).dot(beta), 2), closed_r, 1e-12 * closed_r);

            const double lbl = y < 0 ? -1.0 : 1.0;
            const Vector dc = worst_case_perturbation(x, lbl, beta, spec, Task::BinaryClassification);
            EXPECT_LE(primal_norm(dc, norm), delta * (1 + 1e-12));
            const double closed_c = adversarial_loss_classification(x, lbl, beta, spec);
            EXPECT_NEAR(logistic_loss(lbl * (x + dc).dot(beta)), closed_c, 1e-12 * closed_c);
        }
    }
}

TEST(DefaultDelta, SingleEntryIsOne)
{
    const Matrix X = Matrix::Ones(1, 1);
    EXPECT_EQ(default_delta(X, NormKind::Linf), 1.0);
    EXPECT_EQ(default_delta(X, NormKind::L2, 50, 95.0, 3), 1.0);
}

TEST(DefaultDelta, HomogeneousAndDeterministic)
{
    std::mt19937_64 rng(2);
    const Matrix X = oracle::gaussian(40, 6, rng);
    const double d = default_delta(X, NormKind::Linf, 300, 95.0, 9);
    EXPECT_EQ(d, default_delta(X, NormKind::Linf, 300, 95.0, 9));
    EXPECT_NEAR(default_delta(3.5 * X, NormKind::Linf, 300, 95.0, 9), 3.5 * d, 1e-14 * d);
    EXPECT_NEAR(default_delta(0.2 * X, NormKind::L2, 300, 95.0, 9), 0.2 * default_delta(X, NormKind::L2, 300, 95.0, 9),
                1e-14 * d);
}

TEST(DefaultDelta, MatchesIndependentSimulation)
{
    const Matrix X = Matrix::Identity(200, 200);
    const double d = default_delta(X, NormKind::Linf, 2000, 95.0, 1);
    // Independent re-simulation: max|e| / ‖e‖_1 with a different generator.
    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    std::vector<double> r;
    for (int k = 0; k < 2000; ++k) {
        Vector e(200);
        for (auto& v : e) v = nd(rng);
        r.push_back(e.lpNorm<Eigen::Infinity>() / e.lpNorm<1>());
    }
    std::sort(r.begin(), r.end());
    const double ref = r[static_cast<std::size_t>(std::ceil(0.95 * 2000)) - 1];
    EXPECT_NEAR(d, ref, 0.05 * ref);
}

TEST(DefaultDelta, RejectsBadArguments)
{
    EXPECT_THROW(default_delta(Matrix::Ones(2, 2), NormKind::Linf, 0), std::invalid_argument);
    EXPECT_THROW(default_delta(Matrix::Ones(2, 2), NormKind::Linf, 10, 0.0), std::invalid_argument);
}

TEST(ZeroThreshold, Examples)
{
    EXPECT_EQ(zero_solution_threshold(Dataset(Matrix::Ones(1, 1), Vector::Ones(1), Task::Regression),
                                      NormKind::Linf),
              1.0);
    EXPECT_EQ(zero_solution_threshold(Dataset(Matrix::Ones(2, 1), Vector{{1.0, -1.0}}, Task::Regression),
                                      NormKind::Linf),
              0.0);
    EXPECT_EQ(zero_solution_threshold(Dataset(Matrix::Ones(2, 1), Vector::Zero(2), Task::Regression),
                                      NormKind::L2),
              0.0);
}

TEST(ZeroThreshold, SolverConsequence)
{
    std::mt19937_64 rng(4);
    for (int k = 0; k < 5; ++k) {
        const Dataset d(oracle::gaussian(15, 4, rng), oracle::gaussian_vec(15, rng), Task::Regression);
        for (NormKind norm : {NormKind::Linf, NormKind::L2}) {
            const double thr = zero_solution_threshold(d, norm);
            EXPECT_LE(solve_irrr(d, 1.01 * thr, norm, {}).beta.lpNorm<Eigen::Infinity>(), 1e-6);
            EXPECT_GT(solve_irrr(d, 0.9 * thr, norm, {}).beta.lpNorm<Eigen::Infinity>(), 1e-4);
        }
    }
}
