#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace advlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed or inconsistent input data (bad CSV, wrong labels, shape mismatch).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver could not make progress (factorization failure, non-finite iterate,
/// line-search step underflow).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Task { Regression, BinaryClassification };

/// Norm bounding the input perturbation. Its dual is derived through
/// dual_norm(); L2 is self-dual and Linf pairs with L1.
enum class NormKind { L2, Linf };

std::string to_string(Task task);
std::string to_string(NormKind norm);
NormKind parse_norm(const std::string& name);

/// ‖v‖ in the perturbation norm itself (L2 or Linf).
double primal_norm(const Vector& v, NormKind norm);

/// ‖v‖_* : L1 for Linf perturbations, L2 for L2 perturbations.
double dual_norm(const Vector& v, NormKind norm);

/// Design matrix, targets and task kind. Immutable once built; the constructor
/// enforces n, p >= 1, finite entries and labels in {-1, +1} for classification.
class Dataset {
public:
    Dataset(Matrix X, Vector y, Task task);

    const Matrix& X() const { return X_; }
    const Vector& y() const { return y_; }
    Task task() const { return task_; }
    Eigen::Index n() const { return X_.rows(); }
    Eigen::Index p() const { return X_.cols(); }

    /// Rows selected by `rows`, in that order.
    Dataset subset(const std::vector<Eigen::Index>& rows) const;

private:
    Matrix X_;
    Vector y_;
    Task task_;
};

struct SolveOptions {
    int max_iter = 1000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::optional<double> step_size;
    bool record_trace = true;
    int power_iters = 10;

    /// Throws std::invalid_argument unless max_iter >= 1, tol > 0, power_iters >= 1.
    void validate() const;
};

struct TracePoint {
    int iter = 0;
    double objective = 0.0;
    double seconds = 0.0;
};

struct FitResult {
    std::string solver;
    Vector beta;
    double objective = 0.0;
    std::vector<TracePoint> trace;
    int iterations = 0;
    bool converged = false;
    /// Resolved solver settings (step sizes, schedules, inner budgets), as text.
    std::map<std::string, std::string> config;
};

/// Relative stopping rule shared by deterministic solvers:
/// |current - previous| <= tol * (1 + |current|).
inline bool relative_change_below(double previous, double current, double tol)
{
    return std::abs(current - previous) <= tol * (1.0 + std::abs(current));
}

/// Deterministic pseudo-random unit vector of length `dim` derived from `seed`.
Vector seeded_unit_vector(Eigen::Index dim, std::uint64_t seed);

/// Power-iteration estimate of lambda_max((1/n) X^T X). Only products with X and
/// X^T are formed; the p x p matrix never is.
double empirical_second_moment_lambda_max(const Dataset& data, int iters, std::uint64_t seed = 0);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string format_double(double value);

} // namespace advlin
