#include "advlin/core.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace advlin {

std::string to_string(Task task)
{
    return task == Task::Regression ? "regression" : "classification";
}

std::string to_string(NormKind norm)
{
    return norm == NormKind::L2 ? "l2" : "linf";
}

NormKind parse_norm(const std::string& name)
{
    if (name == "l2" || name == "L2") return NormKind::L2;
    if (name == "linf" || name == "Linf" || name == "inf") return NormKind::Linf;
    throw std::invalid_argument("unknown norm '" + name + "' (expected l2 or linf)");
}

double primal_norm(const Vector& v, NormKind norm)
{
    if (v.size() == 0) return 0.0;
    return norm == NormKind::L2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

double dual_norm(const Vector& v, NormKind norm)
{
    if (v.size() == 0) return 0.0;
    return norm == NormKind::L2 ? v.norm() : v.lpNorm<1>();
}

Dataset::Dataset(Matrix X, Vector y, Task task)
    : X_(std::move(X)), y_(std::move(y)), task_(task)
{
    if (X_.rows() < 1 || X_.cols() < 1)
        throw DataError("dataset must have at least one sample and one feature");
    if (y_.size() != X_.rows()) {
        std::ostringstream msg;
        msg << "target length " << y_.size() << " does not match " << X_.rows() << " rows";
        throw DataError(msg.str());
    }
    if (!X_.allFinite() || !y_.allFinite())
        throw DataError("dataset contains NaN or infinite entries");
    if (task_ == Task::BinaryClassification) {
        for (Eigen::Index i = 0; i < y_.size(); ++i) {
            if (y_[i] != 1.0 && y_[i] != -1.0) {
                std::ostringstream msg;
                msg << "classification label " << y_[i] << " at row " << i << " is not -1 or +1";
                throw DataError(msg.str());
            }
        }
    }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const
{
    Matrix Xs(static_cast<Eigen::Index>(rows.size()), X_.cols());
    Vector ys(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        Xs.row(static_cast<Eigen::Index>(k)) = X_.row(rows[k]);
        ys[static_cast<Eigen::Index>(k)] = y_[rows[k]];
    }
    return Dataset(std::move(Xs), std::move(ys), task_);
}

void SolveOptions::validate() const
{
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (power_iters < 1) throw std::invalid_argument("power_iters must be at least 1");
    if (step_size && !(*step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
}

Vector seeded_unit_vector(Eigen::Index dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector v(dim);
    for (Eigen::Index j = 0; j < dim; ++j) v[j] = normal(rng);
    const double len = v.norm();
    if (len == 0.0) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / len;
}

double empirical_second_moment_lambda_max(const Dataset& data, int iters, std::uint64_t seed)
{
    if (iters < 1) throw std::invalid_argument("power method needs at least one iteration");
    const Matrix& X = data.X();
    const double inv_n = 1.0 / static_cast<double>(data.n());
    Vector v = seeded_unit_vector(data.p(), seed);
    for (int k = 0; k < iters; ++k) {
        const Vector w = inv_n * (X.transpose() * (X * v));
        const double len = w.norm();
        if (len == 0.0) return 0.0;
        v = w / len;
    }
    // Rayleigh quotient at the final direction.
    return inv_n * (X * v).squaredNorm();
}

std::string format_double(double value)
{
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

} // namespace advlin
