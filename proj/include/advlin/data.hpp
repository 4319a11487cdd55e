#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "advlin/core.hpp"

namespace advlin {

enum class SynthFamily { Isotropic, SpikedCovariance, SparseVector };

std::string to_string(SynthFamily family);
SynthFamily parse_synth_family(const std::string& name);

/// Gaussian synthetic regression designs. `latent_dim` is used by the spiked
/// model only and `sparsity` by the sparse one.
struct SynthSpec {
    SynthFamily family = SynthFamily::Isotropic;
    Eigen::Index n = 100;
    Eigen::Index p = 10;
    double noise_sd = 1.0;
    Eigen::Index latent_dim = 1;
    Eigen::Index sparsity = 1;
    double feature_scale = 1.0;
    std::uint64_t seed = 0;
    /// Classification labels are sign(x^T beta + noise), with 0 mapped to +1.
    Task task = Task::Regression;

    void validate() const;
};

struct SynthData {
    Dataset data;
    /// Coefficients generating y. For the spiked model this is the population
    /// least-squares direction W (W^T W)^{-1} theta, reference only.
    Vector true_beta;
    /// Loadings W (p x d) of the spiked model; empty otherwise.
    Matrix loadings;
};

SynthData generate(const SynthSpec& spec);

/// p x d matrix with orthogonal columns and W^T W = (p / d) I.
Matrix spiked_loadings(Eigen::Index p, Eigen::Index d, std::uint64_t seed);

/// Column selector for load_csv: a header name, or an index (negative counts from the end).
using TargetColumn = std::variant<std::string, long>;

/// Reads a comma-separated numeric table. Cells are trimmed of whitespace; for
/// classification, labels {0, 1} become {-1, +1}. Throws DataError naming the
/// file and line on unreadable files, ragged rows, non-numeric cells and bad labels.
Dataset load_csv(const std::string& path, bool has_header, const TargetColumn& target, Task task);

/// Writes X and y (as the last column) with an optional header x0..x{p-1},y.
void write_csv(const std::string& path, const Dataset& data, bool header = true);

struct Standardization {
    Vector means;
    Vector scales;
    double target_mean = 0.0;
    double target_scale = 1.0;

    Matrix apply(const Matrix& X) const;
    Matrix invert(const Matrix& Xs) const;
};

struct Standardized {
    Dataset data;
    Standardization transform;
};

/// Centers each column and divides by its sample standard deviation (scale 1 for
/// constant columns). With `include_target`, regression targets get the same treatment.
Standardized standardize(const Dataset& data, bool include_target = false);

struct SplitIndices {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

/// Seeded shuffle; the first ceil((1 - test_fraction) n) indices train.
SplitIndices split_indices(Eigen::Index n, double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

} // namespace advlin
