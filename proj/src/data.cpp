#include "advlin/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace advlin {

std::string to_string(SynthFamily family)
{
    switch (family) {
    case SynthFamily::Isotropic: return "isotropic";
    case SynthFamily::SpikedCovariance: return "spiked";
    case SynthFamily::SparseVector: return "sparse";
    }
    return "unknown";
}

SynthFamily parse_synth_family(const std::string& name)
{
    if (name == "isotropic") return SynthFamily::Isotropic;
    if (name == "spiked" || name == "spiked-covariance") return SynthFamily::SpikedCovariance;
    if (name == "sparse") return SynthFamily::SparseVector;
    throw std::invalid_argument("unknown synthetic family '" + name + "' (expected isotropic, spiked or sparse)");
}

void SynthSpec::validate() const
{
    if (n < 1 || p < 1) throw std::invalid_argument("synth: n and p must be positive");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw std::invalid_argument("synth: noise_sd must be >= 0");
    if (!(feature_scale > 0.0) || !std::isfinite(feature_scale))
        throw std::invalid_argument("synth: feature_scale must be > 0");
    if (family == SynthFamily::SpikedCovariance && (latent_dim < 1 || latent_dim > p))
        throw std::invalid_argument("synth: latent_dim must lie in [1, p]");
    if (family == SynthFamily::SparseVector && (sparsity < 1 || sparsity > p))
        throw std::invalid_argument("synth: sparsity must lie in [1, p]");
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, sd);
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
    return M;
}

Vector gaussian_vector(Eigen::Index size, double sd, std::mt19937_64& rng)
{
    return gaussian_matrix(size, 1, sd, rng).col(0);
}

Vector labels_from(const Vector& score)
{
    return score.unaryExpr([](double s) { return s < 0.0 ? -1.0 : 1.0; });
}

Matrix orthonormal_columns(const Matrix& G)
{
    const Eigen::HouseholderQR<Matrix> qr(G);
    return qr.householderQ() * Matrix::Identity(G.rows(), G.cols());
}

} // namespace

Matrix spiked_loadings(Eigen::Index p, Eigen::Index d, std::uint64_t seed)
{
    if (d < 1 || d > p) throw std::invalid_argument("spiked_loadings: need 1 <= d <= p");
    std::mt19937_64 rng(seed);
    return orthonormal_columns(gaussian_matrix(p, d, 1.0, rng)) * std::sqrt(double(p) / double(d));
}

SynthData generate(const SynthSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const Eigen::Index n = spec.n, p = spec.p;

    Matrix X;
    Vector signal;
    Vector beta;
    Matrix W;
    switch (spec.family) {
    case SynthFamily::Isotropic:
        X = gaussian_matrix(n, p, spec.feature_scale, rng);
        beta = gaussian_vector(p, 1.0 / std::sqrt(double(p)), rng);
        signal = X * beta;
        break;
    case SynthFamily::SparseVector: {
        X = gaussian_matrix(n, p, spec.feature_scale, rng);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        beta = Vector::Zero(p);
        const Vector values = gaussian_vector(spec.sparsity, 1.0 / std::sqrt(double(spec.sparsity)), rng);
        for (Eigen::Index k = 0; k < spec.sparsity; ++k) beta(order[static_cast<std::size_t>(k)]) = values(k);
        signal = X * beta;
        break;
    }
    case SynthFamily::SpikedCovariance: {
        const Eigen::Index d = spec.latent_dim;
        W = orthonormal_columns(gaussian_matrix(p, d, 1.0, rng)) * std::sqrt(double(p) / double(d));
        const Vector theta = gaussian_vector(d, 1.0 / std::sqrt(double(d)), rng);
        const Matrix Z = gaussian_matrix(n, d, 1.0, rng);
        X = Z * W.transpose() + gaussian_matrix(n, p, 1.0, rng);
        beta = W * (W.transpose() * W).ldlt().solve(theta);
        signal = Z * theta;
        break;
    }
    }

    const Vector noise = gaussian_vector(n, 1.0, rng) * spec.noise_sd;
    Vector y = signal + noise;
    if (spec.task == Task::BinaryClassification) y = labels_from(y);
    return SynthData{Dataset(std::move(X), std::move(y), spec.task), std::move(beta), std::move(W)};
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string where(const std::string& path, std::size_t line)
{
    return path + ":" + std::to_string(line);
}

double parse_cell(std::string_view cell, const std::string& path, std::size_t line, std::size_t column)
{
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << where(path, line) << ": non-numeric cell '" << cell << "' in column " << column + 1;
        throw DataError(msg.str());
    }
    return value;
}

} // namespace

Dataset load_csv(const std::string& path, bool has_header, const TargetColumn& target, Task task)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path + "'");

    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> row_lines;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (header_pending) {
            for (auto f : fields) header.emplace_back(f);
            width = fields.size();
            header_pending = false;
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << where(path, line_no) << ": ragged row with " << fields.size() << " fields (expected " << width
                << ")";
            throw DataError(msg.str());
        }
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) row[j] = parse_cell(fields[j], path, line_no, j);
        rows.push_back(std::move(row));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw DataError("data file '" + path + "' has no data rows");
    if (width < 2) throw DataError("data file '" + path + "' needs at least one feature and one target column");

    std::size_t tcol = 0;
    if (const auto* name = std::get_if<std::string>(&target)) {
        const auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw DataError("target column '" + *name + "' not found in header of '" + path + "'");
        tcol = static_cast<std::size_t>(it - header.begin());
    } else {
        const long idx = std::get<long>(target);
        const long w = static_cast<long>(width);
        const long resolved = idx < 0 ? w + idx : idx;
        if (resolved < 0 || resolved >= w)
            throw DataError("target column index " + std::to_string(idx) + " out of range for '" + path + "'");
        tcol = static_cast<std::size_t>(resolved);
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(width - 1);
    Matrix X(n, p);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == tcol) continue;
            X(i, j++) = row[c];
        }
        double label = row[tcol];
        if (task == Task::BinaryClassification) {
            if (label == 0.0) {
                label = -1.0;
            } else if (label != 1.0 && label != -1.0) {
                std::ostringstream msg;
                msg << where(path, row_lines[static_cast<std::size_t>(i)]) << ": bad class label " << label
                    << " (expected 0/1 or -1/+1)";
                throw DataError(msg.str());
            }
        }
        y(i) = label;
    }
    return Dataset(std::move(X), std::move(y), task);
}

void write_csv(const std::string& path, const Dataset& data, bool header)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    if (header) {
        for (Eigen::Index j = 0; j < data.p(); ++j) out << 'x' << j << ',';
        out << "y\n";
    }
    out.precision(17);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.p(); ++j) out << data.X()(i, j) << ',';
        out << data.y()(i) << '\n';
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

Matrix Standardization::apply(const Matrix& X) const
{
    if (X.cols() != means.size()) throw std::invalid_argument("standardization: column count mismatch");
    return (X.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Matrix Standardization::invert(const Matrix& Xs) const
{
    if (Xs.cols() != means.size()) throw std::invalid_argument("standardization: column count mismatch");
    return (Xs.array().rowwise() * scales.transpose().array()).matrix().rowwise() + means.transpose();
}

namespace {

// Sample standard deviation; 1 when undefined or zero.
double column_scale(const Vector& centered)
{
    if (centered.size() < 2) return 1.0;
    const double sd = std::sqrt(centered.squaredNorm() / double(centered.size() - 1));
    return sd > 0.0 ? sd : 1.0;
}

} // namespace

Standardized standardize(const Dataset& data, bool include_target)
{
    Standardization t;
    t.means = data.X().colwise().mean().transpose();
    t.scales.resize(data.p());
    for (Eigen::Index j = 0; j < data.p(); ++j)
        t.scales(j) = column_scale(data.X().col(j).array() - t.means(j));

    Vector y = data.y();
    if (include_target && data.task() == Task::Regression) {
        t.target_mean = y.mean();
        t.target_scale = column_scale(y.array() - t.target_mean);
        y = (y.array() - t.target_mean) / t.target_scale;
    }
    return Standardized{Dataset(t.apply(data.X()), std::move(y), data.task()), std::move(t)};
}

SplitIndices split_indices(Eigen::Index n, double test_fraction, std::uint64_t seed)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test fraction must lie in (0, 1)");
    const auto n_train = static_cast<Eigen::Index>(std::ceil((1.0 - test_fraction) * double(n) - 1e-9));
    if (n_train < 1 || n_train >= n)
        throw std::invalid_argument("split: fraction leaves an empty train or test part for n = " + std::to_string(n));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.test.assign(order.begin() + n_train, order.end());
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed)
{
    const SplitIndices idx = split_indices(data.n(), test_fraction, seed);
    return {data.subset(idx.train), data.subset(idx.test)};
}

} // namespace advlin
