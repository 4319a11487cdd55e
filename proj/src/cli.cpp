#include "advlin/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advlin/attack.hpp"
#include "advlin/data.hpp"
#include "advlin/regress.hpp"

namespace advlin {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kRegressionSolvers = {"irrr", "icg"};
const std::vector<std::string> kClassificationSolvers = {"gd", "gd-ls", "agd", "sgd", "saga", "fgsm-gd", "fgsm-sgd"};

bool contains(const std::vector<std::string>& v, const std::string& s)
{
    return std::find(v.begin(), v.end(), s) != v.end();
}

Task parse_task(const std::string& s)
{
    if (s == "reg") return Task::Regression;
    if (s == "clf") return Task::BinaryClassification;
    throw UsageError("unknown task '" + s + "' (expected reg or clf)");
}

std::string task_flag(Task t) { return t == Task::Regression ? "reg" : "clf"; }

NormKind parse_norm_flag(const std::string& s)
{
    try {
        return parse_norm(s);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string norm_flag(NormKind n) { return n == NormKind::Linf ? "linf" : "l2"; }

TargetColumn parse_target(const std::string& s)
{
    try {
        std::size_t used = 0;
        const long idx = std::stol(s, &used);
        if (used == s.size()) return idx;
    } catch (const std::exception&) {
    }
    return s;
}

// "family=sparse,n=200,p=50,s=5,noise=1,d=2,scale=1,seed=0"
SynthSpec parse_synth_string(const std::string& text, Task task)
{
    SynthSpec spec;
    spec.task = task;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("synthetic spec entry '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            if (key == "family") spec.family = parse_synth_family(value);
            else if (key == "n") spec.n = std::stol(value);
            else if (key == "p") spec.p = std::stol(value);
            else if (key == "noise") spec.noise_sd = std::stod(value);
            else if (key == "d") spec.latent_dim = std::stol(value);
            else if (key == "s") spec.sparsity = std::stol(value);
            else if (key == "scale") spec.feature_scale = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else throw UsageError("unknown synthetic spec key '" + key + "'");
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            throw UsageError("bad value '" + value + "' for synthetic spec key '" + key + "'");
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return spec;
}

json synth_spec_json(const SynthSpec& s)
{
    return json{{"family", to_string(s.family)}, {"n", s.n},          {"p", s.p},
                {"noise_sd", s.noise_sd},        {"latent_dim", s.latent_dim}, {"sparsity", s.sparsity},
                {"feature_scale", s.feature_scale}, {"seed", s.seed}, {"task", task_flag(s.task)}};
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector json_vector(const json& j, const char* what)
{
    if (!j.is_array()) throw DataError(std::string("model file: '") + what + "' must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_trace(const fs::path& path, const std::vector<TracePoint>& trace)
{
    std::ostringstream out;
    out.precision(17);
    out << "iter,objective,seconds\n";
    for (const auto& t : trace) out << t.iter << ',' << t.objective << ',' << t.seconds << '\n';
    write_text(path, out.str());
}

// A fitted model in standardized units, plus what is needed to map raw inputs.
struct Model {
    Task task = Task::Regression;
    NormKind norm = NormKind::Linf;
    Vector beta;
    Standardization transform;
};

using Metrics = std::map<std::string, double>;

Metrics evaluate(const Model& m, const Dataset& raw, double delta_eval, NormKind norm)
{
    if (raw.p() != m.beta.size()) {
        std::ostringstream msg;
        msg << "dimension mismatch: model has " << m.beta.size() << " features, data has " << raw.p();
        throw DataError(msg.str());
    }
    if (raw.task() != m.task) throw DataError("data task does not match the model task");
    const Vector score = m.transform.apply(raw.X()) * m.beta;
    const double shift = delta_eval * dual_norm(m.beta, norm);

    Metrics out;
    const double n = double(raw.n());
    if (m.task == Task::Regression) {
        const double ts = m.transform.target_scale;
        const Vector residual = (raw.y().array() - (m.transform.target_mean + ts * score.array())).matrix();
        const double sse = residual.squaredNorm();
        const double adv_sse = (residual.array().abs() + ts * shift).square().sum();
        const double sst = (raw.y().array() - raw.y().mean()).square().sum();
        out["rmse"] = std::sqrt(sse / n);
        out["adversarial_rmse"] = std::sqrt(adv_sse / n);
        if (sst > 0.0) {
            out["r2"] = 1.0 - sse / sst;
            out["adversarial_r2"] = 1.0 - adv_sse / sst;
        }
    } else {
        const Vector margin = raw.y().cwiseProduct(score);
        double acc = 0.0, adv_acc = 0.0, loss = 0.0, adv_loss = 0.0;
        for (Eigen::Index i = 0; i < raw.n(); ++i) {
            acc += margin(i) > 0.0;
            adv_acc += margin(i) - shift > 0.0;
            loss += logistic_loss(margin(i));
            adv_loss += logistic_loss(margin(i) - shift);
        }
        out["accuracy"] = acc / n;
        out["adversarial_accuracy"] = adv_acc / n;
        out["loss"] = loss / n;
        out["adversarial_loss"] = adv_loss / n;
    }
    for (const auto& [name, value] : out)
        if (!std::isfinite(value)) throw NumericalError("metric '" + name + "' is not finite");
    return out;
}

FitResult fit_model(const std::string& solver, const Dataset& data, NormKind norm, double delta,
                    const SolveOptions& opts)
{
    if (data.task() == Task::Regression) {
        if (solver == "irrr") return solve_irrr(data, delta, norm, opts);
        return solve_icg(data, delta, norm, opts);
    }
    if (solver == "fgsm-gd" || solver == "fgsm-sgd")
        return solve_fgsm_baseline(data, {norm, delta}, opts, solver == "fgsm-sgd");
    const ConeSpec cone = make_cone(data, norm, delta);
    if (solver == "gd") return solve_pgd(data, cone, opts);
    if (solver == "gd-ls") return solve_pgd_linesearch(data, cone, opts);
    if (solver == "agd") return solve_apgd(data, cone, opts);
    if (solver == "sgd") return solve_sgd(data, cone, opts);
    return solve_saga(data, cone, opts);
}

json fit_json(const FitResult& fit)
{
    return json{{"solver", fit.solver},
                {"objective", fit.objective},
                {"iterations", fit.iterations},
                {"converged", fit.converged}};
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string task;
    std::string norm = "linf";
    std::string delta = "default";
    std::string solver;
    std::string data;
    std::string synth;
    std::string target = "-1";
    bool no_header = false;
    bool no_standardize = false;
    double tol = 1e-8;
    int max_iter = 1000;
    std::uint64_t seed = 0;
    std::optional<double> step_size;
    std::string out;
    bool trace = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out)
{
    Stopwatch clock;
    const Task task = parse_task(a.task);
    const NormKind norm = parse_norm_flag(a.norm);
    const std::string solver = a.solver.empty() ? (task == Task::Regression ? "irrr" : "agd") : a.solver;
    const auto& allowed = task == Task::Regression ? kRegressionSolvers : kClassificationSolvers;
    if (!contains(allowed, solver)) {
        if (contains(kRegressionSolvers, solver) || contains(kClassificationSolvers, solver))
            throw UsageError("solver '" + solver + "' does not apply to task '" + a.task + "'");
        throw UsageError("unknown solver '" + solver + "'");
    }
    if (solver.rfind("fgsm", 0) == 0 && norm != NormKind::Linf)
        throw UsageError("the fgsm solvers require --norm linf");
    if (a.data.empty() == a.synth.empty()) throw UsageError("give exactly one of --data and --synth");

    SolveOptions opts;
    opts.tol = a.tol;
    opts.max_iter = a.max_iter;
    opts.seed = a.seed;
    opts.step_size = a.step_size;
    try {
        opts.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::optional<SynthSpec> synth;
    const Dataset raw = [&] {
        if (!a.data.empty()) return load_csv(a.data, !a.no_header, parse_target(a.target), task);
        synth = parse_synth_string(a.synth, task);
        return generate(*synth).data;
    }();

    Model model;
    model.task = task;
    model.norm = norm;
    std::optional<Dataset> fitted;
    if (a.no_standardize) {
        model.transform.means = Vector::Zero(raw.p());
        model.transform.scales = Vector::Ones(raw.p());
        fitted.emplace(raw);
    } else {
        Standardized s = standardize(raw, true);
        model.transform = s.transform;
        fitted.emplace(std::move(s.data));
    }

    double delta = 0.0;
    if (a.delta == "default") {
        delta = default_delta(fitted->X(), norm, 1000, 95.0, a.seed);
    } else {
        try {
            std::size_t used = 0;
            delta = std::stod(a.delta, &used);
            if (used != a.delta.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw UsageError("--delta must be a number or 'default', got '" + a.delta + "'");
        }
        if (!(delta >= 0.0) || !std::isfinite(delta)) throw UsageError("--delta must be finite and >= 0");
    }

    const FitResult fit = fit_model(solver, *fitted, norm, delta, opts);
    model.beta = fit.beta;

    json config{{"task", task_flag(task)},
                {"norm", norm_flag(norm)},
                {"delta", delta},
                {"delta_rule", a.delta == "default" ? "default" : "fixed"},
                {"solver", solver},
                {"seed", a.seed},
                {"tol", a.tol},
                {"max_iter", a.max_iter},
                {"step_size", a.step_size ? json(*a.step_size) : json(nullptr)},
                {"standardize", !a.no_standardize},
                {"target_mean", model.transform.target_mean},
                {"target_scale", model.transform.target_scale}};
    if (synth) {
        config["synth"] = synth_spec_json(*synth);
    } else {
        config["data"] = a.data;
        config["target"] = a.target;
        config["header"] = !a.no_header;
    }
    json solver_config = json::object();
    for (const auto& [k, v] : fit.config) solver_config[k] = v;
    config["solver_config"] = solver_config;

    ensure_dir(a.out);
    const fs::path dir(a.out);
    json model_json{{"beta", vector_json(model.beta)},
                    {"means", vector_json(model.transform.means)},
                    {"scales", vector_json(model.transform.scales)},
                    {"config", config}};
    write_text(dir / "model.json", model_json.dump(2) + "\n");
    write_trace(dir / "trace.csv", fit.trace);

    const Metrics metrics = evaluate(model, raw, delta, norm);
    json report{{"command", "train"},
                {"config", config},
                {"fit", fit_json(fit)},
                {"metrics", metrics},
                {"wall_time_s", clock.seconds()}};
    write_text(dir / "report.json", report.dump(2) + "\n");

    if (a.trace) {
        out.precision(10);
        for (const auto& t : fit.trace) out << "iter " << t.iter << "  objective " << t.objective << '\n';
    }
    out << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string model;
    std::string data;
    std::string target = "-1";
    bool no_header = false;
    double delta_eval = 0.0;
    std::string norm;
    std::string out;
};

Model read_model(const std::string& path, json& config)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
        Model m;
        config = j.at("config");
        m.task = parse_task(config.at("task").get<std::string>());
        m.norm = parse_norm(config.at("norm").get<std::string>());
        m.beta = json_vector(j.at("beta"), "beta");
        m.transform.means = json_vector(j.at("means"), "means");
        m.transform.scales = json_vector(j.at("scales"), "scales");
        m.transform.target_mean = config.at("target_mean").get<double>();
        m.transform.target_scale = config.at("target_scale").get<double>();
        if (m.transform.means.size() != m.beta.size() || m.transform.scales.size() != m.beta.size())
            throw DataError("model file '" + path + "': beta, means and scales differ in length");
        return m;
    } catch (const json::exception& e) {
        throw DataError("model file '" + path + "' is malformed: " + e.what());
    } catch (const UsageError& e) {
        throw DataError("model file '" + path + "' is malformed: " + e.what());
    }
}

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    Stopwatch clock;
    if (!(a.delta_eval >= 0.0) || !std::isfinite(a.delta_eval)) throw UsageError("--delta-eval must be >= 0");
    json model_config;
    const Model model = read_model(a.model, model_config);
    const NormKind norm = a.norm.empty() ? model.norm : parse_norm_flag(a.norm);
    const Dataset raw = load_csv(a.data, !a.no_header, parse_target(a.target), model.task);
    const Metrics metrics = evaluate(model, raw, a.delta_eval, norm);

    json report{{"command", "eval"},
                {"config",
                 {{"model", a.model},
                  {"data", a.data},
                  {"target", a.target},
                  {"header", !a.no_header},
                  {"delta_eval", a.delta_eval},
                  {"norm", norm_flag(norm)},
                  {"model_config", model_config}}},
                {"metrics", metrics},
                {"wall_time_s", clock.seconds()}};
    if (!a.out.empty()) {
        ensure_dir(a.out);
        write_text(fs::path(a.out) / "report.json", report.dump(2) + "\n");
    }
    out << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- delta

struct DeltaArgs {
    std::string data;
    std::string target = "-1";
    bool no_header = false;
    std::string task = "reg";
    std::string norm = "linf";
    int samples = 1000;
    double percentile = 95.0;
    std::uint64_t seed = 0;
    bool no_standardize = false;
};

int cmd_delta(const DeltaArgs& a, std::ostream& out)
{
    const Task task = parse_task(a.task);
    const NormKind norm = parse_norm_flag(a.norm);
    if (a.samples < 1) throw UsageError("--samples must be >= 1");
    if (!(a.percentile > 0.0 && a.percentile < 100.0)) throw UsageError("--percentile must lie in (0, 100)");
    const Dataset raw = load_csv(a.data, !a.no_header, parse_target(a.target), task);
    const Dataset data = a.no_standardize ? raw : standardize(raw, true).data;
    json report{{"command", "delta"},
                {"norm", norm_flag(norm)},
                {"samples", a.samples},
                {"percentile", a.percentile},
                {"seed", a.seed},
                {"standardize", !a.no_standardize},
                {"delta", default_delta(data.X(), norm, a.samples, a.percentile, a.seed)}};
    if (task == Task::Regression) report["zero_solution_threshold"] = zero_solution_threshold(data, norm);
    out << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string family = "isotropic";
    long n = 100;
    long p = 10;
    double noise = 1.0;
    long latent_dim = 1;
    long sparsity = 1;
    double scale = 1.0;
    std::uint64_t seed = 0;
    std::string task = "reg";
    std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
    SynthSpec spec;
    try {
        spec.family = parse_synth_family(a.family);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    spec.n = a.n;
    spec.p = a.p;
    spec.noise_sd = a.noise;
    spec.latent_dim = a.latent_dim;
    spec.sparsity = a.sparsity;
    spec.feature_scale = a.scale;
    spec.seed = a.seed;
    spec.task = parse_task(a.task);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const SynthData s = generate(spec);
    ensure_dir(a.out);
    const fs::path dir(a.out);
    write_csv((dir / "data.csv").string(), s.data);
    const json truth{{"true_beta", vector_json(s.true_beta)}, {"spec", synth_spec_json(spec)}};
    write_text(dir / "truth.json", truth.dump(2) + "\n");
    out << "wrote " << (dir / "data.csv").string() << " (" << spec.n << " x " << spec.p << ") and "
        << (dir / "truth.json").string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string suite;
    std::vector<long> sizes;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> solvers;
    long n = 504;
    int repeats = 5;
    int iterations = 5000;
    int epochs = 100;
    int outer_iter = 10;
    std::string out;
};

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int bench_convergence(const BenchArgs& a, std::ostream& out)
{
    std::vector<std::string> solvers = a.solvers;
    if (solvers.empty()) solvers = {"gd", "gd-ls", "agd", "sgd", "saga", "fgsm-gd"};
    for (const auto& s : solvers)
        if (!contains(kClassificationSolvers, s)) throw UsageError("convergence suite: unknown solver '" + s + "'");
    const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector<std::uint64_t>{0} : a.seeds;

    ensure_dir(a.out);
    std::ostringstream csv;
    csv.precision(17);
    csv << "seed,solver,iter,objective,suboptimality,seconds\n";
    json summary = json::array();
    for (const auto seed : seeds) {
        ConvergencePreset preset;
        preset.seed = seed;
        const ConvergenceSuite suite = run_convergence_suite(preset, solvers, a.iterations, a.epochs);
        json entry{{"seed", seed}, {"reference", suite.reference}};
        for (const auto& run : suite.runs) {
            for (const auto& t : run.trace)
                csv << seed << ',' << run.solver << ',' << t.iter << ',' << t.objective << ','
                    << t.objective - suite.reference << ',' << t.seconds << '\n';
            entry["iterations_to_1e-6"][run.solver] = iterations_to_level(run, suite.reference, 1e-6);
        }
        summary.push_back(entry);
    }
    write_text(fs::path(a.out) / "suboptimality.csv", csv.str());
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int bench_timing(const BenchArgs& a, std::ostream& out)
{
    std::vector<std::string> solvers = a.solvers;
    if (solvers.empty()) solvers = kRegressionSolvers;
    for (const auto& s : solvers)
        if (!contains(kRegressionSolvers, s)) throw UsageError("timing suite: unknown solver '" + s + "'");
    const std::vector<long> sizes = a.sizes.empty() ? std::vector<long>{30, 100, 300, 1000} : a.sizes;
    if (a.repeats < 1) throw UsageError("--repeats must be >= 1");
    if (a.outer_iter < 1) throw UsageError("--outer-iter must be >= 1");
    const std::uint64_t seed = a.seeds.empty() ? 0 : a.seeds.front();

    ensure_dir(a.out);
    std::ostringstream csv;
    csv.precision(17);
    csv << "size,n,solver,seconds,repeats\n";
    for (const long p : sizes) {
        SynthSpec spec;
        spec.n = a.n;
        spec.p = p;
        spec.seed = seed;
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        const Dataset data = standardize(generate(spec).data, true).data;
        const double delta = default_delta(data.X(), NormKind::Linf, 200, 95.0, seed);
        SolveOptions opts;
        opts.max_iter = a.outer_iter;
        opts.tol = 1e-300;  // fixed outer budget
        opts.record_trace = false;
        for (const auto& solver : solvers) {
            std::vector<double> times;
            for (int r = 0; r < a.repeats; ++r) {
                Stopwatch clock;
                fit_model(solver, data, NormKind::Linf, delta, opts);
                times.push_back(clock.seconds());
            }
            const double t = median(times);
            csv << p << ',' << a.n << ',' << solver << ',' << t << ',' << a.repeats << '\n';
            out << "p=" << p << " n=" << a.n << " " << solver << " median " << t << " s\n";
        }
    }
    write_text(fs::path(a.out) / "timing.csv", csv.str());
    return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    if (a.suite == "convergence") return bench_convergence(a, out);
    if (a.suite == "timing") return bench_timing(a, out);
    throw UsageError("unknown suite '" + a.suite + "' (expected convergence or timing)");
}

} // namespace

// ---------------------------------------------------------------- convergence preset

Dataset make_convergence_dataset(const ConvergencePreset& preset)
{
    if (preset.n < 1 || preset.p < 1) throw std::invalid_argument("convergence preset: n and p must be positive");
    std::mt19937_64 rng(preset.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix X(preset.n, preset.p);
    for (Eigen::Index j = 0; j < preset.p; ++j) {
        const double frac = preset.p > 1 ? double(j) / double(preset.p - 1) : 0.0;
        const double sd = std::pow(10.0, preset.log10_scale_span * frac);
        for (Eigen::Index i = 0; i < preset.n; ++i) X(i, j) = sd * normal(rng);
    }
    Vector beta(preset.p);
    for (Eigen::Index j = 0; j < preset.p; ++j) beta(j) = normal(rng);
    Vector score = X * beta;
    score /= std::sqrt(score.squaredNorm() / double(preset.n));
    Vector y(preset.n);
    for (Eigen::Index i = 0; i < preset.n; ++i) y(i) = score(i) + preset.label_noise * normal(rng) < 0.0 ? -1.0 : 1.0;
    return Dataset(std::move(X), std::move(y), Task::BinaryClassification);
}

ConvergenceSuite run_convergence_suite(const ConvergencePreset& preset, const std::vector<std::string>& solvers,
                                       int iterations, int epochs)
{
    const Dataset data = make_convergence_dataset(preset);
    const ConeSpec cone = make_cone(data, preset.norm, preset.delta);
    const double L = risk_smoothness_bound(data, cone, SolveOptions{});

    SolveOptions base;
    base.tol = 1e-300;  // run the full budget
    base.seed = preset.seed;

    ConvergenceSuite suite;
    {
        SolveOptions ref = base;
        ref.max_iter = 20 * std::max(iterations, 1000);
        ref.tol = 1e-15;
        ref.record_trace = false;
        ref.step_size = preset.linesearch_step_factor / L;
        suite.reference = solve_apgd(data, cone, ref).objective;
    }

    for (const auto& name : solvers) {
        SolveOptions opts = base;
        const bool stochastic = name == "sgd" || name == "saga" || name == "fgsm-sgd";
        opts.max_iter = stochastic ? epochs : iterations;
        if (name == "gd-ls" || name == "agd") opts.step_size = preset.linesearch_step_factor / L;
        FitResult fit;
        if (name == "gd") fit = solve_pgd(data, cone, opts);
        else if (name == "gd-ls") fit = solve_pgd_linesearch(data, cone, opts);
        else if (name == "agd") fit = solve_apgd(data, cone, opts);
        else if (name == "sgd") fit = solve_sgd(data, cone, opts);
        else if (name == "saga") fit = solve_saga(data, cone, opts);
        else if (name == "fgsm-gd" || name == "fgsm-sgd")
            fit = solve_fgsm_baseline(data, {preset.norm, preset.delta}, opts, name == "fgsm-sgd");
        else throw std::invalid_argument("convergence suite: unknown solver '" + name + "'");
        for (const auto& t : fit.trace) suite.reference = std::min(suite.reference, t.objective);
        suite.runs.push_back({name, std::move(fit.trace)});
    }
    return suite;
}

int iterations_to_level(const ConvergenceRun& run, double reference, double level)
{
    for (const auto& t : run.trace)
        if (t.objective - reference <= level) return t.iter;
    return -1;
}

double suboptimality_at(const ConvergenceRun& run, double reference, int iter)
{
    if (run.trace.empty()) throw std::invalid_argument("suboptimality_at: empty trace");
    double value = run.trace.front().objective;
    for (const auto& t : run.trace) {
        if (t.iter > iter) break;
        value = t.objective;
    }
    return value - reference;
}

// ---------------------------------------------------------------- entry points

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Adversarially trained linear models: fit, evaluate, benchmark."};
    app.name("advlin");
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Fit a model and write model.json, trace.csv and report.json");
    t->add_option("--task", train.task, "reg or clf")->required();
    t->add_option("--norm", train.norm, "Perturbation norm: linf or l2")->capture_default_str();
    t->add_option("--delta", train.delta, "Adversarial radius, or 'default'")->capture_default_str();
    t->add_option("--solver", train.solver, "irrr, icg | gd, gd-ls, agd, sgd, saga, fgsm-gd, fgsm-sgd");
    t->add_option("--data", train.data, "CSV file");
    t->add_option("--synth", train.synth, "Synthetic spec, e.g. family=sparse,n=200,p=50,s=5");
    t->add_option("--target", train.target, "Target column name or index")->capture_default_str();
    t->add_flag("--no-header", train.no_header, "CSV has no header row");
    t->add_flag("--no-standardize", train.no_standardize, "Fit on raw features and targets");
    t->add_option("--tol", train.tol)->capture_default_str();
    t->add_option("--max-iter", train.max_iter)->capture_default_str();
    t->add_option("--seed", train.seed)->capture_default_str();
    t->add_option("--step-size", train.step_size, "Override the (initial) step size");
    t->add_option("--out", train.out, "Output directory")->required();
    t->add_flag("--trace", train.trace, "Print the objective trace");

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Clean and adversarial metrics of a trained model");
    e->add_option("--model", eval.model, "model.json")->required();
    e->add_option("--data", eval.data, "CSV file")->required();
    e->add_option("--target", eval.target)->capture_default_str();
    e->add_flag("--no-header", eval.no_header);
    e->add_option("--delta-eval", eval.delta_eval, "Attack radius (standardized feature units)")
        ->capture_default_str();
    e->add_option("--norm", eval.norm, "Attack norm (defaults to the training norm)");
    e->add_option("--out", eval.out, "Directory for report.json");

    DeltaArgs delta;
    auto* d = app.add_subcommand("delta", "Default adversarial radius of a design matrix");
    d->add_option("--data", delta.data, "CSV file")->required();
    d->add_option("--target", delta.target)->capture_default_str();
    d->add_flag("--no-header", delta.no_header);
    d->add_option("--task", delta.task)->capture_default_str();
    d->add_option("--norm", delta.norm)->capture_default_str();
    d->add_option("--samples", delta.samples)->capture_default_str();
    d->add_option("--percentile", delta.percentile)->capture_default_str();
    d->add_option("--seed", delta.seed)->capture_default_str();
    d->add_flag("--no-standardize", delta.no_standardize);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
    s->add_option("--family", synth.family, "isotropic, spiked or sparse")->capture_default_str();
    s->add_option("--n", synth.n)->capture_default_str();
    s->add_option("--p", synth.p)->capture_default_str();
    s->add_option("--noise", synth.noise)->capture_default_str();
    s->add_option("--latent-dim", synth.latent_dim)->capture_default_str();
    s->add_option("--sparsity", synth.sparsity)->capture_default_str();
    s->add_option("--scale", synth.scale)->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--task", synth.task)->capture_default_str();
    s->add_option("--out", synth.out, "Output directory")->required();

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Convergence or timing benchmark");
    b->add_option("--suite", bench.suite, "convergence or timing")->required();
    b->add_option("--sizes", bench.sizes, "Feature counts for the timing suite")->delimiter(',');
    b->add_option("--seeds", bench.seeds)->delimiter(',');
    b->add_option("--solvers", bench.solvers)->delimiter(',');
    b->add_option("--n", bench.n, "Samples for the timing suite")->capture_default_str();
    b->add_option("--repeats", bench.repeats, "Repetitions per timing cell")->capture_default_str();
    b->add_option("--iterations", bench.iterations)->capture_default_str();
    b->add_option("--epochs", bench.epochs)->capture_default_str();
    b->add_option("--outer-iter", bench.outer_iter)->capture_default_str();
    b->add_option("--out", bench.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*t) return cmd_train(train, out);
        if (*e) return cmd_eval(eval, out);
        if (*d) return cmd_delta(delta, out);
        if (*s) return cmd_synth(synth, out);
        return cmd_bench(bench, out);
    } catch (const UsageError& ex) {
        err << "usage error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const DataError& ex) {
        err << "data error: " << ex.what() << '\n';
        return kExitData;
    } catch (const NumericalError& ex) {
        err << "numerical failure: " << ex.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& ex) {
        err << "usage error: " << ex.what() << '\n';
        return kExitUsage;
    }
}

int run_cli(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace advlin
