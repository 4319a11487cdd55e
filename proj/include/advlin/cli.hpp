#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "advlin/classify.hpp"
#include "advlin/core.hpp"

namespace advlin {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

/// Entry point behind the `advlin` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

/// Classification instance used by the convergence benchmark: Gaussian features whose
/// column standard deviations are log-spaced over `log10_scale_span` decades, labels
/// sign(x^T beta + noise), and a fixed radius.
struct ConvergencePreset {
    Eigen::Index n = 200;
    Eigen::Index p = 50;
    double log10_scale_span = 0.75;
    double delta = 0.2;
    double label_noise = 1.0;
    NormKind norm = NormKind::Linf;
    std::uint64_t seed = 0;
    /// Initial step for the line-search methods, as a multiple of 1/L.
    double linesearch_step_factor = 1000.0;
};

Dataset make_convergence_dataset(const ConvergencePreset& preset);

struct ConvergenceRun {
    std::string solver;
    /// Iterations for the deterministic methods, epochs for sgd/saga/fgsm-sgd.
    std::vector<TracePoint> trace;
};

struct ConvergenceSuite {
    /// Best objective known: a long, tight accelerated run, lowered to any traced
    /// value below it so suboptimality is never negative.
    double reference = 0.0;
    std::vector<ConvergenceRun> runs;
};

/// Budgets: deterministic solvers `iterations` steps, stochastic ones `epochs` passes.
ConvergenceSuite run_convergence_suite(const ConvergencePreset& preset, const std::vector<std::string>& solvers,
                                       int iterations, int epochs);

/// First traced iteration whose suboptimality is <= level, or -1 if none.
int iterations_to_level(const ConvergenceRun& run, double reference, double level);

/// Suboptimality at trace iteration `iter` (or the last one recorded before it).
double suboptimality_at(const ConvergenceRun& run, double reference, int iter);

} // namespace advlin
