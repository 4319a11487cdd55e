#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "advlin/cli.hpp"
#include "advlin/data.hpp"
#include "oracles.hpp"

using namespace advlin;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        static int counter = 0;
        dir_ = fs::temp_directory_path() / ("advlin_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::vector<double> trace_objectives(const fs::path& csv)
{
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iter,objective,seconds");
    std::vector<double> out;
    while (std::getline(in, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    return out;
}

} // namespace

TEST_F(CliTest, TrainSyntheticSparseDefaultDelta)
{
    const CliRun r = cli({"train", "--task", "reg", "--norm", "linf", "--delta", "default", "--solver", "irrr",
                       "--synth", "family=sparse,n=200,p=50,s=5", "--out", path("m")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json model = read_json(dir_ / "m" / "model.json");
    EXPECT_EQ(model["beta"].size(), 50u);
    EXPECT_EQ(model["means"].size(), 50u);
    EXPECT_EQ(model["scales"].size(), 50u);
    EXPECT_EQ(model["config"]["delta_rule"], "default");
    EXPECT_GT(model["config"]["delta"].get<double>(), 0.0);
    const auto obj = trace_objectives(dir_ / "m" / "trace.csv");
    ASSERT_GE(obj.size(), 2u);
    for (std::size_t k = 1; k < obj.size(); ++k) EXPECT_LE(obj[k], obj[k - 1] * (1 + 1e-10) + 1e-12);
    EXPECT_TRUE(fs::exists(dir_ / "m" / "report.json"));
}

TEST_F(CliTest, ZeroDeltaRmseMatchesOls)
{
    SynthSpec s;
    s.n = 80;
    s.p = 4;
    s.seed = 3;
    const SynthData g = generate(s);
    write_csv(path("d.csv"), g.data);
    const CliRun r = cli({"train", "--task", "reg", "--delta", "0", "--data", path("d.csv"), "--out", path("m")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json report = read_json(dir_ / "m" / "report.json");

    // Normal equations with an intercept column (training standardizes, so the model is affine).
    Matrix A(80, 5);
    A << Matrix::Ones(80, 1), g.data.X();
    const Vector coef = (A.transpose() * A).ldlt().solve(A.transpose() * g.data.y());
    const double rmse = std::sqrt((g.data.y() - A * coef).squaredNorm() / 80.0);
    EXPECT_NEAR(report["metrics"]["rmse"].get<double>(), rmse, 1e-6);
}

TEST_F(CliTest, MissingFileNamesPath)
{
    const CliRun r = cli({"train", "--task", "reg", "--data", path("absent.csv"), "--out", path("m")});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(cli({"train", "--task", "clf", "--solver", "irrr", "--synth", "n=20,p=2", "--out", path("m")}).code, 2);
    EXPECT_EQ(cli({"train", "--task", "reg", "--solver", "saga", "--synth", "n=20,p=2", "--out", path("m")}).code, 2);
    EXPECT_EQ(cli({"train", "--task", "reg", "--bogus", "--out", path("m")}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"train", "--task", "clf", "--norm", "l2", "--solver", "fgsm-gd", "--synth", "n=20,p=2",
                   "--out", path("m")})
                  .code,
              2);
    EXPECT_EQ(cli({"train", "--task", "reg", "--delta", "abc", "--synth", "n=20,p=2", "--out", path("m")}).code, 2);
    EXPECT_EQ(cli({"synth", "--family", "spiked", "--latent-dim", "50", "--p", "3", "--out", path("s")}).code, 2);
}

TEST_F(CliTest, EvalAdversarialMetrics)
{
    ASSERT_EQ(cli({"synth", "--family", "isotropic", "--n", "60", "--p", "5", "--seed", "2", "--out", path("s")}).code, 0);
    const std::string data = (dir_ / "s" / "data.csv").string();
    ASSERT_EQ(cli({"train", "--task", "reg", "--delta", "0.05", "--data", data, "--out", path("m")}).code, 0);
    const std::string model = (dir_ / "m" / "model.json").string();

    auto metrics = [&](const std::string& d) {
        const CliRun r = cli({"eval", "--model", model, "--data", data, "--delta-eval", d});
        EXPECT_EQ(r.code, 0) << r.err;
        return json::parse(r.out)["metrics"];
    };
    const json zero = metrics("0");
    EXPECT_EQ(zero["r2"], zero["adversarial_r2"]);
    EXPECT_EQ(zero["rmse"], zero["adversarial_rmse"]);
    double prev = zero["adversarial_r2"].get<double>();
    for (const char* d : {"0.01", "0.1", "0.5", "2"}) {
        const double r2 = metrics(d)["adversarial_r2"].get<double>();
        EXPECT_LE(r2, prev);
        prev = r2;
    }

    ASSERT_EQ(cli({"synth", "--n", "30", "--p", "3", "--out", path("narrow")}).code, 0);
    const CliRun mismatch =
        cli({"eval", "--model", model, "--data", (dir_ / "narrow" / "data.csv").string(), "--delta-eval", "0.1"});
    EXPECT_EQ(mismatch.code, 3);
    EXPECT_NE(mismatch.err.find("dimension"), std::string::npos);
}

TEST_F(CliTest, ZeroModelIsAttackImmune)
{
    ASSERT_EQ(cli({"synth", "--n", "40", "--p", "3", "--seed", "1", "--out", path("s")}).code, 0);
    const std::string data = (dir_ / "s" / "data.csv").string();
    // A radius far above the zero-solution threshold gives beta = 0.
    ASSERT_EQ(cli({"train", "--task", "reg", "--delta", "100", "--data", data, "--out", path("m")}).code, 0);
    const std::string model = (dir_ / "m" / "model.json").string();
    const json a = json::parse(cli({"eval", "--model", model, "--data", data, "--delta-eval", "0.1"}).out)["metrics"];
    const json b = json::parse(cli({"eval", "--model", model, "--data", data, "--delta-eval", "5"}).out)["metrics"];
    EXPECT_EQ(a["adversarial_r2"], b["adversarial_r2"]);
    EXPECT_EQ(a["adversarial_rmse"], b["adversarial_rmse"]);
}

TEST_F(CliTest, ClassificationTrainAndEval)
{
    ASSERT_EQ(cli({"synth", "--task", "clf", "--n", "80", "--p", "4", "--out", path("s")}).code, 0);
    const std::string data = (dir_ / "s" / "data.csv").string();
    for (const char* solver : {"gd", "gd-ls", "agd", "sgd", "saga", "fgsm-gd", "fgsm-sgd"}) {
        const CliRun r = cli({"train", "--task", "clf", "--solver", solver, "--delta", "0.05", "--max-iter", "50",
                           "--data", data, "--out", path(std::string("m_") + solver)});
        ASSERT_EQ(r.code, 0) << solver << ": " << r.err;
    }
    const CliRun e = cli({"eval", "--model", (dir_ / "m_agd" / "model.json").string(), "--data", data,
                       "--delta-eval", "0"});
    ASSERT_EQ(e.code, 0) << e.err;
    const json m = json::parse(e.out)["metrics"];
    EXPECT_EQ(m["accuracy"], m["adversarial_accuracy"]);
    EXPECT_EQ(m["loss"], m["adversarial_loss"]);
    EXPECT_GT(m["accuracy"].get<double>(), 0.5);
}

TEST_F(CliTest, SynthDeterministicAndRoundTrips)
{
    ASSERT_EQ(cli({"synth", "--family", "spiked", "--n", "25", "--p", "6", "--latent-dim", "2", "--seed", "4",
                   "--out", path("a")})
                  .code,
              0);
    ASSERT_EQ(cli({"synth", "--family", "spiked", "--n", "25", "--p", "6", "--latent-dim", "2", "--seed", "4",
                   "--out", path("b")})
                  .code,
              0);
    EXPECT_EQ(slurp(dir_ / "a" / "data.csv"), slurp(dir_ / "b" / "data.csv"));
    const json truth = read_json(dir_ / "a" / "truth.json");
    EXPECT_EQ(truth["true_beta"].size(), 6u);
    EXPECT_EQ(truth["spec"]["family"], "spiked");
    const Dataset d = load_csv((dir_ / "a" / "data.csv").string(), true, -1L, Task::Regression);
    EXPECT_EQ(d.n(), 25);
    EXPECT_EQ(d.p(), 6);
}

TEST_F(CliTest, DeltaCommand)
{
    ASSERT_EQ(cli({"synth", "--n", "40", "--p", "3", "--out", path("s")}).code, 0);
    const CliRun r = cli({"delta", "--data", (dir_ / "s" / "data.csv").string(), "--samples", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_GT(j["delta"].get<double>(), 0.0);
    EXPECT_GT(j["zero_solution_threshold"].get<double>(), 0.0);
}

TEST_F(CliTest, ReplayReproducesObjective)
{
    ASSERT_EQ(cli({"synth", "--task", "clf", "--n", "60", "--p", "3", "--out", path("s")}).code, 0);
    const std::string data = (dir_ / "s" / "data.csv").string();
    for (const char* solver : {"saga", "agd"}) {
        const std::vector<std::string> args = {"train", "--task", "clf", "--solver", solver, "--seed", "5",
                                               "--max-iter", "20", "--data", data, "--out"};
        auto a = args, b = args;
        a.push_back(path("r1"));
        b.push_back(path("r2"));
        ASSERT_EQ(cli(a).code, 0);
        ASSERT_EQ(cli(b).code, 0);
        EXPECT_EQ(read_json(dir_ / "r1" / "model.json")["beta"], read_json(dir_ / "r2" / "model.json")["beta"]);
        EXPECT_EQ(read_json(dir_ / "r1" / "report.json")["fit"]["objective"],
                  read_json(dir_ / "r2" / "report.json")["fit"]["objective"]);
    }
}

TEST_F(CliTest, BenchSuites)
{
    const CliRun t = cli({"bench", "--suite", "timing", "--sizes", "5,10", "--n", "30", "--repeats", "2", "--outer-iter",
                       "3", "--out", path("t")});
    ASSERT_EQ(t.code, 0) << t.err;
    std::ifstream timing(dir_ / "t" / "timing.csv");
    std::string line;
    int rows = -1;
    while (std::getline(timing, line)) ++rows;
    EXPECT_EQ(rows, 2 * 2);

    const CliRun c = cli({"bench", "--suite", "convergence", "--solvers", "gd,agd,saga", "--iterations", "100",
                       "--epochs", "5", "--out", path("c")});
    ASSERT_EQ(c.code, 0) << c.err;
    std::ifstream sub(dir_ / "c" / "suboptimality.csv");
    std::getline(sub, line);
    EXPECT_EQ(line, "seed,solver,iter,objective,suboptimality,seconds");
    int count = 0;
    while (std::getline(sub, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int k = 0; k < 5; ++k) std::getline(ss, cell, ',');
        EXPECT_GE(std::stod(cell), 0.0);
        ++count;
    }
    EXPECT_GT(count, 0);
    EXPECT_EQ(cli({"bench", "--suite", "nope", "--out", path("x")}).code, 2);
}
