#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <unistd.h>

#include "apsde/errors.hpp"
#include "apsde/experiment.hpp"
#include "apsde/table.hpp"

namespace {

using namespace apsde;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

std::string parse_error(std::string_view text, ExperimentKind kind) {
    try {
        parse_config(text, kind, "cfg.json");
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

const Artifact& artifact(const RunResult& r, const std::string& name) {
    for (const auto& a : r.artifacts) {
        if (a.name == name) {
            return a;
        }
    }
    throw std::runtime_error("missing artifact " + name);
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("apsde_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

    fs::path write(const std::string& name, const std::string& content) const {
        std::ofstream(path_ / name) << content;
        return path_ / name;
    }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + APSDE_CLI_PATH + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kOuFalsify = R"({
  "experiment": "ms-falsify",
  "seed": 3,
  "system": {"builtin": "ou", "alpha": 1, "sigma": 1},
  "parameters": {"tau": {"start": 1, "stop": 50, "count": 491}, "t": {"start": 0, "stop": 20, "count": 41}}
})";

TEST(Config, DefaultsAndOverrides) {
    const ExperimentConfig cfg = parse_config(kOuFalsify, ExperimentKind::MsFalsify);
    EXPECT_EQ(cfg.seed, 3u);
    EXPECT_EQ(cfg.system.kind, SystemConfig::Kind::Ou);
    EXPECT_EQ(cfg.ms_falsify.tau.count, 491u);
    EXPECT_DOUBLE_EQ(cfg.ms_falsify.tol, 1e-9);
    EXPECT_TRUE(cfg.write_csv);

    const ExperimentConfig d = default_config(ExperimentKind::LemmaCheck);
    EXPECT_EQ(d.lemma.times.size(), 30u);
    EXPECT_EQ(d.lemma.gap, 10u);
}

TEST(Config, ExperimentNamesRoundTrip) {
    for (auto k : {ExperimentKind::KernelTable, ExperimentKind::ApScan, ExperimentKind::MsFalsify,
                   ExperimentKind::LemmaCheck, ExperimentKind::DistApCheck, ExperimentKind::HypothesisCheck,
                   ExperimentKind::Moments}) {
        EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_experiment_kind("repro").has_value());
}

TEST(Config, UnknownKeyReportsLineAndField) {
    const std::string msg = parse_error(R"({
  "experiment": "ms-falsify",
  "system": {"builtin": "ou", "alpha": 1, "sigma": 1},
  "parameters": {
    "bogus": 3
  }
})",
                                        ExperimentKind::MsFalsify);
    EXPECT_NE(msg.find("cfg.json:5:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("parameters.bogus"), std::string::npos) << msg;
    EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
}

TEST(Config, UnknownTopLevelKey) {
    const std::string msg = parse_error("{\"experiment\": \"moments\",\n\"sed\": 1}", ExperimentKind::Moments);
    EXPECT_NE(msg.find("cfg.json:2: sed"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrorCarriesLineAndColumn) {
    const std::string msg = parse_error("{\n \"experiment\": \"ms-falsify\",\n \"seed\": 4,,\n}\n",
                                        ExperimentKind::MsFalsify);
    EXPECT_NE(msg.find("cfg.json:3:12"), std::string::npos) << msg;
    EXPECT_NE(msg.find("invalid JSON"), std::string::npos) << msg;
}

TEST(Config, TypeAndRangeErrors) {
    EXPECT_NE(parse_error(R"({"system": {"builtin": "ou", "alpha": -1}})", ExperimentKind::MsFalsify)
                  .find("system.alpha: must be positive"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"seed": "x"})", ExperimentKind::MsFalsify).find("seed"), std::string::npos);
    EXPECT_NE(parse_error(R"({"parameters": {"tau": {"start": 5, "stop": 1, "count": 3}}})",
                          ExperimentKind::MsFalsify)
                  .find("parameters.tau"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"parameters": {"times": [1, 3, 2]}})", ExperimentKind::LemmaCheck)
                  .find("parameters.times[2]"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"parameters": {"orders": [3]}})", ExperimentKind::Moments).find("orders"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"system": {"builtin": "ou", "custom": {}}})", ExperimentKind::MsFalsify)
                  .find("exactly one"),
              std::string::npos);
}

TEST(Config, ExperimentMismatch) {
    const std::string msg = parse_error(kOuFalsify, ExperimentKind::KernelTable);
    EXPECT_NE(msg.find("experiment"), std::string::npos) << msg;
}

TEST(Config, CustomSystemExpressions) {
    const ExperimentConfig cfg = parse_config(R"cfg({
  "system": {"custom": {"name": "ou_expr", "A": [["-1"]], "g": [["sqrt(2)"]], "Q": [[1]], "tail_tol": 1e-12}}
})cfg",
                                              ExperimentKind::KernelTable);
    EXPECT_EQ(cfg.system.kind, SystemConfig::Kind::Custom);
    const GaussianProcessSpec spec = build_spec(cfg.system);
    for (double tau : {0.0, 0.5, 2.0}) {
        EXPECT_NEAR(spec.kernel(1.0, 1.0 + tau)(0, 0), std::exp(-tau), 1e-8);
    }

    const std::string msg = parse_error(R"cfg({
  "system": {"custom": {"A": [["-1 + foo(t)"]], "g": [["1"]]}}
})cfg",
                                        ExperimentKind::KernelTable);
    EXPECT_NE(msg.find("cfg.json:2: system.custom.A[0][0]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("foo"), std::string::npos) << msg;

    EXPECT_NE(parse_error(R"({"system": {"custom": {"A": [["-1", "0"]], "g": [["1"]]}}})",
                          ExperimentKind::KernelTable)
                  .find("square"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"system": {"custom": {"A": [["-1"]], "g": [["1"]], "extra": 1}}})",
                          ExperimentKind::KernelTable)
                  .find("system.custom.extra"),
              std::string::npos);
}

TEST(Config, ShippedConfigsParse) {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(APSDE_CONFIG_DIR)) {
        const std::string text = slurp(entry.path());
        const std::string name = Json::parse(text)["experiment"].get<std::string>();
        const auto kind = parse_experiment_kind(name);
        ASSERT_TRUE(kind.has_value()) << entry.path();
        EXPECT_NO_THROW(parse_config(text, *kind, entry.path().string())) << entry.path();
        ++count;
    }
    EXPECT_EQ(count, 7u);
}

TEST(Experiment, OuFalsificationMatchesClosedForm) {
    const RunResult r = run_experiment(parse_config(kOuFalsify, ExperimentKind::MsFalsify));
    EXPECT_EQ(r.exit_code, exit_code::kSuccess);
    EXPECT_NEAR(r.report["result"]["c"].get<double>(), 2.0 * (1.0 - std::exp(-1.0)), 1e-9);
    EXPECT_EQ(r.report["verdict"], "not mean-square almost periodic on tested range");
    EXPECT_EQ(r.report["reproduction"]["seed"], 3);
    EXPECT_EQ(r.report["reproduction"]["config"]["experiment"], "ms-falsify");
    EXPECT_EQ(r.artifacts.back().name, "report.json");
    const Table t = parse_csv(artifact(r, "l2_increment.csv").content);
    EXPECT_EQ(t.rows.size(), 491u);
    EXPECT_EQ(to_csv(t), artifact(r, "l2_increment.csv").content);
}

TEST(Experiment, ZeroLagIsInconclusive) {
    const RunResult r = run_experiment(parse_config(
        R"({"parameters": {"tau": {"start": 0, "stop": 1, "count": 3}}})", ExperimentKind::MsFalsify));
    EXPECT_EQ(r.exit_code, exit_code::kInconclusive);
}

TEST(Experiment, LemmaOutcomes) {
    ExperimentConfig ok = default_config(ExperimentKind::LemmaCheck);
    ok.lemma.n_mc = 20'000;
    EXPECT_EQ(run_experiment(ok).exit_code, exit_code::kSuccess);

    ExperimentConfig bad = ok;
    bad.lemma.var_margin = 1.0;  // Var|X| of OU is 1 - 2/pi
    const RunResult r = run_experiment(bad);
    EXPECT_EQ(r.exit_code, exit_code::kHypothesisViolation);
    EXPECT_EQ(r.report["verdict"], "hypotheses-failed");
}

TEST(Experiment, HypothesisAudit) {
    ExperimentConfig per = default_config(ExperimentKind::HypothesisCheck);
    per.system.kind = SystemConfig::Kind::PeriodicExample;
    const RunResult rp = run_experiment(per);
    EXPECT_EQ(rp.exit_code, exit_code::kHypothesisViolation);
    EXPECT_NEAR(rp.report["result"]["dissipativity"]["beta"].get<double>(), 0.0, 1e-9);

    const RunResult ro = run_experiment(default_config(ExperimentKind::HypothesisCheck));
    EXPECT_EQ(ro.exit_code, exit_code::kSuccess);
}

TEST(Experiment, DistributionCheckFindsPeriod) {
    ExperimentConfig cfg = default_config(ExperimentKind::DistApCheck);
    cfg.system.kind = SystemConfig::Kind::PeriodicExample;
    cfg.dist_ap.taus = {kPi, 2 * kPi};
    const RunResult r = run_experiment(cfg);
    EXPECT_EQ(r.exit_code, exit_code::kSuccess);
    const Json& found = r.report["result"]["taus_found"];
    ASSERT_EQ(found.size(), 1u);
    EXPECT_DOUBLE_EQ(found[0].get<double>(), 2 * kPi);

    cfg.dist_ap.taus = {kPi};
    EXPECT_EQ(run_experiment(cfg).exit_code, exit_code::kInconclusive);
}

TEST(Experiment, KernelTableWithMonteCarlo) {
    ExperimentConfig cfg = default_config(ExperimentKind::KernelTable);
    cfg.kernel_table.n_mc = 20'000;
    const RunResult a = run_experiment(cfg, 5);
    const RunResult b = run_experiment(cfg, 5);
    EXPECT_EQ(a.exit_code, exit_code::kSuccess);
    ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
        EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content) << a.artifacts[i].name;
    }
    const Table t = parse_csv(artifact(a, "kernel_table.csv").content);
    EXPECT_EQ(t.rows.size(), 12u);
    EXPECT_EQ(to_csv(t), artifact(a, "kernel_table.csv").content);
}

TEST(Experiment, ApScanOnExpression) {
    ExperimentConfig cfg = default_config(ExperimentKind::ApScan);
    cfg.ap_scan.target = "expression";
    cfg.ap_scan.expression = "sin(t)";
    cfg.ap_scan.tau_max = 10.0;
    const RunResult r = run_experiment(cfg);
    EXPECT_EQ(r.exit_code, exit_code::kSuccess);
    EXPECT_FALSE(r.report["result"]["taus_found"].empty());
}

TEST(Experiment, MomentsBoundedForOu) {
    ExperimentConfig cfg = default_config(ExperimentKind::Moments);
    cfg.moments.n = 5'000;
    const RunResult r = run_experiment(cfg);
    EXPECT_EQ(r.exit_code, exit_code::kSuccess);
    EXPECT_TRUE(r.report["result"]["uniform_integrability"]["bounded"].get<bool>());
}

TEST(Experiment, WriteArtifactsLeavesNoTemporaries) {
    TempDir dir;
    const RunResult r = run_experiment(parse_config(kOuFalsify, ExperimentKind::MsFalsify));
    write_artifacts(r, dir.path() / "out");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "out")) {
        EXPECT_EQ(artifact(r, e.path().filename().string()).content, slurp(e.path()));
        ++files;
    }
    EXPECT_EQ(files, r.artifacts.size());
}

TEST(Repro, SeedsChangeEstimatesNotVerdicts) {
    const RunResult a = run_repro(7);
    const RunResult b = run_repro(8);
    EXPECT_EQ(a.exit_code, exit_code::kSuccess);
    EXPECT_EQ(a.report["checks"], b.report["checks"]);
    const Json& ra = a.report["ou_kernel"]["rows"];
    const Json& rb = b.report["ou_kernel"]["rows"];
    ASSERT_EQ(ra.size(), rb.size());
    bool any_differ = false;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double va = ra[i]["mc"]["value"].get<double>();
        const double vb = rb[i]["mc"]["value"].get<double>();
        const double se = std::hypot(ra[i]["mc"]["std_error"].get<double>(), rb[i]["mc"]["std_error"].get<double>());
        any_differ = any_differ || va != vb;
        EXPECT_LE(std::abs(va - vb), 4.0 * se) << "row " << i;
    }
    EXPECT_TRUE(any_differ);
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    const fs::path ok = dir.write("ok.json", kOuFalsify);
    const fs::path out = dir.path() / "out";
    EXPECT_EQ(run_cli("ms-falsify --config " + ok.string() + " --out " + out.string()), 0);
    const Json report = Json::parse(slurp(out / "report.json"));
    EXPECT_NEAR(report["result"]["c"].get<double>(), 1.26424, 1e-5);
    EXPECT_EQ(report["reproduction"]["seed"], 3);

    EXPECT_EQ(run_cli("ms-falsify --config " + ok.string() + " --seed 9 --out " + out.string()), 0);
    EXPECT_EQ(Json::parse(slurp(out / "report.json"))["reproduction"]["seed"], 9);

    const fs::path bad = dir.write("bad.json", "{\"experiment\": \"ms-falsify\",\n\"parameters\": {\"x\": 1}}");
    EXPECT_EQ(run_cli("ms-falsify --config " + bad.string() + " --out " + out.string()), 1);
    EXPECT_EQ(run_cli("ms-falsify --config " + (dir.path() / "missing.json").string()), 1);
    EXPECT_EQ(run_cli("no-such-command"), 1);

    const fs::path zero =
        dir.write("zero.json", R"({"parameters": {"tau": {"start": 0, "stop": 1, "count": 3}}})");
    EXPECT_EQ(run_cli("ms-falsify --config " + zero.string() + " --out " + out.string()), 2);

    const fs::path per = dir.write("per.json", R"({"system": {"builtin": "periodic_example"}})");
    EXPECT_EQ(run_cli("hypothesis-check --config " + per.string() + " --out " + out.string()), 3);
}

TEST(Cli, OutputDirectoryPrecedence) {
    TempDir dir;
    const fs::path cfg = dir.write("c.json", kOuFalsify);
    const fs::path env_dir = dir.path() / "from_env";
    EXPECT_EQ(run_cli("ms-falsify --config " + cfg.string(), "APSDE_OUT_DIR=" + env_dir.string()), 0);
    EXPECT_TRUE(fs::exists(env_dir / "report.json"));
    EXPECT_TRUE(fs::exists(env_dir / "l2_increment.csv"));

    const fs::path with_out = dir.write(
        "o.json", "{\"output\": {\"dir\": \"" + (dir.path() / "from_config").string() + "\", \"formats\": [\"json\"]}}");
    EXPECT_EQ(run_cli("ms-falsify --config " + with_out.string(), "APSDE_OUT_DIR=" + env_dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir.path() / "from_config" / "report.json"));
    EXPECT_FALSE(fs::exists(dir.path() / "from_config" / "l2_increment.csv"));

    const fs::path flag_dir = dir.path() / "from_flag";
    EXPECT_EQ(run_cli("ms-falsify --config " + with_out.string() + " --out " + flag_dir.string()), 0);
    EXPECT_TRUE(fs::exists(flag_dir / "report.json"));
}

} // namespace
