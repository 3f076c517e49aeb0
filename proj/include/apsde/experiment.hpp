#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "apsde/evolution.hpp"
#include "apsde/gp_core.hpp"
#include "apsde/sampler.hpp"

namespace apsde {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Process exit codes.
namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kError = 1;
inline constexpr int kInconclusive = 2;
inline constexpr int kHypothesisViolation = 3;
} // namespace exit_code

enum class ExperimentKind { KernelTable, ApScan, MsFalsify, LemmaCheck, DistApCheck, HypothesisCheck, Moments };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

struct SystemConfig {
    enum class Kind { Ou, PeriodicExample, Custom };
    Kind kind = Kind::Ou;
    double alpha = 1.0;
    double sigma = 1.0;
    std::string name = "custom";
    std::vector<std::vector<std::string>> drift;  // A(t) entries
    std::vector<std::vector<std::string>> noise;  // g(t) entries
    Eigen::MatrixXd noise_cov;                    // Q
    std::optional<double> period_hint;
    double step = 1e-2;       // propagator and quadrature step for custom kernels
    double tail_tol = 1e-10;  // truncation tolerance of the stochastic convolution
};

struct LinRange {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;
};

struct KernelTableParams {
    std::vector<double> t{0.0, 1.0, 5.0};
    std::vector<double> tau{0.0, 0.6931471805599453, 1.0, 5.0};
    std::size_t n_mc = 0;  // 0 disables the Monte Carlo column
};

struct ApScanParams {
    std::string target = "l2";  // "l2" or "expression"
    std::string expression;
    double epsilon = 0.1;
    double tau_min = 0.0;
    double tau_max = 20.0;
    double tau_step = 0.05;
    double t_start = 0.0;
    double t_window = 20.0;
    double t_step = 0.1;
    std::optional<double> max_inclusion;
};

struct MsFalsifyParams {
    LinRange tau{1.0, 50.0, 491};
    LinRange t{0.0, 20.0, 41};
    double tol = 1e-9;
};

struct LemmaParams {
    std::vector<double> times;  // defaults to 1..30
    std::vector<double> direction;
    std::size_t gap = 10;
    double cov_tol = 1e-4;
    double var_margin = 1e-3;
    std::size_t n_mc = 100'000;
    std::string mode = "closed_form";  // or "monte_carlo"
};

struct DistApParams {
    std::vector<double> offsets{0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> taus;  // explicit candidates; when empty the range below is scanned
    double tau_min = 0.5;
    double tau_max = 10.0;
    double tau_step = 0.05;
    double epsilon = 1e-10;
    double t_start = 0.0;
    double t_window = 6.283185307179586;
    double t_step = 0.05;
};

struct HypothesisParams {
    double horizon = 20.0;
    double step = 1e-2;
    LinRange dissipativity_grid{0.0, 6.283185307179586, 629};
    std::vector<double> variance_times{0.0, 1.0, 2.0, 3.0, 4.0};
};

struct MomentsParams {
    std::vector<double> times{0.0, 25.0, 50.0, 75.0, 100.0};
    std::vector<int> orders{2, 4};
    std::size_t n = 100'000;
    std::string sampler = "exact";  // "exact", "euler" or "marginal"
    double euler_step = 1e-3;
    double cap = 1e6;
};

/// Parsed and validated configuration of one experiment.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::KernelTable;
    SystemConfig system;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool write_csv = true;
    KernelTableParams kernel_table;
    ApScanParams ap_scan;
    MsFalsifyParams ms_falsify;
    LemmaParams lemma;
    DistApParams dist_ap;
    HypothesisParams hypothesis;
    MomentsParams moments;
    Json source;  // the configuration as read
};

/// Parses a JSON configuration for `kind`. Unknown keys, wrong types and
/// out-of-range values throw ParseError naming the line and the field path;
/// `origin` prefixes the message (usually the file name).
ExperimentConfig parse_config(std::string_view text, ExperimentKind kind,
                              std::string_view origin = "config");

/// Configuration with every field at its default.
ExperimentConfig default_config(ExperimentKind kind);

EvolutionSystem build_system(const SystemConfig& cfg);
GaussianProcessSpec build_spec(const SystemConfig& cfg);

struct Artifact {
    std::string name;     // file name relative to the output directory
    std::string content;
};

struct RunResult {
    int exit_code = exit_code::kSuccess;
    Json report;
    std::vector<Artifact> artifacts;  // report.json last
};

/// Runs one experiment in memory. `seed` overrides the config seed.
RunResult run_experiment(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed = std::nullopt);

/// Runs the full counterexample suite: kernel consistency for both examples,
/// variance resolution, mean-square falsification, the separation between
/// periodicity in distribution and mean-square almost periodicity, the
/// covariance criterion, propagator accuracy, the hypothesis audit, the
/// convolution cross-check and CI calibration. Output depends only on `seed`.
RunResult run_repro(std::uint64_t seed = kDefaultSeed);

/// Writes every artifact atomically under `dir`.
void write_artifacts(const RunResult& result, const std::filesystem::path& dir);

} // namespace apsde
