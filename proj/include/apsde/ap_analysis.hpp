#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "apsde/estimators.hpp"
#include "apsde/expr.hpp"
#include "apsde/gp_core.hpp"

namespace apsde {

/// A function of time into a metric space, known through the distance
/// d(f(s), f(t)) and observed on the uniform grid t0 + i h of [t0, t0 + window].
struct SampledFunction {
    std::string name;
    double t0 = 0.0;
    double window = 0.0;
    double h = 0.0;
    std::function<double(double, double)> distance;
};

/// |f(s) - f(t)| for a scalar expression.
SampledFunction expression_function(const TimeExpr& f, double t0, double window, double h);

/// t ↦ X_t into L²: d(X_s, X_t) = sqrt(E‖X_t - X_s‖²).
SampledFunction l2_function(const GaussianProcessSpec& spec, double t0, double window, double h);

struct Witness {
    double t = 0.0;
    double tau = 0.0;
    double distance = 0.0;
};

struct AlmostPeriodReport {
    std::string function;
    double epsilon = 0.0;
    std::vector<double> taus_found;
    double window_start = 0.0;
    double window_end = 0.0;
    double compare_end = 0.0;  // comparisons use grid t in [window_start, compare_end]
    double t_step = 0.0;
    double tau_min = 0.0;
    double tau_max = 0.0;
    double tau_step = 0.0;     // 0 for explicit candidate lists
    std::size_t refined = 0;   // taus added by local refinement
    double inclusion_length = std::numeric_limits<double>::infinity();  // largest gap
    double max_inclusion = 0.0;
    bool relatively_dense = false;
    std::vector<Witness> witnesses;  // worst t for each τ found
    std::vector<Witness> curve;      // sup distance and its argmax per scanned τ
};

/// sup over the comparison grid of d(f(t + τ), f(t)).
Witness sup_distance(const SampledFunction& f, double tau, double compare_end);

/// Scans τ = tau_min + k tau_step and keeps those with sup distance <= epsilon.
/// Interior local minima of the sup curve above epsilon are refined by
/// golden-section search and kept when they reach epsilon. Throws
/// WindowTooShortError if fewer than two grid points satisfy t + tau_max <= end.
/// `max_inclusion` defaults to half the scanned range.
AlmostPeriodReport scan_almost_periods(const SampledFunction& f, double epsilon, double tau_min,
                                       double tau_max, double tau_step,
                                       std::optional<double> max_inclusion = std::nullopt);

/// Same test on an explicit candidate list, without refinement.
AlmostPeriodReport scan_almost_periods(const SampledFunction& f, double epsilon,
                                       std::span<const double> candidates,
                                       std::optional<double> max_inclusion = std::nullopt);

/// Largest gap of `taus` in [a, b], boundary gaps included; +inf when no
/// τ lies in [a, b].
double inclusion_length(std::span<const double> taus, double a, double b);

/// True iff every closed subinterval of [a, b] with length L meets `taus`.
bool relatively_dense(std::span<const double> taus, double a, double b, double L);

struct LinGrid {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;

    double at(std::size_t i) const;
};

enum class FalsifyVerdict { NotMeanSquareAp, Inconclusive };
std::string to_string(FalsifyVerdict v);

struct MsFalsification {
    double c = 0.0;            // inf of E‖X_{t+τ} - X_t‖² on the grid
    double epsilon_bound = 0.0; // sqrt(c): no ε-almost period with ε < this in range
    double argmin_t = 0.0;
    double argmin_tau = 0.0;
    double tol = 0.0;
    LinGrid t_grid;
    LinGrid tau_grid;
    FalsifyVerdict verdict = FalsifyVerdict::Inconclusive;
};

/// Lower-bounds the L² increment over t ∈ t_grid and τ ∈ tau_grid. When the
/// infimum exceeds `tol` no ε-almost period with ε < sqrt(c) exists in the τ
/// range, so the L² map has no relatively dense set of small almost periods
/// there.
MsFalsification ms_ap_falsify(const GaussianProcessSpec& spec, const LinGrid& tau_grid,
                              const LinGrid& t_grid, double tol = 1e-9);

/// t_n strictly increasing, probe direction x*.
struct ProbeSequence {
    std::vector<double> times;
    Eigen::VectorXd direction;
};

struct LemmaOptions {
    std::size_t gap = 10;     // |n - m| >= gap counts as "far"
    double cov_tol = 1e-4;    // far covariances must stay below this
    double var_margin = 1e-3; // Var‖X_{t_m}‖ must stay above this
};

enum class LemmaVerdict { HypothesesSatisfied, HypothesesFailed, Undecided };
std::string to_string(LemmaVerdict v);

struct LemmaReport {
    Eigen::MatrixXd cov;                  // C_nm = Cov(⟨x*, X_{t_n}⟩, ⟨x*, X_{t_m}⟩)
    Eigen::MatrixXd cov_se;               // zero when closed form
    bool closed_form = true;
    double max_far_cov = 0.0;
    double max_far_cov_upper = 0.0;       // with 4 SE
    std::vector<McEstimate> norm_variance; // Var‖X_{t_m}‖
    std::vector<double> probe_variance;   // Var⟨x*, X_{t_m}⟩
    double min_norm_variance_lower = 0.0;
    double max_norm_variance_upper = 0.0;
    LemmaOptions options;
    LemmaVerdict verdict = LemmaVerdict::Undecided;
    std::string detail;
};

/// Closed-form covariance matrix; Var‖X_{t_m}‖ by Monte Carlo from the
/// Gaussian marginal at each t_m (n_mc draws, stream m·2⁴⁰ + i).
LemmaReport lemma_check(const GaussianProcessSpec& spec, const ProbeSequence& probe,
                        std::size_t n_mc, std::uint64_t seed, const LemmaOptions& options = {});

/// Everything by Monte Carlo over n_mc joint paths.
LemmaReport lemma_check(const ProcessSampler& sampler, const ProbeSequence& probe,
                        std::size_t n_mc, std::uint64_t seed, const LemmaOptions& options = {});

/// 2-Wasserstein distance between N(m1, c1) and N(m2, c2), evaluated as
/// sqrt(‖m1 - m2‖² + min_R ‖c1^{1/2} - c2^{1/2} R‖_F²) over orthogonal R,
/// which equals the trace formula and avoids cancellation when c1 ≈ c2.
/// Throws NonPsdError for non-PSD inputs.
double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& c2);

/// Finite-dimensional proxy for almost periodicity in distribution: the map
/// t ↦ law(X_{t+o_1}, ..., X_{t+o_k}) into Gaussians with W2, compared on
/// t ∈ [t_start, t_start + t_window] with spacing t_step. Requires 1 <= k <= 8
/// strictly increasing offsets.
AlmostPeriodReport distribution_ap_check(const GaussianProcessSpec& spec,
                                         std::span<const double> offsets,
                                         std::span<const double> tau_candidates, double epsilon,
                                         double t_start, double t_window, double t_step);

/// Range variant: scans τ on a grid with refinement.
AlmostPeriodReport distribution_ap_scan(const GaussianProcessSpec& spec,
                                        std::span<const double> offsets, double epsilon,
                                        double tau_min, double tau_max, double tau_step,
                                        double t_start, double t_window, double t_step);

} // namespace apsde
