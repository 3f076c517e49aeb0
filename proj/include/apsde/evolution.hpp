#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "apsde/expr.hpp"
#include "apsde/gp_core.hpp"

namespace apsde {

/// Data of the linear equation dX = A(t) X dt + g(t) dW, where W has
/// increment covariance Q (a Q-Brownian motion in R^m).
struct EvolutionSystem {
    std::string name;
    Eigen::Index dim_state = 1;
    Eigen::Index dim_noise = 1;
    std::function<Eigen::MatrixXd(double)> drift;  // d x d
    std::function<Eigen::MatrixXd(double)> noise;  // d x m
    Eigen::MatrixXd noise_cov;                     // m x m
    std::optional<double> period_hint;
};

/// Checks dimensions and that Q is symmetric with eigenvalues >= -1e-12.
/// Throws std::invalid_argument describing the first violation.
void validate(const EvolutionSystem& sys);

/// OU as a one-dimensional system: A = -alpha, g = sqrt(2 alpha) sigma, Q = 1.
EvolutionSystem ou_system(const OuParams& params);

/// A(t) = -1 + cos t, g(t) = sqrt(1 - cos t), Q = 1, period 2π.
EvolutionSystem periodic_example_system();

/// System whose A and g entries are expressions in t.
EvolutionSystem expression_system(std::string name, MatrixExpr drift, MatrixExpr noise,
                                  Eigen::MatrixXd noise_cov,
                                  std::optional<double> period_hint = std::nullopt);

struct PropagatorEval {
    double s = 0.0;
    double t = 0.0;
    Eigen::MatrixXd U;
    double step = 0.0;     // sub-step of the coarse sweep
    double err_est = 0.0;  // step-halving estimate, Frobenius norm
};

/// Approximates U(t, s) for dU/dτ = A(τ) U, U(s) = I.
///
/// Two midpoint-exponential sweeps (step h and h/2) are combined by
/// Richardson extrapolation; the scheme is symmetric so its error expands
/// in even powers of h. If the halving estimate exceeds 1e-6 ‖U‖ the step
/// is halved once more, then StepTooLargeError is thrown.
PropagatorEval propagator(const EvolutionSystem& sys, double s, double t, double step);

/// Grid used by check_exponential_stability.
struct StabilityGrid {
    double base_start = 0.0;
    double base_end = 0.0;  // bases s cover [base_start, base_end)
    std::size_t base_count = 0;
    double horizon = 0.0;   // t - s sampled on [0, horizon]
    double step = 0.0;      // spacing of both bases and lags
    bool periodic_bases = false;
    double inflation = 0.0; // added to log M to cover off-grid points
};

struct StabilityEstimate {
    double M = 1.0;
    double delta = 0.0;
    double beta = 0.0;
    StabilityGrid grid;
};

/// β = -max_t λ_max((A(t) + A(t)ᵀ) / 2) over `t_grid`; β > 0 certifies
/// uniform dissipativity on the grid.
double check_dissipativity(const EvolutionSystem& sys, std::span<const double> t_grid);

/// Fits ‖U(t, s)‖ <= M exp(-δ (t - s)) on a lattice of base points s and lags.
///
/// Bases cover one period when `sys.period_hint` is set, otherwise [0, horizon).
/// δ is minus the slope of the upper concave envelope of log ‖U‖ at lag
/// horizon/2; M is the smallest constant making the bound hold on every
/// sample, inflated by max(0, μ_max + δ) * 2 * step to cover off-lattice
/// points (μ_max is the largest sampled logarithmic norm of A).
/// Throws UnstableError when ‖U(s + horizon, s)‖ > 10 for some base.
StabilityEstimate check_exponential_stability(const EvolutionSystem& sys, double horizon,
                                              double step);

/// Horizon and step used when a caller does not provide a certificate.
StabilityEstimate default_stability(const EvolutionSystem& sys);

/// Cov(X_{t1}, X_{t2}) = E[X_{t1} X_{t2}ᵀ] for the bounded mild solution
/// X_t = ∫_{-∞}^t U(t, s) g(s) dW_s, t1 <= t2.
///
/// The lower limit is cut at t1 - ln(M² · sup tr(g Q gᵀ) / tail_tol) / δ.
/// Throws NotStableError without a positive δ.
Eigen::MatrixXd convolution_covariance(const EvolutionSystem& sys, double t1, double t2,
                                       double step, double tail_tol,
                                       const std::optional<StabilityEstimate>& stability = std::nullopt);

/// ∫_{-∞}^t tr(U(t,s) g(s) Q g(s)ᵀ U(t,s)ᵀ) ds.
double variance_condition(const EvolutionSystem& sys, double t, double step, double tail_tol,
                          const std::optional<StabilityEstimate>& stability = std::nullopt);

/// Law of the bounded solution as a GaussianProcessSpec with a numerical
/// kernel. The stability certificate is computed once, at construction.
GaussianProcessSpec evolution_spec(const EvolutionSystem& sys, double step, double tail_tol);

} // namespace apsde
