#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "apsde/evolution.hpp"
#include "apsde/gp_core.hpp"

namespace apsde {

/// Points t0 + i h for i = 0..steps.
struct UniformGrid {
    double t0 = 0.0;
    double h = 1.0;
    std::size_t steps = 0;

    double at(std::size_t i) const { return t0 + h * static_cast<double>(i); }
    std::size_t size() const { return steps + 1; }
};

enum class SampleMethod { ExactRecursion, EulerMaruyama, MarginalFactor };

std::string to_string(SampleMethod m);

struct PathSample {
    UniformGrid grid;
    Eigen::MatrixXd values;  // (steps + 1) x d
    std::uint64_t seed = 0;
    std::uint64_t path = 0;  // stream index within the seed
    SampleMethod method = SampleMethod::ExactRecursion;
};

/// Exact stationary OU recursion: X_{t0} ~ N(0, σ²), then
/// X_{t+h} = e^{-αh} X_t + N(0, σ²(1 - e^{-2αh})).
PathSample sample_ou_exact(const OuParams& params, const UniformGrid& grid, std::uint64_t seed,
                           std::uint64_t path = 0);

/// Exact Gauss-Markov recursion for dX = (-1 + cos t) X dt + sqrt(1 - cos t) dW
/// started in its N(0, ½) law: X_{t+h} = u X_t + N(0, ½(1 - u²)),
/// u = exp(-h + sin(t+h) - sin t).
PathSample sample_periodic_exact(const UniformGrid& grid, std::uint64_t seed, std::uint64_t path = 0);

/// Euler-Maruyama: X_{t+h} = X_t + h A(t) X_t + g(t) Q^{1/2} sqrt(h) Z.
/// X_{t0} ~ N(0, initial_cov) when given, else 0. Requires ‖I + h A(t)‖ < 2
/// on the grid; throws DivergedError once any |X| exceeds 1e6.
PathSample sample_euler(const EvolutionSystem& sys, const UniformGrid& grid, std::uint64_t seed,
                        const std::optional<Eigen::MatrixXd>& initial_cov = std::nullopt,
                        std::uint64_t path = 0);

/// n_draws x (k d) matrix of draws from `mg`; draw i uses stream i.
Eigen::MatrixXd sample_marginal(const MarginalGaussian& mg, std::size_t n_draws, std::uint64_t seed);

/// Draws one path of a process at sorted, non-decreasing times. Each
/// (seed, path) pair is an independent reproducible stream.
struct ProcessSampler {
    std::string name;
    std::string method;
    std::size_t dim = 1;
    std::function<Eigen::MatrixXd(std::span<const double> times, std::uint64_t seed,
                                  std::uint64_t path)>
        draw;  // returns k x dim
    std::optional<GaussianProcessSpec> law;  // closed-form law when known
};

ProcessSampler ou_sampler(const OuParams& params);
ProcessSampler periodic_sampler();
/// Euler sampler on a fixed step h; requested times are snapped to the
/// nearest multiple of h from the first requested time.
ProcessSampler euler_sampler(const EvolutionSystem& sys, double h,
                             std::optional<Eigen::MatrixXd> initial_cov = std::nullopt);
/// Draws from the joint Gaussian marginal of `spec` at the requested times.
ProcessSampler marginal_sampler(const GaussianProcessSpec& spec);
/// Deterministic constant process.
ProcessSampler constant_sampler(Eigen::VectorXd value);

} // namespace apsde
