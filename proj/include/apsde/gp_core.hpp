#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace apsde {

/// Parameters of the stationary Ornstein-Uhlenbeck process
/// dX = -alpha X dt + sqrt(2 alpha) sigma dW.
class OuParams {
public:
    /// Throws std::invalid_argument unless alpha > 0 and sigma > 0.
    OuParams(double alpha, double sigma);

    double alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    double variance() const { return sigma_ * sigma_; }

private:
    double alpha_;
    double sigma_;
};

/// A Gaussian process described by its mean function and covariance kernel.
///
/// `kernel(s, t)` is Cov(X_s, X_t) = E[(X_s - m(s)) (X_t - m(t))ᵀ], a dim x dim
/// matrix; it must satisfy kernel(s, t) = kernel(t, s)ᵀ.
struct GaussianProcessSpec {
    std::string name;
    std::size_t dim = 1;
    std::function<Eigen::VectorXd(double)> mean;
    std::function<Eigen::MatrixXd(double, double)> kernel;
};

/// Joint law of (X_{t_1}, ..., X_{t_k}), stacked time-major.
struct MarginalGaussian {
    std::vector<double> times;
    std::size_t dim = 1;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// FNV-1a hash of the spec name, used as provenance in serialized results.
std::uint64_t spec_hash(const GaussianProcessSpec& spec);

GaussianProcessSpec ou_spec(const OuParams& params);

/// Law of the bounded solution of dX = (-1 + cos t) X dt + sqrt(1 - cos t) dW:
/// zero mean, Cov(X_t, X_{t+τ}) = ½ exp(-τ + sin(t+τ) - sin t) for τ >= 0.
GaussianProcessSpec periodic_example_spec();

/// Closed-form propagator exp(-(t-s) + sin t - sin s) of x' = (-1 + cos t) x.
double periodic_example_propagator(double t, double s);

/// Assembles the finite-dimensional law at strictly increasing `times`.
/// Throws std::invalid_argument on bad times and NonPsdError when the
/// assembled covariance fails the relative PSD tolerance.
MarginalGaussian marginals(const GaussianProcessSpec& spec, std::span<const double> times);

/// E‖X_{t+τ} - X_t‖², clamped at zero.
double l2_increment(const GaussianProcessSpec& spec, double t, double tau);

} // namespace apsde
