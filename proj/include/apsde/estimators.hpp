#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "apsde/sampler.hpp"

namespace apsde {

/// Monte Carlo estimate with its standard error and provenance.
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string sampler;  // ProcessSampler::name
    std::string method;   // ProcessSampler::method

    double lower(double k = 4.0) const { return value - k * std_error; }
    double upper(double k = 4.0) const { return value + k * std_error; }
    bool covers(double truth, double k = 4.0) const {
        return truth >= lower(k) && truth <= upper(k);
    }
};

/// Running count/mean/central moments up to order four, mergeable in a
/// fixed order so chunked reductions are deterministic.
class Moments {
public:
    void push(double x);
    void merge(const Moments& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance.
    double variance() const;
    /// Standard error of mean().
    double mean_se() const;
    /// Delta-method standard error of variance(): sqrt((m4 - m2²) / n).
    double variance_se() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

/// Sample covariance of (⟨probe, X_{t1}⟩, ⟨probe, X_{t2}⟩) over n independent
/// paths; path i uses stream i. Empty probe means the first coordinate.
/// Standard error by the delta method on the centered products.
McEstimate mc_cov(const ProcessSampler& sampler, double t1, double t2, std::size_t n,
                  std::uint64_t seed, std::span<const double> probe = {});

struct MomentEstimate {
    McEstimate estimate;
    double t = 0.0;
    int p = 2;
    std::optional<double> exact;  // Gaussian identity when the law is known
};

/// Closed-form E‖X‖^p, p ∈ {2, 4}, of a Gaussian with the given mean and covariance.
double gaussian_norm_moment(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int p);

/// Estimates E‖X_t‖^p for p ∈ {2, 4}.
MomentEstimate mc_moment(const ProcessSampler& sampler, double t, int p, std::size_t n,
                         std::uint64_t seed);

struct UiReport {
    std::vector<MomentEstimate> fourth_moments;  // one per grid time
    double sup_value = 0.0;
    double sup_upper = 0.0;  // sup of value + 4 SE
    double t_at_sup = 0.0;
    double cap = 0.0;
    bool bounded = false;
    std::string failure;  // set when sampling diverged
};

/// Uniform fourth-moment bound over `t_grid`, the proxy used to certify
/// uniform integrability of ‖X_t‖². `bounded` requires every estimate to be
/// finite with sup_upper <= cap.
UiReport ui_proxy(const ProcessSampler& sampler, std::span<const double> t_grid, std::size_t n,
                  std::uint64_t seed, double cap = 1e6);

} // namespace apsde
