#include "apsde/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apsde/linalg.hpp"

namespace apsde {

OuParams::OuParams(double alpha, double sigma) : alpha_(alpha), sigma_(sigma) {
    if (!(alpha > 0.0) || !(sigma > 0.0) || !std::isfinite(alpha) || !std::isfinite(sigma)) {
        std::ostringstream msg;
        msg << "OU parameters must be positive and finite (alpha=" << alpha << ", sigma=" << sigma
            << ")";
        throw std::invalid_argument(msg.str());
    }
}

std::uint64_t spec_hash(const GaussianProcessSpec& spec) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : spec.name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

GaussianProcessSpec ou_spec(const OuParams& params) {
    const double alpha = params.alpha();
    const double var = params.variance();
    GaussianProcessSpec spec;
    spec.name = "ou(alpha=" + format_double(alpha) + ",sigma=" + format_double(params.sigma()) + ")";
    spec.dim = 1;
    spec.mean = [](double) { return Eigen::VectorXd::Zero(1); };
    spec.kernel = [alpha, var](double s, double t) {
        return Eigen::MatrixXd::Constant(1, 1, var * std::exp(-alpha * std::abs(t - s)));
    };
    return spec;
}

double periodic_example_propagator(double t, double s) {
    return std::exp(-(t - s) + std::sin(t) - std::sin(s));
}

GaussianProcessSpec periodic_example_spec() {
    GaussianProcessSpec spec;
    spec.name = "periodic_example";
    spec.dim = 1;
    spec.mean = [](double) { return Eigen::VectorXd::Zero(1); };
    spec.kernel = [](double s, double t) {
        const double lo = std::min(s, t);
        const double hi = std::max(s, t);
        return Eigen::MatrixXd::Constant(1, 1, 0.5 * periodic_example_propagator(hi, lo));
    };
    return spec;
}

MarginalGaussian marginals(const GaussianProcessSpec& spec, std::span<const double> times) {
    if (times.empty()) {
        throw std::invalid_argument("marginals: times must be nonempty");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw std::invalid_argument("marginals: times must be finite and strictly increasing");
        }
    }
    const auto d = static_cast<Eigen::Index>(spec.dim);
    const auto k = static_cast<Eigen::Index>(times.size());

    MarginalGaussian mg;
    mg.times.assign(times.begin(), times.end());
    mg.dim = spec.dim;
    mg.mean.resize(k * d);
    mg.cov.resize(k * d, k * d);
    for (Eigen::Index i = 0; i < k; ++i) {
        mg.mean.segment(i * d, d) = spec.mean(times[i]);
        for (Eigen::Index j = i; j < k; ++j) {
            const Eigen::MatrixXd block = spec.kernel(times[i], times[j]);
            mg.cov.block(i * d, j * d, d, d) = block;
            mg.cov.block(j * d, i * d, d, d) = block.transpose();
        }
    }
    linalg::enforce_psd(mg.cov);
    return mg;
}

double l2_increment(const GaussianProcessSpec& spec, double t, double tau) {
    if (tau < 0.0) {
        throw std::invalid_argument("l2_increment: tau must be nonnegative");
    }
    if (tau == 0.0) {
        return 0.0;
    }
    const double u = t + tau;
    const double centered = spec.kernel(t, t).trace() + spec.kernel(u, u).trace() -
                            2.0 * spec.kernel(t, u).trace();
    const double drift = (spec.mean(u) - spec.mean(t)).squaredNorm();
    return std::max(centered + drift, 0.0);
}

} // namespace apsde
