#include "apsde/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "apsde/errors.hpp"
#include "apsde/linalg.hpp"

namespace apsde {

namespace {

Eigen::MatrixXd checked_drift(const EvolutionSystem& sys, double t) {
    Eigen::MatrixXd a = sys.drift(t);
    if (!a.allFinite()) {
        std::ostringstream msg;
        msg << sys.name << ": drift A(t) is not finite at t=" << t;
        throw Error(msg.str());
    }
    return a;
}

Eigen::MatrixXd noise_gram(const EvolutionSystem& sys, double t) {
    const Eigen::MatrixXd g = sys.noise(t);
    if (!g.allFinite()) {
        std::ostringstream msg;
        msg << sys.name << ": noise g(t) is not finite at t=" << t;
        throw Error(msg.str());
    }
    return g * sys.noise_cov * g.transpose();
}

// Product of n midpoint exponentials over [s, t].
Eigen::MatrixXd magnus_sweep(const EvolutionSystem& sys, double s, double t, long n) {
    const double h = (t - s) / static_cast<double>(n);
    if (sys.dim_state == 1) {
        double exponent = 0.0;
        for (long k = 0; k < n; ++k) {
            exponent += checked_drift(sys, s + (static_cast<double>(k) + 0.5) * h)(0, 0);
        }
        return Eigen::MatrixXd::Constant(1, 1, std::exp(h * exponent));
    }
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(sys.dim_state, sys.dim_state);
    for (long k = 0; k < n; ++k) {
        const double mid = s + (static_cast<double>(k) + 0.5) * h;
        u = linalg::expm(h * checked_drift(sys, mid)) * u;
    }
    return u;
}

// Upper concave envelope of (x_i, y_i), x strictly increasing; returns indices.
std::vector<std::size_t> upper_hull(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull.back();
            const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if (cross >= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(i);
    }
    return hull;
}

double trace_bound(const EvolutionSystem& sys, double a, double b) {
    const double spacing = 0.01;
    const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / spacing)));
    double best = 0.0;
    for (long k = 0; k <= n; ++k) {
        const double s = a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
        best = std::max(best, noise_gram(sys, s).trace());
    }
    return best;
}

// Composite Simpson approximation of ∫_{t-length}^{t} U(t,s) G(s) U(t,s)ᵀ ds
// with `n` (even) intervals, U advanced backwards by midpoint exponentials.
Eigen::MatrixXd truncated_gramian(const EvolutionSystem& sys, double t, double length, long n) {
    const double h = length / static_cast<double>(n);
    const Eigen::Index d = sys.dim_state;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    const auto weight = [n](long k) {
        if (k == 0 || k == n) {
            return 1.0;
        }
        return (k % 2 == 1) ? 4.0 : 2.0;
    };
    if (d == 1) {
        double exponent = 0.0;
        for (long k = 0; k <= n; ++k) {
            const double s = t - static_cast<double>(k) * h;
            const double v = std::exp(exponent);
            acc(0, 0) += weight(k) * v * v * noise_gram(sys, s)(0, 0);
            if (k < n) {
                exponent += h * checked_drift(sys, s - 0.5 * h)(0, 0);
            }
        }
    } else {
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
        for (long k = 0; k <= n; ++k) {
            const double s = t - static_cast<double>(k) * h;
            acc += weight(k) * v * noise_gram(sys, s) * v.transpose();
            if (k < n) {
                v = v * linalg::expm(h * checked_drift(sys, s - 0.5 * h));
            }
        }
    }
    return linalg::symmetrize(acc * (h / 3.0));
}

} // namespace

void validate(const EvolutionSystem& sys) {
    if (sys.dim_state < 1 || sys.dim_noise < 1) {
        throw std::invalid_argument(sys.name + ": dimensions must be positive");
    }
    if (!sys.drift || !sys.noise) {
        throw std::invalid_argument(sys.name + ": drift and noise must be set");
    }
    const Eigen::MatrixXd a = sys.drift(0.0);
    const Eigen::MatrixXd g = sys.noise(0.0);
    if (a.rows() != sys.dim_state || a.cols() != sys.dim_state) {
        throw std::invalid_argument(sys.name + ": A(t) must be d x d");
    }
    if (g.rows() != sys.dim_state || g.cols() != sys.dim_noise) {
        throw std::invalid_argument(sys.name + ": g(t) must be d x m");
    }
    const Eigen::MatrixXd& q = sys.noise_cov;
    if (q.rows() != sys.dim_noise || q.cols() != sys.dim_noise) {
        throw std::invalid_argument(sys.name + ": Q must be m x m");
    }
    if (!q.allFinite() || (q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument(sys.name + ": Q must be finite and symmetric");
    }
    if (linalg::sym_eigen_range(q).min < -1e-12) {
        throw std::invalid_argument(sys.name + ": Q must be positive semidefinite");
    }
    if (sys.period_hint && !(*sys.period_hint > 0.0)) {
        throw std::invalid_argument(sys.name + ": period_hint must be positive");
    }
}

EvolutionSystem ou_system(const OuParams& params) {
    const double alpha = params.alpha();
    const double gain = std::sqrt(2.0 * alpha) * params.sigma();
    EvolutionSystem sys;
    sys.name = "ou_system(alpha=" + std::to_string(alpha) + ",sigma=" + std::to_string(params.sigma()) + ")";
    sys.drift = [alpha](double) { return Eigen::MatrixXd::Constant(1, 1, -alpha); };
    sys.noise = [gain](double) { return Eigen::MatrixXd::Constant(1, 1, gain); };
    sys.noise_cov = Eigen::MatrixXd::Identity(1, 1);
    return sys;
}

EvolutionSystem periodic_example_system() {
    EvolutionSystem sys;
    sys.name = "periodic_example_system";
    sys.drift = [](double t) { return Eigen::MatrixXd::Constant(1, 1, -1.0 + std::cos(t)); };
    sys.noise = [](double t) {
        return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(0.0, 1.0 - std::cos(t))));
    };
    sys.noise_cov = Eigen::MatrixXd::Identity(1, 1);
    sys.period_hint = 2.0 * std::numbers::pi;
    return sys;
}

EvolutionSystem expression_system(std::string name, MatrixExpr drift, MatrixExpr noise,
                                  Eigen::MatrixXd noise_cov, std::optional<double> period_hint) {
    EvolutionSystem sys;
    sys.name = std::move(name);
    sys.dim_state = drift.rows();
    sys.dim_noise = noise.cols();
    sys.drift = [drift = std::move(drift)](double t) { return drift(t); };
    sys.noise = [noise = std::move(noise)](double t) { return noise(t); };
    sys.noise_cov = std::move(noise_cov);
    sys.period_hint = period_hint;
    validate(sys);
    return sys;
}

PropagatorEval propagator(const EvolutionSystem& sys, double s, double t, double step) {
    if (!(t >= s)) {
        throw std::invalid_argument("propagator: requires s <= t");
    }
    if (!(step > 0.0)) {
        throw std::invalid_argument("propagator: step must be positive");
    }
    PropagatorEval out;
    out.s = s;
    out.t = t;
    if (t == s) {
        out.U = Eigen::MatrixXd::Identity(sys.dim_state, sys.dim_state);
        out.step = step;
        return out;
    }
    long n = std::max(1L, static_cast<long>(std::ceil((t - s) / step)));
    for (int attempt = 0; attempt < 2; ++attempt, n *= 2) {
        const Eigen::MatrixXd coarse = magnus_sweep(sys, s, t, n);
        const Eigen::MatrixXd fine = magnus_sweep(sys, s, t, 2 * n);
        out.U = fine + (fine - coarse) / 3.0;
        out.err_est = (fine - coarse).norm() / 3.0;
        out.step = (t - s) / static_cast<double>(n);
        if (out.err_est <= 1e-6 * out.U.norm()) {
            return out;
        }
    }
    std::ostringstream msg;
    msg << "propagator: step-halving error " << out.err_est << " exceeds 1e-6*|U| on [" << s
        << ", " << t << "]; reduce step";
    throw StepTooLargeError(msg.str());
}

double check_dissipativity(const EvolutionSystem& sys, std::span<const double> t_grid) {
    if (t_grid.empty()) {
        throw std::invalid_argument("check_dissipativity: empty grid");
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        worst = std::max(worst, linalg::log_norm(checked_drift(sys, t)));
    }
    return 0.0 - worst;
}

StabilityEstimate check_exponential_stability(const EvolutionSystem& sys, double horizon,
                                              double step) {
    if (!(horizon > 0.0) || !(step > 0.0)) {
        throw std::invalid_argument("check_exponential_stability: horizon and step must be positive");
    }
    const bool periodic = sys.period_hint.has_value();
    const double window = periodic ? *sys.period_hint : horizon;
    const auto nb = static_cast<std::size_t>(std::max(1.0, std::round(window / step)));
    const auto nl = static_cast<std::size_t>(std::max(1.0, std::round(horizon / step)));
    const std::size_t nodes = nb + nl;

    // Logarithmic norm and dissipativity margin on nodes and midpoints.
    double mu_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= 2 * nodes; ++k) {
        mu_max = std::max(mu_max, linalg::log_norm(checked_drift(sys, 0.5 * step * static_cast<double>(k))));
    }

    std::vector<double> lag(nl + 1);
    std::vector<double> envelope(nl + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i <= nl; ++i) {
        lag[i] = step * static_cast<double>(i);
    }
    double end_norm = 0.0;

    if (sys.dim_state == 1) {
        // log U(t_{j+i}, t_j) = c_{j+i} - c_j with c the midpoint-rule primitive of a.
        std::vector<double> primitive(nodes + 1, 0.0);
        for (std::size_t k = 0; k < nodes; ++k) {
            const double mid = step * (static_cast<double>(k) + 0.5);
            primitive[k + 1] = primitive[k] + step * checked_drift(sys, mid)(0, 0);
        }
        for (std::size_t j = 0; j < nb; ++j) {
            for (std::size_t i = 0; i <= nl; ++i) {
                envelope[i] = std::max(envelope[i], primitive[j + i] - primitive[j]);
            }
            end_norm = std::max(end_norm, std::exp(primitive[j + nl] - primitive[j]));
        }
    } else {
        std::vector<Eigen::MatrixXd> steps(nodes);
        for (std::size_t k = 0; k < nodes; ++k) {
            const double mid = step * (static_cast<double>(k) + 0.5);
            steps[k] = linalg::expm(step * checked_drift(sys, mid));
        }
        for (std::size_t j = 0; j < nb; ++j) {
            Eigen::MatrixXd u = Eigen::MatrixXd::Identity(sys.dim_state, sys.dim_state);
            for (std::size_t i = 0; i <= nl; ++i) {
                envelope[i] = std::max(envelope[i], std::log(linalg::spectral_norm(u)));
                if (i < nl) {
                    u = steps[j + i] * u;
                }
            }
            end_norm = std::max(end_norm, linalg::spectral_norm(u));
        }
    }

    if (!(end_norm <= 10.0)) {
        std::ostringstream msg;
        msg << sys.name << ": |U(s+" << lag[nl] << ", s)| reaches " << end_norm
            << " (> 10); not exponentially stable";
        throw UnstableError(msg.str());
    }

    const auto hull = upper_hull(lag, envelope);
    const double mid_lag = 0.5 * lag[nl];
    std::size_t edge = 0;
    while (edge + 2 < hull.size() && lag[hull[edge + 1]] <= mid_lag) {
        ++edge;
    }
    const std::size_t a = hull[edge];
    const std::size_t b = hull[std::min(edge + 1, hull.size() - 1)];
    const double delta = (a == b) ? 0.0 : -(envelope[b] - envelope[a]) / (lag[b] - lag[a]);

    double log_m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= nl; ++i) {
        log_m = std::max(log_m, envelope[i] + delta * lag[i]);
    }
    const double inflation = std::max(0.0, mu_max + delta) * 2.0 * step;

    StabilityEstimate est;
    est.delta = delta;
    est.M = std::max(1.0, std::exp(log_m + inflation));
    est.beta = 0.0 - mu_max;
    est.grid.base_start = 0.0;
    est.grid.base_end = step * static_cast<double>(nb);
    est.grid.base_count = nb;
    est.grid.horizon = lag[nl];
    est.grid.step = step;
    est.grid.periodic_bases = periodic;
    est.grid.inflation = inflation;
    return est;
}

StabilityEstimate default_stability(const EvolutionSystem& sys) {
    const double horizon = sys.period_hint ? std::max(20.0, 3.0 * *sys.period_hint) : 20.0;
    return check_exponential_stability(sys, horizon, 1e-2);
}

Eigen::MatrixXd convolution_covariance(const EvolutionSystem& sys, double t1, double t2,
                                       double step, double tail_tol,
                                       const std::optional<StabilityEstimate>& stability) {
    if (!(t1 <= t2)) {
        throw std::invalid_argument("convolution_covariance: requires t1 <= t2");
    }
    if (!(step > 0.0) || !(tail_tol > 0.0)) {
        throw std::invalid_argument("convolution_covariance: step and tail_tol must be positive");
    }
    const StabilityEstimate stab = stability ? *stability : default_stability(sys);
    if (!(stab.delta > 0.0)) {
        std::ostringstream msg;
        msg << sys.name << ": no positive decay rate (delta=" << stab.delta
            << "); tail truncation is not justified";
        throw NotStableError(msg.str());
    }

    // Grow the sampling window until the noise bound covers the truncated range.
    double window = std::max(10.0, sys.period_hint.value_or(0.0));
    double length = 0.0;
    for (int iter = 0; iter < 8; ++iter) {
        const double bound = trace_bound(sys, t1 - window, t1);
        if (bound <= 0.0) {
            length = 0.0;
            break;
        }
        length = std::max(0.0, std::log(stab.M * stab.M * bound / tail_tol) / stab.delta);
        if (length <= window) {
            break;
        }
        window = length;
    }

    const Eigen::Index d = sys.dim_state;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    if (length > 0.0) {
        long n = std::max(2L, static_cast<long>(std::ceil(length / step)));
        n += n % 2;
        const Eigen::MatrixXd coarse = truncated_gramian(sys, t1, length, n);
        const Eigen::MatrixXd fine = truncated_gramian(sys, t1, length, 2 * n);
        gram = fine + (fine - coarse) / 3.0;
    }
    if (t2 == t1) {
        return gram;
    }
    return gram * propagator(sys, t1, t2, step).U.transpose();
}

double variance_condition(const EvolutionSystem& sys, double t, double step, double tail_tol,
                          const std::optional<StabilityEstimate>& stability) {
    return convolution_covariance(sys, t, t, step, tail_tol, stability).trace();
}

GaussianProcessSpec evolution_spec(const EvolutionSystem& sys, double step, double tail_tol) {
    validate(sys);
    const StabilityEstimate stab = default_stability(sys);
    if (!(stab.delta > 0.0)) {
        throw NotStableError(sys.name + ": no positive decay rate; bounded solution law unavailable");
    }
    GaussianProcessSpec spec;
    std::ostringstream name;
    name.precision(17);
    name << "evolution(" << sys.name << ",step=" << step << ",tail_tol=" << tail_tol << ")";
    spec.name = name.str();
    spec.dim = static_cast<std::size_t>(sys.dim_state);
    const Eigen::Index d = sys.dim_state;
    spec.mean = [d](double) { return Eigen::VectorXd::Zero(d); };
    spec.kernel = [sys, step, tail_tol, stab](double s, double t) -> Eigen::MatrixXd {
        if (s <= t) {
            return convolution_covariance(sys, s, t, step, tail_tol, stab);
        }
        return convolution_covariance(sys, t, s, step, tail_tol, stab).transpose();
    };
    return spec;
}

} // namespace apsde
