#include "apsde/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apsde/errors.hpp"
#include "apsde/linalg.hpp"
#include "apsde/rng.hpp"

namespace apsde {

namespace {

void check_grid(const UniformGrid& grid) {
    if (!(grid.h > 0.0) || !std::isfinite(grid.t0) || !std::isfinite(grid.h)) {
        throw std::invalid_argument("sampler: grid needs finite t0 and h > 0");
    }
}

void check_times(std::span<const double> times) {
    if (times.empty()) {
        throw std::invalid_argument("sampler: no times requested");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] < times[i - 1]) {
            throw std::invalid_argument("sampler: times must be non-decreasing");
        }
    }
}

// Stationary OU values at sorted times from one stream.
void ou_fill(const OuParams& p, std::span<const double> times, CounterRng& rng, double* out) {
    const double sigma = p.sigma();
    double x = sigma * rng.normal();
    out[0] = x;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double decay = std::exp(-p.alpha() * (times[i] - times[i - 1]));
        x = decay * x + sigma * std::sqrt(std::max(0.0, 1.0 - decay * decay)) * rng.normal();
        out[i] = x;
    }
}

void periodic_fill(std::span<const double> times, CounterRng& rng, double* out) {
    const double half_sd = std::sqrt(0.5);
    double x = half_sd * rng.normal();
    out[0] = x;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double u = periodic_example_propagator(times[i], times[i - 1]);
        x = u * x + half_sd * std::sqrt(std::max(0.0, 1.0 - u * u)) * rng.normal();
        out[i] = x;
    }
}

std::vector<double> grid_times(const UniformGrid& grid) {
    std::vector<double> t(grid.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = grid.at(i);
    }
    return t;
}

Eigen::VectorXd draw_gaussian(const Eigen::MatrixXd& factor, CounterRng& rng) {
    Eigen::VectorXd z(factor.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = rng.normal();
    }
    return factor * z;
}

// Euler steps from state x at grid.t0; calls record(i, x) at each grid index.
template <typename Record>
void euler_run(const EvolutionSystem& sys, const UniformGrid& grid, const Eigen::MatrixXd& q_root,
               Eigen::VectorXd x, CounterRng& rng, Record&& record) {
    const double sqrt_h = std::sqrt(grid.h);
    const Eigen::Index d = sys.dim_state;
    record(0, x);
    if (d == 1 && sys.dim_noise == 1) {
        const double q = q_root(0, 0);
        double xs = x(0);
        for (std::size_t i = 0; i < grid.steps; ++i) {
            const double t = grid.at(i);
            const double amp = 1.0 + grid.h * sys.drift(t)(0, 0);
            if (!(std::abs(amp) < 2.0)) {
                std::ostringstream msg;
                msg << "sample_euler: step h=" << grid.h << " too large, |1 + hA(t)| >= 2 at t=" << t;
                throw std::invalid_argument(msg.str());
            }
            xs = amp * xs + sys.noise(t)(0, 0) * q * sqrt_h * rng.normal();
            if (!std::isfinite(xs) || std::abs(xs) > 1e6) {
                std::ostringstream msg;
                msg << "sample_euler: " << sys.name << " diverged at t=" << grid.at(i + 1);
                throw DivergedError(msg.str());
            }
            x(0) = xs;
            record(i + 1, x);
        }
        return;
    }
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double t = grid.at(i);
        const Eigen::MatrixXd a = sys.drift(t);
        const Eigen::MatrixXd amp = Eigen::MatrixXd::Identity(d, d) + grid.h * a;
        if (!(linalg::spectral_norm(amp) < 2.0)) {
            std::ostringstream msg;
            msg << "sample_euler: step h=" << grid.h << " too large, |I + hA(t)| >= 2 at t=" << t;
            throw std::invalid_argument(msg.str());
        }
        Eigen::VectorXd z(sys.dim_noise);
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            z(k) = rng.normal();
        }
        x = amp * x + sys.noise(t) * (q_root * z) * sqrt_h;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6) {
            std::ostringstream msg;
            msg << "sample_euler: " << sys.name << " diverged at t=" << grid.at(i + 1);
            throw DivergedError(msg.str());
        }
        record(i + 1, x);
    }
}

Eigen::VectorXd euler_initial(const EvolutionSystem& sys, const std::optional<Eigen::MatrixXd>& init_root,
                              CounterRng& rng) {
    if (init_root) {
        return draw_gaussian(*init_root, rng);
    }
    return Eigen::VectorXd::Zero(sys.dim_state);
}

} // namespace

std::string to_string(SampleMethod m) {
    switch (m) {
    case SampleMethod::ExactRecursion:
        return "ExactRecursion";
    case SampleMethod::EulerMaruyama:
        return "EulerMaruyama";
    case SampleMethod::MarginalFactor:
        return "MarginalFactor";
    }
    return "unknown";
}

PathSample sample_ou_exact(const OuParams& params, const UniformGrid& grid, std::uint64_t seed,
                           std::uint64_t path) {
    check_grid(grid);
    PathSample out{grid, Eigen::MatrixXd(grid.size(), 1), seed, path, SampleMethod::ExactRecursion};
    CounterRng rng(seed, path);
    ou_fill(params, grid_times(grid), rng, out.values.data());
    return out;
}

PathSample sample_periodic_exact(const UniformGrid& grid, std::uint64_t seed, std::uint64_t path) {
    check_grid(grid);
    PathSample out{grid, Eigen::MatrixXd(grid.size(), 1), seed, path, SampleMethod::ExactRecursion};
    CounterRng rng(seed, path);
    periodic_fill(grid_times(grid), rng, out.values.data());
    return out;
}

PathSample sample_euler(const EvolutionSystem& sys, const UniformGrid& grid, std::uint64_t seed,
                        const std::optional<Eigen::MatrixXd>& initial_cov, std::uint64_t path) {
    check_grid(grid);
    validate(sys);
    const Eigen::MatrixXd q_root = linalg::sqrtm_psd(sys.noise_cov);
    std::optional<Eigen::MatrixXd> init_root;
    if (initial_cov) {
        init_root = linalg::sqrtm_psd(*initial_cov);
    }
    PathSample out{grid, Eigen::MatrixXd(grid.size(), sys.dim_state), seed, path,
                   SampleMethod::EulerMaruyama};
    CounterRng rng(seed, path);
    euler_run(sys, grid, q_root, euler_initial(sys, init_root, rng), rng,
              [&](std::size_t i, const Eigen::VectorXd& x) {
                  out.values.row(static_cast<Eigen::Index>(i)) = x.transpose();
              });
    return out;
}

Eigen::MatrixXd sample_marginal(const MarginalGaussian& mg, std::size_t n_draws, std::uint64_t seed) {
    const Eigen::MatrixXd factor = linalg::sqrtm_psd(mg.cov);
    const Eigen::Index width = mg.mean.size();
    Eigen::MatrixXd draws(static_cast<Eigen::Index>(n_draws), width);
    for_each_chunk(n_draws, 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            draws.row(static_cast<Eigen::Index>(i)) = (mg.mean + draw_gaussian(factor, rng)).transpose();
        }
    });
    return draws;
}

ProcessSampler ou_sampler(const OuParams& params) {
    ProcessSampler s;
    s.name = ou_spec(params).name;
    s.method = to_string(SampleMethod::ExactRecursion);
    s.dim = 1;
    s.law = ou_spec(params);
    s.draw = [params](std::span<const double> times, std::uint64_t seed, std::uint64_t path) {
        check_times(times);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), 1);
        CounterRng rng(seed, path);
        ou_fill(params, times, rng, out.data());
        return out;
    };
    return s;
}

ProcessSampler periodic_sampler() {
    ProcessSampler s;
    s.name = periodic_example_spec().name;
    s.method = to_string(SampleMethod::ExactRecursion);
    s.dim = 1;
    s.law = periodic_example_spec();
    s.draw = [](std::span<const double> times, std::uint64_t seed, std::uint64_t path) {
        check_times(times);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), 1);
        CounterRng rng(seed, path);
        periodic_fill(times, rng, out.data());
        return out;
    };
    return s;
}

ProcessSampler euler_sampler(const EvolutionSystem& sys, double h,
                             std::optional<Eigen::MatrixXd> initial_cov) {
    validate(sys);
    if (!(h > 0.0)) {
        throw std::invalid_argument("euler_sampler: h must be positive");
    }
    ProcessSampler s;
    std::ostringstream name;
    name.precision(17);
    name << "euler(" << sys.name << ",h=" << h << ")";
    s.name = name.str();
    s.method = to_string(SampleMethod::EulerMaruyama);
    s.dim = static_cast<std::size_t>(sys.dim_state);
    const Eigen::MatrixXd q_root = linalg::sqrtm_psd(sys.noise_cov);
    std::optional<Eigen::MatrixXd> init_root;
    if (initial_cov) {
        init_root = linalg::sqrtm_psd(*initial_cov);
    }
    s.draw = [sys, h, q_root, init_root](std::span<const double> times, std::uint64_t seed,
                                         std::uint64_t path) {
        check_times(times);
        std::vector<std::size_t> idx(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            idx[i] = static_cast<std::size_t>(std::llround((times[i] - times[0]) / h));
        }
        const UniformGrid grid{times[0], h, idx.back()};
        Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), sys.dim_state);
        CounterRng rng(seed, path);
        std::size_t next = 0;
        euler_run(sys, grid, q_root, euler_initial(sys, init_root, rng), rng,
                  [&](std::size_t i, const Eigen::VectorXd& x) {
                      while (next < idx.size() && idx[next] == i) {
                          out.row(static_cast<Eigen::Index>(next++)) = x.transpose();
                      }
                  });
        return out;
    };
    return s;
}

ProcessSampler marginal_sampler(const GaussianProcessSpec& spec) {
    ProcessSampler s;
    s.name = spec.name;
    s.method = to_string(SampleMethod::MarginalFactor);
    s.dim = spec.dim;
    s.law = spec;
    s.draw = [spec](std::span<const double> times, std::uint64_t seed, std::uint64_t path) {
        check_times(times);
        // Repeated times share one coordinate of the joint law.
        std::vector<double> unique;
        std::vector<std::size_t> slot(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (unique.empty() || times[i] > unique.back()) {
                unique.push_back(times[i]);
            }
            slot[i] = unique.size() - 1;
        }
        const MarginalGaussian mg = marginals(spec, unique);
        CounterRng rng(seed, path);
        const Eigen::VectorXd x = mg.mean + draw_gaussian(linalg::sqrtm_psd(mg.cov), rng);
        const auto d = static_cast<Eigen::Index>(spec.dim);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), d);
        for (std::size_t i = 0; i < times.size(); ++i) {
            out.row(static_cast<Eigen::Index>(i)) =
                x.segment(static_cast<Eigen::Index>(slot[i]) * d, d).transpose();
        }
        return out;
    };
    return s;
}

ProcessSampler constant_sampler(Eigen::VectorXd value) {
    ProcessSampler s;
    std::ostringstream name;
    name.precision(17);
    name << "constant(" << value.transpose() << ")";
    s.name = name.str();
    s.method = "Deterministic";
    s.dim = static_cast<std::size_t>(value.size());
    GaussianProcessSpec law;
    law.name = s.name;
    law.dim = s.dim;
    law.mean = [value](double) { return value; };
    const auto d = value.size();
    law.kernel = [d](double, double) { return Eigen::MatrixXd::Zero(d, d); };
    s.law = law;
    s.draw = [value](std::span<const double> times, std::uint64_t, std::uint64_t) {
        check_times(times);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), value.size());
        out.rowwise() = value.transpose();
        return out;
    };
    return s;
}

} // namespace apsde
