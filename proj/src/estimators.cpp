#include "apsde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "apsde/errors.hpp"
#include "apsde/rng.hpp"

namespace apsde {

namespace {

constexpr std::size_t kChunk = 4096;

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 64) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Eigen::VectorXd probe_vector(std::span<const double> probe, std::size_t dim) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    if (probe.empty()) {
        x(0) = 1.0;
        return x;
    }
    if (probe.size() != dim) {
        throw std::invalid_argument("probe dimension does not match the process");
    }
    for (std::size_t i = 0; i < dim; ++i) {
        x(static_cast<Eigen::Index>(i)) = probe[i];
    }
    return x;
}

void check_p(int p) {
    if (p != 2 && p != 4) {
        throw std::invalid_argument("moment order must be 2 or 4");
    }
}

} // namespace

void Moments::push(double x) {
    Moments one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
}

void Moments::merge(const Moments& o) {
    if (o.n_ == 0) {
        return;
    }
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    const double d2 = delta * delta;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * delta * (na * o.m3_ - nb * m3_) / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
}

double Moments::variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double Moments::mean_se() const {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double Moments::variance_se() const {
    if (n_ < 2) {
        return 0.0;
    }
    const double n = static_cast<double>(n_);
    const double c2 = m2_ / n;
    const double c4 = m4_ / n;
    return std::sqrt(std::max(0.0, c4 - c2 * c2) / n);
}

McEstimate mc_cov(const ProcessSampler& sampler, double t1, double t2, std::size_t n,
                  std::uint64_t seed, std::span<const double> probe) {
    if (n < 100) {
        throw std::invalid_argument("mc_cov: need at least 100 paths");
    }
    const Eigen::VectorXd dir = probe_vector(probe, sampler.dim);
    const bool same = (t1 == t2);
    const std::vector<double> times =
        same ? std::vector<double>{t1} : std::vector<double>{std::min(t1, t2), std::max(t1, t2)};
    const std::size_t first = 0;
    const std::size_t second = same ? 0 : 1;

    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for_each_chunk(n, kChunk, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Eigen::MatrixXd path = sampler.draw(times, seed, i);
            xs[i] = path.row(static_cast<Eigen::Index>(first)).dot(dir);
            ys[i] = path.row(static_cast<Eigen::Index>(second)).dot(dir);
        }
    });

    const double nd = static_cast<double>(n);
    const double mx = pairwise_sum(xs) / nd;
    const double my = pairwise_sum(ys) / nd;
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) {
        prod[i] = (xs[i] - mx) * (ys[i] - my);
    }
    const double mean_prod = pairwise_sum(prod) / nd;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = prod[i] - mean_prod;
        xs[i] = dev * dev;
    }
    const double var_prod = pairwise_sum(xs) / (nd - 1.0);

    McEstimate est;
    est.value = mean_prod * nd / (nd - 1.0);
    est.std_error = std::sqrt(var_prod / nd);
    est.n = n;
    est.seed = seed;
    est.sampler = sampler.name;
    est.method = sampler.method;
    return est;
}

double gaussian_norm_moment(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int p) {
    check_p(p);
    const double second = cov.trace() + mean.squaredNorm();
    if (p == 2) {
        return second;
    }
    return second * second + 2.0 * (cov * cov).trace() + 4.0 * mean.dot(cov * mean);
}

MomentEstimate mc_moment(const ProcessSampler& sampler, double t, int p, std::size_t n,
                         std::uint64_t seed) {
    check_p(p);
    if (n < 2) {
        throw std::invalid_argument("mc_moment: need at least 2 paths");
    }
    const std::vector<double> times{t};
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Moments> partial(chunks);
    for_each_chunk(n, kChunk, [&](std::size_t begin, std::size_t end) {
        Moments& m = partial[begin / kChunk];
        for (std::size_t i = begin; i < end; ++i) {
            const double sq = sampler.draw(times, seed, i).row(0).squaredNorm();
            m.push(p == 2 ? sq : sq * sq);
        }
    });
    Moments total;
    for (const auto& m : partial) {
        total.merge(m);
    }
    MomentEstimate out;
    out.t = t;
    out.p = p;
    out.estimate = {total.mean(), total.mean_se(), n, seed, sampler.name, sampler.method};
    if (sampler.law) {
        out.exact = gaussian_norm_moment(sampler.law->mean(t), sampler.law->kernel(t, t), p);
    }
    return out;
}

UiReport ui_proxy(const ProcessSampler& sampler, std::span<const double> t_grid, std::size_t n,
                  std::uint64_t seed, double cap) {
    if (t_grid.empty()) {
        throw std::invalid_argument("ui_proxy: empty time grid");
    }
    if (n < 2) {
        throw std::invalid_argument("ui_proxy: need at least 2 paths");
    }
    std::vector<double> times(t_grid.begin(), t_grid.end());
    std::sort(times.begin(), times.end());
    const std::size_t k = times.size();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;

    UiReport report;
    report.cap = cap;
    std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(k));
    try {
        for_each_chunk(n, kChunk, [&](std::size_t begin, std::size_t end) {
            auto& row = partial[begin / kChunk];
            for (std::size_t i = begin; i < end; ++i) {
                const Eigen::MatrixXd path = sampler.draw(times, seed, i);
                for (std::size_t j = 0; j < k; ++j) {
                    const double sq = path.row(static_cast<Eigen::Index>(j)).squaredNorm();
                    row[j].push(sq * sq);
                }
            }
        });
    } catch (const DivergedError& e) {
        report.failure = e.what();
        report.bounded = false;
        report.sup_value = report.sup_upper = std::numeric_limits<double>::infinity();
        return report;
    }

    report.sup_value = -std::numeric_limits<double>::infinity();
    report.sup_upper = -std::numeric_limits<double>::infinity();
    bool finite = true;
    for (std::size_t j = 0; j < k; ++j) {
        Moments total;
        for (const auto& row : partial) {
            total.merge(row[j]);
        }
        MomentEstimate m;
        m.t = times[j];
        m.p = 4;
        m.estimate = {total.mean(), total.mean_se(), n, seed, sampler.name, sampler.method};
        if (sampler.law) {
            m.exact = gaussian_norm_moment(sampler.law->mean(times[j]),
                                           sampler.law->kernel(times[j], times[j]), 4);
        }
        finite = finite && std::isfinite(m.estimate.value) && std::isfinite(m.estimate.std_error);
        if (m.estimate.value > report.sup_value) {
            report.sup_value = m.estimate.value;
            report.t_at_sup = times[j];
        }
        report.sup_upper = std::max(report.sup_upper, m.estimate.upper());
        report.fourth_moments.push_back(std::move(m));
    }
    report.bounded = finite && report.sup_upper <= cap;
    if (!report.bounded) {
        report.failure = "fourth moment exceeds the cap or is not finite";
    }
    return report;
}

} // namespace apsde
