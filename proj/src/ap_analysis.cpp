#include "apsde/ap_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apsde/errors.hpp"
#include "apsde/linalg.hpp"
#include "apsde/rng.hpp"

namespace apsde {

namespace {

constexpr double kGrid = 1e-9;  // relative slack for floating grid bounds

std::size_t last_compare_index(const SampledFunction& f, double compare_end) {
    const double span = compare_end - f.t0;
    if (span < 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(std::floor(span / f.h * (1.0 + kGrid) + kGrid));
}

void check_function(const SampledFunction& f) {
    if (!(f.h > 0.0) || !(f.window > 0.0) || !f.distance) {
        throw std::invalid_argument("sampled function needs h > 0, window > 0 and a distance");
    }
}

double compare_end_for(const SampledFunction& f, double tau_max) {
    const double end = f.t0 + f.window - std::max(0.0, tau_max);
    if (end < f.t0 + f.h * (1.0 - kGrid)) {
        std::ostringstream msg;
        msg << f.name << ": window [" << f.t0 << ", " << f.t0 + f.window
            << "] cannot host shifts up to " << tau_max << " with at least two comparison points";
        throw WindowTooShortError(msg.str());
    }
    return end;
}

void finish_report(AlmostPeriodReport& r, std::optional<double> max_inclusion) {
    std::sort(r.taus_found.begin(), r.taus_found.end());
    r.taus_found.erase(std::unique(r.taus_found.begin(), r.taus_found.end()), r.taus_found.end());
    std::sort(r.witnesses.begin(), r.witnesses.end(),
              [](const Witness& a, const Witness& b) { return a.tau < b.tau; });
    r.max_inclusion = max_inclusion.value_or(0.5 * (r.tau_max - r.tau_min));
    r.inclusion_length = inclusion_length(r.taus_found, r.tau_min, r.tau_max);
    r.relatively_dense = !r.taus_found.empty() && r.inclusion_length <= r.max_inclusion;
}

AlmostPeriodReport blank_report(const SampledFunction& f, double epsilon, double compare_end) {
    AlmostPeriodReport r;
    r.function = f.name;
    r.epsilon = epsilon;
    r.window_start = f.t0;
    r.window_end = f.t0 + f.window;
    r.compare_end = compare_end;
    r.t_step = f.h;
    return r;
}

Witness golden_minimum(const SampledFunction& f, double lo, double hi, double compare_end) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    Witness wc = sup_distance(f, c, compare_end);
    Witness wd = sup_distance(f, d, compare_end);
    for (int it = 0; it < 100 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (wc.distance <= wd.distance) {
            b = d;
            d = c;
            wd = wc;
            c = b - inv_phi * (b - a);
            wc = sup_distance(f, c, compare_end);
        } else {
            a = c;
            c = d;
            wc = wd;
            d = a + inv_phi * (b - a);
            wd = sup_distance(f, d, compare_end);
        }
    }
    return wc.distance <= wd.distance ? wc : wd;
}

void check_offsets(std::span<const double> offsets) {
    if (offsets.empty() || offsets.size() > 8) {
        throw std::invalid_argument("distribution check needs 1 to 8 offsets");
    }
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        if (!(offsets[i] > offsets[i - 1])) {
            throw std::invalid_argument("offsets must be strictly increasing");
        }
    }
}

SampledFunction law_function(const GaussianProcessSpec& spec, std::span<const double> offsets,
                             double t0, double window, double h) {
    std::vector<double> off(offsets.begin(), offsets.end());
    SampledFunction f;
    f.name = "law[" + spec.name + "]";
    f.t0 = t0;
    f.window = window;
    f.h = h;
    f.distance = [spec, off](double s, double t) {
        std::vector<double> ts(off.size());
        std::vector<double> tt(off.size());
        for (std::size_t i = 0; i < off.size(); ++i) {
            ts[i] = s + off[i];
            tt[i] = t + off[i];
        }
        const MarginalGaussian a = marginals(spec, ts);
        const MarginalGaussian b = marginals(spec, tt);
        return gaussian_w2(a.mean, a.cov, b.mean, b.cov);
    };
    return f;
}

void validate_probe(const ProbeSequence& probe, std::size_t dim, const LemmaOptions& opt) {
    if (probe.times.size() < 2) {
        throw std::invalid_argument("lemma_check: probe sequence needs at least two times");
    }
    for (std::size_t i = 1; i < probe.times.size(); ++i) {
        if (!(probe.times[i] > probe.times[i - 1])) {
            throw std::invalid_argument("lemma_check: probe times must be strictly increasing");
        }
    }
    if (static_cast<std::size_t>(probe.direction.size()) != dim) {
        throw std::invalid_argument("lemma_check: probe direction dimension mismatch");
    }
    if (opt.gap == 0 || opt.gap >= probe.times.size()) {
        throw std::invalid_argument("lemma_check: gap must be in [1, number of probe times)");
    }
}

void decide(LemmaReport& r) {
    const auto& opt = r.options;
    r.min_norm_variance_lower = std::numeric_limits<double>::infinity();
    r.max_norm_variance_upper = -std::numeric_limits<double>::infinity();
    for (const auto& v : r.norm_variance) {
        r.min_norm_variance_lower = std::min(r.min_norm_variance_lower, v.lower());
        r.max_norm_variance_upper = std::max(r.max_norm_variance_upper, v.upper());
    }
    const bool far_ok = r.max_far_cov_upper < opt.cov_tol;
    // max_far_cov is exact in closed form and a 4 SE lower bound otherwise.
    const bool far_bad = r.max_far_cov >= opt.cov_tol;
    bool var_bad = false;
    for (const auto& v : r.norm_variance) {
        var_bad = var_bad || v.upper() <= opt.var_margin;
    }
    const bool var_ok = r.min_norm_variance_lower > opt.var_margin;

    std::ostringstream detail;
    detail << "max far covariance " << r.max_far_cov << " (upper " << r.max_far_cov_upper
           << ") vs tol " << opt.cov_tol << "; Var|X| lower bound " << r.min_norm_variance_lower
           << " vs margin " << opt.var_margin;
    r.detail = detail.str();
    if (far_bad || var_bad) {
        r.verdict = LemmaVerdict::HypothesesFailed;
    } else if (far_ok && var_ok) {
        r.verdict = LemmaVerdict::HypothesesSatisfied;
    } else {
        r.verdict = LemmaVerdict::Undecided;
    }
}

} // namespace

SampledFunction expression_function(const TimeExpr& fn, double t0, double window, double h) {
    SampledFunction f;
    f.name = fn.source();
    f.t0 = t0;
    f.window = window;
    f.h = h;
    f.distance = [fn](double s, double t) { return std::abs(fn(t) - fn(s)); };
    return f;
}

SampledFunction l2_function(const GaussianProcessSpec& spec, double t0, double window, double h) {
    SampledFunction f;
    f.name = "L2[" + spec.name + "]";
    f.t0 = t0;
    f.window = window;
    f.h = h;
    f.distance = [spec](double s, double t) {
        return std::sqrt(l2_increment(spec, std::min(s, t), std::abs(t - s)));
    };
    return f;
}

Witness sup_distance(const SampledFunction& f, double tau, double compare_end) {
    const std::size_t last = last_compare_index(f, compare_end);
    Witness w{f.t0, tau, -1.0};
    for (std::size_t i = 0; i <= last; ++i) {
        const double t = f.t0 + f.h * static_cast<double>(i);
        const double d = f.distance(t + tau, t);
        if (d > w.distance || std::isnan(d)) {
            w.distance = d;
            w.t = t;
            if (std::isnan(d)) {
                break;
            }
        }
    }
    return w;
}

AlmostPeriodReport scan_almost_periods(const SampledFunction& f, double epsilon, double tau_min,
                                       double tau_max, double tau_step,
                                       std::optional<double> max_inclusion) {
    check_function(f);
    if (!(tau_step > 0.0) || !(tau_max >= tau_min)) {
        throw std::invalid_argument("scan_almost_periods: need tau_min <= tau_max and tau_step > 0");
    }
    const double compare_end = compare_end_for(f, tau_max);
    AlmostPeriodReport r = blank_report(f, epsilon, compare_end);
    r.tau_min = tau_min;
    r.tau_max = tau_max;
    r.tau_step = tau_step;

    const auto count = static_cast<std::size_t>(std::floor((tau_max - tau_min) / tau_step + kGrid)) + 1;
    r.curve.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double tau = std::min(tau_max, tau_min + tau_step * static_cast<double>(k));
        r.curve.push_back(sup_distance(f, tau, compare_end));
        if (r.curve.back().distance <= epsilon) {
            r.taus_found.push_back(tau);
            r.witnesses.push_back(r.curve.back());
        }
    }
    for (std::size_t k = 1; k + 1 < r.curve.size(); ++k) {
        const double here = r.curve[k].distance;
        if (here > epsilon && here < r.curve[k - 1].distance && here <= r.curve[k + 1].distance) {
            const Witness best = golden_minimum(f, r.curve[k - 1].tau, r.curve[k + 1].tau, compare_end);
            if (best.distance <= epsilon) {
                r.taus_found.push_back(best.tau);
                r.witnesses.push_back(best);
                ++r.refined;
            }
        }
    }
    finish_report(r, max_inclusion);
    return r;
}

AlmostPeriodReport scan_almost_periods(const SampledFunction& f, double epsilon,
                                       std::span<const double> candidates,
                                       std::optional<double> max_inclusion) {
    check_function(f);
    if (candidates.empty()) {
        throw std::invalid_argument("scan_almost_periods: no candidates");
    }
    const auto [lo, hi] = std::minmax_element(candidates.begin(), candidates.end());
    const double compare_end = compare_end_for(f, *hi);
    AlmostPeriodReport r = blank_report(f, epsilon, compare_end);
    r.tau_min = *lo;
    r.tau_max = *hi;
    for (double tau : candidates) {
        r.curve.push_back(sup_distance(f, tau, compare_end));
        if (r.curve.back().distance <= epsilon) {
            r.taus_found.push_back(tau);
            r.witnesses.push_back(r.curve.back());
        }
    }
    finish_report(r, max_inclusion);
    return r;
}

double inclusion_length(std::span<const double> taus, double a, double b) {
    double prev = a;
    double widest = 0.0;
    bool any = false;
    for (double tau : taus) {
        if (tau < a || tau > b) {
            continue;
        }
        if (any && tau < prev) {
            throw std::invalid_argument("inclusion_length: taus must be sorted");
        }
        widest = std::max(widest, tau - prev);
        prev = tau;
        any = true;
    }
    if (!any) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max(widest, b - prev);
}

bool relatively_dense(std::span<const double> taus, double a, double b, double L) {
    return inclusion_length(taus, a, b) <= L;
}

double LinGrid::at(std::size_t i) const {
    if (count <= 1) {
        return start;
    }
    if (i + 1 == count) {
        return stop;
    }
    return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::string to_string(FalsifyVerdict v) {
    return v == FalsifyVerdict::NotMeanSquareAp ? "not mean-square almost periodic on tested range"
                                                : "inconclusive";
}

std::string to_string(LemmaVerdict v) {
    switch (v) {
    case LemmaVerdict::HypothesesSatisfied:
        return "hypotheses-satisfied";
    case LemmaVerdict::HypothesesFailed:
        return "hypotheses-failed";
    case LemmaVerdict::Undecided:
        return "undecided";
    }
    return "unknown";
}

MsFalsification ms_ap_falsify(const GaussianProcessSpec& spec, const LinGrid& tau_grid,
                              const LinGrid& t_grid, double tol) {
    if (tau_grid.count == 0 || t_grid.count == 0 || tau_grid.start < 0.0 ||
        tau_grid.stop < tau_grid.start || t_grid.stop < t_grid.start) {
        throw std::invalid_argument("ms_ap_falsify: invalid grids");
    }
    MsFalsification out;
    out.tol = tol;
    out.t_grid = t_grid;
    out.tau_grid = tau_grid;
    out.c = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tau_grid.count; ++j) {
        const double tau = tau_grid.at(j);
        for (std::size_t i = 0; i < t_grid.count; ++i) {
            const double t = t_grid.at(i);
            const double inc = l2_increment(spec, t, tau);
            if (inc < out.c) {
                out.c = inc;
                out.argmin_t = t;
                out.argmin_tau = tau;
            }
        }
    }
    out.epsilon_bound = std::sqrt(out.c);
    out.verdict = out.c > tol ? FalsifyVerdict::NotMeanSquareAp : FalsifyVerdict::Inconclusive;
    return out;
}

LemmaReport lemma_check(const GaussianProcessSpec& spec, const ProbeSequence& probe,
                        std::size_t n_mc, std::uint64_t seed, const LemmaOptions& options) {
    validate_probe(probe, spec.dim, options);
    if (n_mc < 2) {
        throw std::invalid_argument("lemma_check: need at least 2 draws");
    }
    const std::size_t k = probe.times.size();
    const auto ki = static_cast<Eigen::Index>(k);
    LemmaReport r;
    r.options = options;
    r.closed_form = true;
    r.cov.resize(ki, ki);
    r.cov_se = Eigen::MatrixXd::Zero(ki, ki);
    for (Eigen::Index i = 0; i < ki; ++i) {
        for (Eigen::Index j = i; j < ki; ++j) {
            const double c = probe.direction.dot(
                spec.kernel(probe.times[static_cast<std::size_t>(i)], probe.times[static_cast<std::size_t>(j)]) *
                probe.direction);
            r.cov(i, j) = r.cov(j, i) = c;
        }
    }
    for (Eigen::Index i = 0; i < ki; ++i) {
        for (Eigen::Index j = i + static_cast<Eigen::Index>(options.gap); j < ki; ++j) {
            r.max_far_cov = std::max(r.max_far_cov, std::abs(r.cov(i, j)));
        }
        r.probe_variance.push_back(r.cov(i, i));
    }
    r.max_far_cov_upper = r.max_far_cov;

    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (n_mc + chunk - 1) / chunk;
    for (std::size_t m = 0; m < k; ++m) {
        const double t = probe.times[m];
        const Eigen::VectorXd mean = spec.mean(t);
        const Eigen::MatrixXd factor = linalg::sqrtm_psd(spec.kernel(t, t));
        const std::uint64_t base = static_cast<std::uint64_t>(m) << 40;
        std::vector<Moments> partial(chunks);
        for_each_chunk(n_mc, chunk, [&](std::size_t begin, std::size_t end) {
            Moments& acc = partial[begin / chunk];
            Eigen::VectorXd z(mean.size());
            for (std::size_t i = begin; i < end; ++i) {
                CounterRng rng(seed, base | i);
                if (mean.size() == 1) {
                    acc.push(std::abs(mean(0) + factor(0, 0) * rng.normal()));
                    continue;
                }
                for (Eigen::Index q = 0; q < z.size(); ++q) {
                    z(q) = rng.normal();
                }
                acc.push((mean + factor * z).norm());
            }
        });
        Moments total;
        for (const auto& p : partial) {
            total.merge(p);
        }
        r.norm_variance.push_back(
            {total.variance(), total.variance_se(), n_mc, seed, spec.name, "MarginalFactor"});
    }
    decide(r);
    return r;
}

LemmaReport lemma_check(const ProcessSampler& sampler, const ProbeSequence& probe,
                        std::size_t n_mc, std::uint64_t seed, const LemmaOptions& options) {
    validate_probe(probe, sampler.dim, options);
    if (n_mc < 100) {
        throw std::invalid_argument("lemma_check: need at least 100 paths");
    }
    const std::size_t k = probe.times.size();
    const auto ki = static_cast<Eigen::Index>(k);
    const auto n = static_cast<Eigen::Index>(n_mc);
    Eigen::MatrixXd proj(n, ki);
    Eigen::MatrixXd norms(n, ki);
    for_each_chunk(n_mc, 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Eigen::MatrixXd path = sampler.draw(probe.times, seed, i);
            const auto row = static_cast<Eigen::Index>(i);
            proj.row(row) = (path * probe.direction).transpose();
            norms.row(row) = path.rowwise().norm().transpose();
        }
    });

    LemmaReport r;
    r.options = options;
    r.closed_form = false;
    const double nd = static_cast<double>(n_mc);
    const Eigen::MatrixXd centered = proj.rowwise() - proj.colwise().mean();
    r.cov = centered.transpose() * centered / (nd - 1.0);
    r.cov_se = Eigen::MatrixXd::Zero(ki, ki);
    for (Eigen::Index i = 0; i < ki; ++i) {
        for (Eigen::Index j = i; j < ki; ++j) {
            const Eigen::ArrayXd prod = centered.col(i).array() * centered.col(j).array();
            const double var = (prod - prod.mean()).square().sum() / (nd - 1.0);
            r.cov_se(i, j) = r.cov_se(j, i) = std::sqrt(var / nd);
        }
        r.probe_variance.push_back(r.cov(i, i));
    }
    for (Eigen::Index i = 0; i < ki; ++i) {
        for (Eigen::Index j = i + static_cast<Eigen::Index>(options.gap); j < ki; ++j) {
            r.max_far_cov = std::max(r.max_far_cov, std::abs(r.cov(i, j)) - 4.0 * r.cov_se(i, j));
            r.max_far_cov_upper =
                std::max(r.max_far_cov_upper, std::abs(r.cov(i, j)) + 4.0 * r.cov_se(i, j));
        }
    }
    for (Eigen::Index j = 0; j < ki; ++j) {
        Moments m;
        for (Eigen::Index i = 0; i < n; ++i) {
            m.push(norms(i, j));
        }
        r.norm_variance.push_back({m.variance(), m.variance_se(), n_mc, seed, sampler.name, sampler.method});
    }
    decide(r);
    return r;
}

double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2,
                   const Eigen::MatrixXd& c2) {
    if (m1.size() != m2.size() || c1.rows() != m1.size() || c2.rows() != m2.size() ||
        c1.cols() != c1.rows() || c2.cols() != c2.rows()) {
        throw std::invalid_argument("gaussian_w2: dimension mismatch");
    }
    Eigen::MatrixXd a = c1;
    Eigen::MatrixXd b = c2;
    linalg::enforce_psd(a);
    linalg::enforce_psd(b);
    const Eigen::MatrixXd ra = linalg::sqrtm_psd(a);
    const Eigen::MatrixXd rb = linalg::sqrtm_psd(b);
    double bures2 = 0.0;
    if (ra.rows() == 1) {
        bures2 = (ra(0, 0) - rb(0, 0)) * (ra(0, 0) - rb(0, 0));
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(rb.transpose() * ra, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
        bures2 = (ra - rb * rot).squaredNorm();
    }
    return std::sqrt((m1 - m2).squaredNorm() + bures2);
}

AlmostPeriodReport distribution_ap_check(const GaussianProcessSpec& spec,
                                         std::span<const double> offsets,
                                         std::span<const double> tau_candidates, double epsilon,
                                         double t_start, double t_window, double t_step) {
    check_offsets(offsets);
    if (tau_candidates.empty()) {
        throw std::invalid_argument("distribution_ap_check: no tau candidates");
    }
    const double reach = std::max(0.0, *std::max_element(tau_candidates.begin(), tau_candidates.end()));
    const SampledFunction f = law_function(spec, offsets, t_start, t_window + reach, t_step);
    return scan_almost_periods(f, epsilon, tau_candidates);
}

AlmostPeriodReport distribution_ap_scan(const GaussianProcessSpec& spec,
                                        std::span<const double> offsets, double epsilon,
                                        double tau_min, double tau_max, double tau_step,
                                        double t_start, double t_window, double t_step) {
    check_offsets(offsets);
    const SampledFunction f =
        law_function(spec, offsets, t_start, t_window + std::max(0.0, tau_max), t_step);
    return scan_almost_periods(f, epsilon, tau_min, tau_max, tau_step);
}

} // namespace apsde
