#include <cmath>
#include <numbers>
#include <vector>

#include "apsde/ap_analysis.hpp"
#include "apsde/estimators.hpp"
#include "apsde/evolution.hpp"
#include "apsde/experiment.hpp"
#include "apsde/linalg.hpp"
#include "apsde/rng.hpp"
#include "apsde/sampler.hpp"
#include "apsde/table.hpp"
#include "experiment_detail.hpp"

namespace apsde {

using namespace detail;

namespace {

constexpr double kPi = std::numbers::pi;

struct Checks {
    Json list = Json::object();
    bool all = true;

    void add(const std::string& name, bool ok) {
        list[name] = ok;
        all = all && ok;
    }
};

Json ou_kernel_section(std::uint64_t seed, Checks& checks, RunResult& r) {
    Table t;
    t.comments.push_back("OU covariance: closed form vs exact-recursion Monte Carlo");
    t.comments.push_back("n=100000 generator=" + std::string(kGeneratorId));
    t.columns = {"alpha", "sigma", "t", "tau", "exact", "mc", "mc_se", "seed"};
    Json rows = Json::array();
    bool all = true;
    std::uint64_t k = 0;
    for (auto [alpha, sigma] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}}) {
        const OuParams p(alpha, sigma);
        const ProcessSampler s = ou_sampler(p);
        for (double t0 : {0.0, 1.0, 5.0}) {
            for (double tau : {0.0, std::log(2.0), 1.0, 5.0}) {
                const std::uint64_t sd = sub_seed(seed, 100 + k++);
                const McEstimate e = mc_cov(s, t0, t0 + tau, 100'000, sd);
                const double exact = p.variance() * std::exp(-alpha * tau);
                const bool ok = e.covers(exact);
                all = all && ok;
                t.rows.push_back({alpha, sigma, t0, tau, exact, e.value, e.std_error, static_cast<double>(sd)});
                rows.push_back({{"alpha", alpha}, {"sigma", sigma}, {"t", t0}, {"tau", num(tau)},
                                {"exact", num(exact)}, {"mc", estimate(e)}, {"within_4se", ok}});
            }
        }
    }
    r.artifacts.push_back({"ou_kernel.csv", to_csv(t)});
    checks.add("ou_kernel_within_4se", all);
    return Json{{"rows", std::move(rows)}, {"all_within_4se", all}};
}

Json periodic_variance_section(std::uint64_t seed, const StabilityEstimate& stab, Checks& checks,
                               RunResult& r) {
    const EvolutionSystem sys = periodic_example_system();
    const ProcessSampler s = periodic_sampler();
    Table t;
    t.comments.push_back("periodic example variance: stochastic-convolution quadrature vs exact sampler");
    t.comments.push_back("n=1000000 generator=" + std::string(kGeneratorId));
    t.columns = {"t", "quadrature", "mc", "mc_se"};
    Json rows = Json::array();
    bool all = true;
    std::uint64_t k = 0;
    for (double time : {0.0, kPi / 2, kPi, 3.0}) {
        const double quad = variance_condition(sys, time, 1e-2, 1e-12, stab);
        const McEstimate e = mc_cov(s, time, time, 1'000'000, sub_seed(seed, 200 + k++));
        const bool ok = std::abs(quad - 0.5) <= 0.005 && std::abs(e.value - 0.5) <= 0.005;
        all = all && ok;
        t.rows.push_back({time, quad, e.value, e.std_error});
        rows.push_back({{"t", num(time)}, {"quadrature", num(quad)}, {"mc", estimate(e)}, {"within_0.005", ok}});
    }
    r.artifacts.push_back({"periodic_variance.csv", to_csv(t)});

    const double exact = 0.5 * std::exp(-2 * kPi);
    const double quad = convolution_covariance(sys, 0.0, 2 * kPi, 1e-2, 1e-12, stab)(0, 0);
    const McEstimate e = mc_cov(s, 0.0, 2 * kPi, 1'000'000, sub_seed(seed, 210));
    const bool cov_ok = e.covers(exact) && std::abs(quad - exact) <= 1e-6;
    checks.add("periodic_variance_half", all);
    checks.add("periodic_cov_two_pi", cov_ok);
    return Json{{"variance", std::move(rows)},
                {"cov_0_2pi",
                 {{"exact", num(exact)}, {"quadrature", num(quad)}, {"mc", estimate(e)}, {"ok", cov_ok}}},
                {"note", "Var X_t is the constant 1/2; a closed form 1/2 e^{2 sin t} is not consistent "
                         "with the Ito isometry"}};
}

Json separation_section(const GaussianProcessSpec& spec, std::vector<double> taus, const std::string& key,
                        Checks& checks, RunResult& r) {
    const std::vector<double> offsets{0.0, 1.0, 2.0, 3.0, 4.0};
    const AlmostPeriodReport dist = distribution_ap_check(spec, offsets, taus, 1e-10, 0.0, 2 * kPi, 0.05);
    const MsFalsification ms = ms_ap_falsify(spec, LinGrid{kPi, 100.0, 2001}, LinGrid{0.0, 2 * kPi, 126});
    double dist_two_pi = std::numeric_limits<double>::infinity();
    for (const auto& w : dist.curve) {
        if (w.tau == 2 * kPi) {
            dist_two_pi = w.distance;
        }
    }
    const bool dist_ok = dist_two_pi <= 1e-10;
    const bool ms_ok = ms.verdict == FalsifyVerdict::NotMeanSquareAp && ms.c >= 0.5;
    r.artifacts.push_back({key + "_w2_curve.csv", to_csv(curve_table(dist))});
    checks.add(key + "_periodic_in_distribution", dist_ok);
    checks.add(key + "_not_mean_square_ap", ms_ok);
    Json curve = Json::array();
    for (const auto& w : dist.curve) {
        curve.push_back(witness(w));
    }
    return Json{{"distribution",
                 {{"offsets", numbers(offsets)},
                  {"candidates", curve},
                  {"tau", num(2 * kPi)},
                  {"distance", num(dist_two_pi)},
                  {"report", ap_report(dist)}}},
                {"ms_falsify", falsification(ms)},
                {"separation", dist_ok && ms_ok}};
}

Json lemma_section(std::uint64_t seed, Checks& checks, RunResult& r) {
    ProbeSequence ou_probe;
    for (int n = 1; n <= 30; ++n) {
        ou_probe.times.push_back(n);
    }
    ou_probe.direction = Eigen::VectorXd::Ones(1);
    const LemmaReport ou = lemma_check(ou_spec(OuParams(1, 1)), ou_probe, 1'000'000, sub_seed(seed, 300));
    bool var_ok = true;
    for (const auto& v : ou.norm_variance) {
        var_ok = var_ok && v.covers(1.0 - 2.0 / kPi);
    }
    r.artifacts.push_back({"ou_covariance_decay.csv", to_csv(lemma_table(ou, ou_probe.times))});

    ProbeSequence per_probe;
    for (int n = 1; n <= 30; ++n) {
        per_probe.times.push_back(2 * kPi * n);
    }
    per_probe.direction = Eigen::VectorXd::Ones(1);
    const LemmaReport per = lemma_check(periodic_example_spec(), per_probe, 100'000, sub_seed(seed, 301));
    r.artifacts.push_back({"periodic_covariance_decay.csv", to_csv(lemma_table(per, per_probe.times))});

    checks.add("ou_lemma_hypotheses", ou.verdict == LemmaVerdict::HypothesesSatisfied && ou.max_far_cov < 1e-4);
    checks.add("ou_norm_variance_1_minus_2_over_pi", var_ok);
    checks.add("periodic_lemma_hypotheses", per.verdict == LemmaVerdict::HypothesesSatisfied);
    Json jo = lemma(ou);
    jo["expected_norm_variance"] = num(1.0 - 2.0 / kPi);
    jo["norm_variance_within_4se"] = var_ok;
    return Json{{"ou", std::move(jo)}, {"periodic_example", lemma(per)}};
}

Json propagator_section(std::uint64_t seed, Checks& checks) {
    const EvolutionSystem sys = periodic_example_system();
    CounterRng rng(sub_seed(seed, 400), 0);
    double max_err = 0.0;
    double max_defect = 0.0;
    Json pairs = Json::array();
    for (int i = 0; i < 20; ++i) {
        double s = -10.0 + 20.0 * rng.uniform();
        double t = -10.0 + 20.0 * rng.uniform();
        if (s > t) {
            std::swap(s, t);
        }
        const double mid = s + (t - s) * rng.uniform();
        const PropagatorEval u = propagator(sys, s, t, 1e-3);
        const double err = std::abs(u.U(0, 0) - periodic_example_propagator(t, s));
        const double defect =
            std::abs(propagator(sys, mid, t, 1e-3).U(0, 0) * propagator(sys, s, mid, 1e-3).U(0, 0) - u.U(0, 0));
        max_err = std::max(max_err, err);
        max_defect = std::max(max_defect, defect);
        pairs.push_back({{"s", num(s)}, {"t", num(t)}, {"r", num(mid)}, {"U", num(u.U(0, 0))},
                         {"error", num(err)}, {"err_est", num(u.err_est)}, {"cocycle_defect", num(defect)}});
    }
    const bool ok = max_err <= 1e-8 && max_defect <= 1e-7;
    checks.add("propagator_accuracy", ok);
    return Json{{"step", 1e-3}, {"max_error", num(max_err)}, {"max_cocycle_defect", num(max_defect)},
                {"pairs", std::move(pairs)}};
}

Json hypotheses_section(const StabilityEstimate& stab, Checks& checks) {
    const EvolutionSystem sys = periodic_example_system();
    std::vector<double> grid(629);
    const LinGrid lg{0.0, 2 * kPi, grid.size()};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = lg.at(i);
    }
    const double beta = check_dissipativity(sys, grid);
    Json var = Json::array();
    bool var_ok = true;
    for (double t : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        const double v = variance_condition(sys, t, 1e-2, 1e-12, stab);
        var_ok = var_ok && std::abs(v - 0.5) <= 1e-6;
        var.push_back({{"t", t}, {"value", num(v)}});
    }
    const double log_m = std::log(stab.M);
    const bool stab_ok = std::abs(stab.delta - 1.0) <= 0.01 && log_m >= 1.99 && log_m <= 2.01;
    checks.add("exponential_stability_certified", stab_ok);
    checks.add("dissipativity_margin_zero", std::abs(beta) <= 1e-9);
    checks.add("variance_condition_half", var_ok);
    return Json{{"system", sys.name},
                {"dissipativity", {{"beta", num(beta)}, {"holds", beta > 0.0},
                                   {"note", "beta = 0: uniform dissipativity fails while exponential stability holds"}}},
                {"exponential_stability", stability(stab)},
                {"variance_condition", std::move(var)}};
}

Json crosscheck_section(const StabilityEstimate& per_stab, Checks& checks, RunResult& r) {
    const std::vector<std::pair<double, double>> pairs{{0.0, 0.0}, {0.0, 2 * kPi}, {0.0, kPi}, {1.0, 1.5},
                                                       {-3.0, 2.0}, {2.0, 2.1}, {4.0, 9.0}, {-7.5, -7.0},
                                                       {5.0, 5.0}, {10.0, 13.0}};
    Table t;
    t.comments.push_back("stochastic convolution covariance vs closed-form kernels");
    t.columns = {"system", "t1", "t2", "kernel", "convolution", "abs_error"};
    double max_err = 0.0;
    Json rows = Json::array();
    const EvolutionSystem ou_sys = ou_system(OuParams(1, 1));
    const StabilityEstimate ou_stab = default_stability(ou_sys);
    const GaussianProcessSpec ou = ou_spec(OuParams(1, 1));
    const EvolutionSystem per_sys = periodic_example_system();
    const GaussianProcessSpec per = periodic_example_spec();
    for (int which = 0; which < 2; ++which) {
        for (auto [t1, t2] : pairs) {
            const double kernel = (which == 0 ? ou : per).kernel(t1, t2)(0, 0);
            const double conv = convolution_covariance(which == 0 ? ou_sys : per_sys, t1, t2, 1e-2, 1e-12,
                                                       which == 0 ? ou_stab : per_stab)(0, 0);
            const double err = std::abs(kernel - conv);
            max_err = std::max(max_err, err);
            t.rows.push_back({static_cast<double>(which), t1, t2, kernel, conv, err});
            rows.push_back({{"system", which == 0 ? "ou" : "periodic_example"}, {"t1", num(t1)}, {"t2", num(t2)},
                            {"kernel", num(kernel)}, {"convolution", num(conv)}, {"abs_error", num(err)}});
        }
    }
    t.comments.push_back("system 0 = ou(1,1), 1 = periodic_example");
    r.artifacts.push_back({"convolution_crosscheck.csv", to_csv(t)});
    checks.add("convolution_matches_kernels", max_err <= 1e-6);
    return Json{{"max_abs_error", num(max_err)}, {"pairs", std::move(rows)}};
}

Json convolution_demo_section(Checks& checks) {
    // The law of the stochastic convolution, computed only from (A, g, Q).
    const GaussianProcessSpec spec = evolution_spec(periodic_example_system(), 1e-2, 1e-10);
    const MsFalsification ms = ms_ap_falsify(spec, LinGrid{kPi, 4 * kPi, 13}, LinGrid{0.0, 2 * kPi, 9});
    const std::vector<double> offsets{0.0, 1.0};
    const std::vector<double> taus{2 * kPi};
    const AlmostPeriodReport dist = distribution_ap_check(spec, offsets, taus, 1e-6, 0.0, 2 * kPi, 0.5);
    const bool ok = ms.verdict == FalsifyVerdict::NotMeanSquareAp && ms.c >= 0.5 && !dist.taus_found.empty();
    checks.add("stochastic_convolution_not_mean_square_ap", ok);
    return Json{{"spec", spec.name},
                {"ms_falsify", falsification(ms)},
                {"distribution_two_pi", witness(dist.curve.front())},
                {"periodic_in_distribution", !dist.taus_found.empty()}};
}

Json calibration_section(std::uint64_t seed, Checks& checks, RunResult& r) {
    const ProcessSampler s = ou_sampler(OuParams(1, 1));
    const double truth = std::exp(-1.0);
    Table t;
    t.comments.push_back("CI calibration: Cov(X_0, X_1) of ou(1,1), n=10000 per seed, truth e^-1");
    t.columns = {"index", "seed", "value", "std_error", "covered"};
    std::size_t covered = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const std::uint64_t sd = sub_seed(seed, 1000 + i);
        const McEstimate e = mc_cov(s, 0.0, 1.0, 10'000, sd);
        const bool ok = e.covers(truth);
        covered += ok ? 1 : 0;
        t.rows.push_back({static_cast<double>(i), static_cast<double>(sd), e.value, e.std_error, ok ? 1.0 : 0.0});
    }
    r.artifacts.push_back({"ci_calibration.csv", to_csv(t)});
    checks.add("ci_calibration", covered >= 195);
    return Json{{"seeds", 200}, {"n", 10'000}, {"covered", covered}, {"required", 195}};
}

} // namespace

RunResult run_repro(std::uint64_t seed) {
    RunResult r;
    r.report = header("repro", seed);
    Checks checks;

    const StabilityEstimate per_stab = check_exponential_stability(periodic_example_system(), 6 * kPi, 1e-3);

    r.report["ou_kernel"] = ou_kernel_section(seed, checks, r);
    r.report["periodic_variance"] = periodic_variance_section(seed, per_stab, checks, r);

    const MsFalsification ou_ms =
        ms_ap_falsify(ou_spec(OuParams(1, 1)), LinGrid{1.0, 50.0, 491}, LinGrid{0.0, 20.0, 41});
    const double ou_c = 2.0 * (1.0 - std::exp(-1.0));
    checks.add("ou_ms_falsified", ou_ms.verdict == FalsifyVerdict::NotMeanSquareAp &&
                                      std::abs(ou_ms.c - ou_c) <= 1e-9);
    r.report["ou_ms_falsify"] = falsification(ou_ms);
    r.report["ou_ms_falsify"]["closed_form"] = num(ou_c);

    r.report["separation"] = {
        {"periodic_example", separation_section(periodic_example_spec(), {kPi, 2 * kPi}, "periodic_example",
                                                checks, r)},
        {"ou", separation_section(ou_spec(OuParams(1, 1)), {1.0, 2 * kPi}, "ou", checks, r)}};
    r.report["lemma"] = lemma_section(seed, checks, r);
    r.report["propagator"] = propagator_section(seed, checks);
    r.report["hypotheses"] = hypotheses_section(per_stab, checks);
    r.report["convolution_crosscheck"] = crosscheck_section(per_stab, checks, r);
    r.report["stochastic_convolution"] = convolution_demo_section(checks);
    r.report["ci_calibration"] = calibration_section(seed, checks, r);

    const UniformGrid grid{0.0, 0.01, 2000};
    r.artifacts.push_back({"ou_path.csv", to_csv(path_table(sample_ou_exact(OuParams(1, 1), grid, seed)))});
    r.artifacts.push_back({"periodic_path.csv", to_csv(path_table(sample_periodic_exact(grid, seed)))});

    r.report["checks"] = checks.list;
    finish(r, checks.all ? "all counterexample checks reproduced" : "some checks were not reproduced",
           checks.all ? exit_code::kSuccess : exit_code::kInconclusive);
    return r;
}

} // namespace apsde
