#include "apsde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "apsde/ap_analysis.hpp"
#include "apsde/errors.hpp"
#include "apsde/estimators.hpp"
#include "apsde/expr.hpp"
#include "apsde/rng.hpp"
#include "apsde/table.hpp"
#include "experiment_detail.hpp"

namespace apsde {

namespace detail {

Json num(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return format_number(v);
}

Json numbers(std::span<const double> v) {
    Json a = Json::array();
    for (double x : v) {
        a.push_back(num(x));
    }
    return a;
}

Json matrix(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(num(m(i, j)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json estimate(const McEstimate& e) {
    return Json{{"value", num(e.value)},
                {"std_error", num(e.std_error)},
                {"n", e.n},
                {"seed", e.seed},
                {"sampler", e.sampler},
                {"method", e.method},
                {"generator", std::string(kGeneratorId)}};
}

Json witness(const Witness& w) {
    return Json{{"t", num(w.t)}, {"tau", num(w.tau)}, {"distance", num(w.distance)}};
}

Json ap_report(const AlmostPeriodReport& r) {
    Json w = Json::array();
    for (const auto& x : r.witnesses) {
        w.push_back(witness(x));
    }
    return Json{{"function", r.function},
                {"epsilon", num(r.epsilon)},
                {"taus_found", numbers(r.taus_found)},
                {"window", {num(r.window_start), num(r.window_end)}},
                {"compare_end", num(r.compare_end)},
                {"t_step", num(r.t_step)},
                {"search_range", {num(r.tau_min), num(r.tau_max)}},
                {"tau_step", num(r.tau_step)},
                {"refined", r.refined},
                {"inclusion_length", num(r.inclusion_length)},
                {"max_inclusion", num(r.max_inclusion)},
                {"relatively_dense", r.relatively_dense},
                {"witnesses", std::move(w)}};
}

Table curve_table(const AlmostPeriodReport& r) {
    Table t;
    t.comments.push_back("sup-distance curve of " + r.function);
    t.comments.push_back("epsilon=" + format_number(r.epsilon));
    t.columns = {"tau", "sup_distance", "t_at_sup"};
    for (const auto& w : r.curve) {
        t.rows.push_back({w.tau, w.distance, w.t});
    }
    return t;
}

Json falsification(const MsFalsification& f) {
    return Json{{"c", num(f.c)},
                {"epsilon_bound", num(f.epsilon_bound)},
                {"argmin_t", num(f.argmin_t)},
                {"argmin_tau", num(f.argmin_tau)},
                {"tol", num(f.tol)},
                {"t_grid", {{"start", num(f.t_grid.start)}, {"stop", num(f.t_grid.stop)}, {"count", f.t_grid.count}}},
                {"tau_grid",
                 {{"start", num(f.tau_grid.start)}, {"stop", num(f.tau_grid.stop)}, {"count", f.tau_grid.count}}},
                {"verdict", to_string(f.verdict)}};
}

Json lemma(const LemmaReport& r) {
    Json var = Json::array();
    for (const auto& v : r.norm_variance) {
        var.push_back(estimate(v));
    }
    return Json{{"closed_form", r.closed_form},
                {"gap", r.options.gap},
                {"cov_tol", num(r.options.cov_tol)},
                {"var_margin", num(r.options.var_margin)},
                {"max_far_cov", num(r.max_far_cov)},
                {"max_far_cov_upper", num(r.max_far_cov_upper)},
                {"min_norm_variance_lower", num(r.min_norm_variance_lower)},
                {"max_norm_variance_upper", num(r.max_norm_variance_upper)},
                {"probe_variance", numbers(r.probe_variance)},
                {"norm_variance", std::move(var)},
                {"verdict", to_string(r.verdict)},
                {"detail", r.detail}};
}

Table lemma_table(const LemmaReport& r, std::span<const double> times) {
    Table t;
    t.comments.push_back("covariance decay Cov(<x*,X_tn>, <x*,X_tm>)");
    t.columns = {"n", "m", "t_n", "t_m", "cov", "cov_se"};
    for (Eigen::Index i = 0; i < r.cov.rows(); ++i) {
        for (Eigen::Index j = i; j < r.cov.cols(); ++j) {
            t.rows.push_back({static_cast<double>(i), static_cast<double>(j), times[static_cast<std::size_t>(i)],
                              times[static_cast<std::size_t>(j)], r.cov(i, j), r.cov_se(i, j)});
        }
    }
    return t;
}

Json stability(const StabilityEstimate& s) {
    return Json{{"M", num(s.M)},
                {"log_M", num(std::log(s.M))},
                {"delta", num(s.delta)},
                {"beta", num(s.beta)},
                {"grid",
                 {{"base_start", num(s.grid.base_start)},
                  {"base_end", num(s.grid.base_end)},
                  {"base_count", s.grid.base_count},
                  {"horizon", num(s.grid.horizon)},
                  {"step", num(s.grid.step)},
                  {"periodic_bases", s.grid.periodic_bases},
                  {"inflation", num(s.grid.inflation)}}}};
}

Json header(const std::string& experiment, std::uint64_t seed) {
    return Json{{"tool", {{"name", "apsde"}, {"version", std::string(kToolVersion)}}},
                {"experiment", experiment},
                {"reproduction", {{"seed", seed}, {"generator", std::string(kGeneratorId)}}}};
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) {
    CounterRng rng(seed, (std::uint64_t{1} << 62) | k);
    return rng.next_u64() >> 11;  // exactly representable in CSV double columns
}

void finish(RunResult& r, const std::string& verdict, int code) {
    r.exit_code = code;
    r.report["verdict"] = verdict;
    r.report["exit_code"] = code;
    Json names = Json::array();
    for (const auto& a : r.artifacts) {
        names.push_back(a.name);
    }
    names.push_back("report.json");
    r.report["artifacts"] = std::move(names);
    r.artifacts.push_back({"report.json", r.report.dump(2) + "\n"});
}

} // namespace detail

using namespace detail;

EvolutionSystem build_system(const SystemConfig& cfg) {
    switch (cfg.kind) {
    case SystemConfig::Kind::Ou:
        return ou_system(OuParams(cfg.alpha, cfg.sigma));
    case SystemConfig::Kind::PeriodicExample:
        return periodic_example_system();
    case SystemConfig::Kind::Custom:
        break;
    }
    const auto compile = [](const std::vector<std::vector<std::string>>& src) {
        std::vector<std::vector<TimeExpr>> rows;
        for (const auto& r : src) {
            std::vector<TimeExpr> row;
            for (const auto& e : r) {
                row.push_back(TimeExpr::parse(e));
            }
            rows.push_back(std::move(row));
        }
        return MatrixExpr(std::move(rows));
    };
    return expression_system(cfg.name, compile(cfg.drift), compile(cfg.noise), cfg.noise_cov,
                             cfg.period_hint);
}

GaussianProcessSpec build_spec(const SystemConfig& cfg) {
    switch (cfg.kind) {
    case SystemConfig::Kind::Ou:
        return ou_spec(OuParams(cfg.alpha, cfg.sigma));
    case SystemConfig::Kind::PeriodicExample:
        return periodic_example_spec();
    case SystemConfig::Kind::Custom:
        break;
    }
    return evolution_spec(build_system(cfg), cfg.step, cfg.tail_tol);
}

namespace {

ProcessSampler exact_sampler(const SystemConfig& cfg, const GaussianProcessSpec& spec) {
    switch (cfg.kind) {
    case SystemConfig::Kind::Ou:
        return ou_sampler(OuParams(cfg.alpha, cfg.sigma));
    case SystemConfig::Kind::PeriodicExample:
        return periodic_sampler();
    case SystemConfig::Kind::Custom:
        break;
    }
    return marginal_sampler(spec);
}

Json system_json(const SystemConfig& cfg, const GaussianProcessSpec* spec) {
    Json j;
    switch (cfg.kind) {
    case SystemConfig::Kind::Ou:
        j = {{"builtin", "ou"}, {"alpha", num(cfg.alpha)}, {"sigma", num(cfg.sigma)}};
        break;
    case SystemConfig::Kind::PeriodicExample:
        j = {{"builtin", "periodic_example"}};
        break;
    case SystemConfig::Kind::Custom:
        j = {{"custom", cfg.name}, {"step", num(cfg.step)}, {"tail_tol", num(cfg.tail_tol)}};
        break;
    }
    if (spec) {
        j["spec_name"] = spec->name;
        std::ostringstream h;
        h << std::hex << spec_hash(*spec);
        j["spec_hash"] = h.str();
    }
    return j;
}

void add_csv(RunResult& r, const ExperimentConfig& cfg, const std::string& name, const Table& t) {
    if (cfg.write_csv) {
        r.artifacts.push_back({name, to_csv(t)});
    }
}

RunResult run_kernel_table(const ExperimentConfig& cfg, std::uint64_t seed, RunResult r) {
    const auto& p = cfg.kernel_table;
    const GaussianProcessSpec spec = build_spec(cfg.system);
    r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
    const auto d = static_cast<Eigen::Index>(spec.dim);
    std::optional<ProcessSampler> sampler;
    if (p.n_mc > 0) {
        sampler = exact_sampler(cfg.system, spec);
    }
    Table t;
    t.comments.push_back("kernel K(t, t+tau) of " + spec.name);
    t.columns = {"t", "tau"};
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            t.columns.push_back("k_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        }
    }
    if (sampler) {
        t.comments.push_back("mc: first coordinate, n=" + std::to_string(p.n_mc) + " seed=" + std::to_string(seed) +
                             " generator=" + std::string(kGeneratorId));
        t.columns.insert(t.columns.end(), {"mc", "mc_se"});
    }
    Json rows = Json::array();
    std::size_t outside = 0;
    for (double t0 : p.t) {
        for (double tau : p.tau) {
            const Eigen::MatrixXd k = spec.kernel(t0, t0 + tau);
            std::vector<double> row{t0, tau};
            for (Eigen::Index i = 0; i < d; ++i) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    row.push_back(k(i, j));
                }
            }
            Json jr{{"t", num(t0)}, {"tau", num(tau)}, {"kernel", matrix(k)}};
            if (sampler) {
                const McEstimate e = mc_cov(*sampler, t0, t0 + tau, p.n_mc, seed);
                row.push_back(e.value);
                row.push_back(e.std_error);
                const bool covered = e.covers(k(0, 0));
                outside += covered ? 0 : 1;
                jr["mc"] = estimate(e);
                jr["within_4se"] = covered;
            }
            t.rows.push_back(std::move(row));
            rows.push_back(std::move(jr));
        }
    }
    r.report["result"] = {{"rows", std::move(rows)}};
    if (sampler) {
        r.report["result"]["outside_4se"] = outside;
    }
    add_csv(r, cfg, "kernel_table.csv", t);
    finish(r, sampler ? (outside == 0 ? "kernel consistent with Monte Carlo" : "Monte Carlo disagreement")
                      : "kernel tabulated",
           exit_code::kSuccess);
    return r;
}

RunResult run_ap_scan(const ExperimentConfig& cfg, RunResult r) {
    const auto& p = cfg.ap_scan;
    SampledFunction f;
    if (p.target == "expression") {
        f = expression_function(TimeExpr::parse(p.expression), p.t_start, p.t_window + p.tau_max, p.t_step);
        r.report["reproduction"]["system"] = {{"expression", p.expression}};
    } else {
        const GaussianProcessSpec spec = build_spec(cfg.system);
        r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
        f = l2_function(spec, p.t_start, p.t_window + p.tau_max, p.t_step);
    }
    const auto rep = scan_almost_periods(f, p.epsilon, p.tau_min, p.tau_max, p.tau_step, p.max_inclusion);
    r.report["result"] = ap_report(rep);
    add_csv(r, cfg, "sup_distance.csv", curve_table(rep));
    finish(r, rep.relatively_dense ? "relatively dense epsilon-almost periods found"
                                   : (rep.taus_found.empty() ? "no epsilon-almost periods in range"
                                                             : "epsilon-almost periods found, not relatively dense"),
           exit_code::kSuccess);
    return r;
}

RunResult run_ms_falsify(const ExperimentConfig& cfg, RunResult r) {
    const auto& p = cfg.ms_falsify;
    const GaussianProcessSpec spec = build_spec(cfg.system);
    r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
    const LinGrid tau{p.tau.start, p.tau.stop, p.tau.count};
    const LinGrid t{p.t.start, p.t.stop, p.t.count};
    const auto f = ms_ap_falsify(spec, tau, t, p.tol);
    r.report["result"] = falsification(f);

    Table curve;
    curve.comments.push_back("min over t of E|X_{t+tau} - X_t|^2 for " + spec.name);
    curve.columns = {"tau", "min_l2_increment", "argmin_t"};
    for (std::size_t j = 0; j < tau.count; ++j) {
        double best = std::numeric_limits<double>::infinity();
        double at = t.at(0);
        for (std::size_t i = 0; i < t.count; ++i) {
            const double v = l2_increment(spec, t.at(i), tau.at(j));
            if (v < best) {
                best = v;
                at = t.at(i);
            }
        }
        curve.rows.push_back({tau.at(j), best, at});
    }
    add_csv(r, cfg, "l2_increment.csv", curve);
    finish(r, to_string(f.verdict),
           f.verdict == FalsifyVerdict::NotMeanSquareAp ? exit_code::kSuccess : exit_code::kInconclusive);
    return r;
}

RunResult run_lemma(const ExperimentConfig& cfg, std::uint64_t seed, RunResult r) {
    const auto& p = cfg.lemma;
    const GaussianProcessSpec spec = build_spec(cfg.system);
    r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
    ProbeSequence probe;
    probe.times = p.times;
    const auto d = static_cast<Eigen::Index>(spec.dim);
    probe.direction = Eigen::VectorXd::Ones(d);
    if (!p.direction.empty()) {
        if (p.direction.size() != spec.dim) {
            throw ParseError("parameters.direction: expected " + std::to_string(spec.dim) + " entries");
        }
        probe.direction = Eigen::Map<const Eigen::VectorXd>(p.direction.data(), d);
    }
    const LemmaOptions opt{p.gap, p.cov_tol, p.var_margin};
    const LemmaReport rep = p.mode == "closed_form"
                                ? lemma_check(spec, probe, p.n_mc, seed, opt)
                                : lemma_check(exact_sampler(cfg.system, spec), probe, p.n_mc, seed, opt);
    r.report["result"] = lemma(rep);
    r.report["result"]["times"] = numbers(probe.times);
    add_csv(r, cfg, "covariance_decay.csv", lemma_table(rep, probe.times));
    const int code = rep.verdict == LemmaVerdict::HypothesesSatisfied ? exit_code::kSuccess
                     : rep.verdict == LemmaVerdict::HypothesesFailed  ? exit_code::kHypothesisViolation
                                                                      : exit_code::kInconclusive;
    finish(r, to_string(rep.verdict), code);
    return r;
}

RunResult run_dist_ap(const ExperimentConfig& cfg, RunResult r) {
    const auto& p = cfg.dist_ap;
    const GaussianProcessSpec spec = build_spec(cfg.system);
    r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
    const AlmostPeriodReport rep =
        p.taus.empty()
            ? distribution_ap_scan(spec, p.offsets, p.epsilon, p.tau_min, p.tau_max, p.tau_step, p.t_start,
                                   p.t_window, p.t_step)
            : distribution_ap_check(spec, p.offsets, p.taus, p.epsilon, p.t_start, p.t_window, p.t_step);
    r.report["result"] = ap_report(rep);
    r.report["result"]["offsets"] = numbers(p.offsets);
    add_csv(r, cfg, "w2_curve.csv", curve_table(rep));
    finish(r, rep.taus_found.empty() ? "no epsilon-almost period in distribution found"
                                     : "epsilon-almost periods in distribution found",
           rep.taus_found.empty() ? exit_code::kInconclusive : exit_code::kSuccess);
    return r;
}

RunResult run_hypotheses(const ExperimentConfig& cfg, RunResult r) {
    const auto& p = cfg.hypothesis;
    const EvolutionSystem sys = build_system(cfg.system);
    r.report["reproduction"]["system"] = system_json(cfg.system, nullptr);
    std::vector<double> grid(p.dissipativity_grid.count);
    const LinGrid lg{p.dissipativity_grid.start, p.dissipativity_grid.stop, p.dissipativity_grid.count};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = lg.at(i);
    }
    const double beta = check_dissipativity(sys, grid);
    Json result;
    result["dissipativity"] = {{"beta", num(beta)}, {"holds", beta > 0.0}, {"grid", numbers(grid)}};
    bool dissipative = beta > 0.0;
    bool stable = false;
    bool variance_ok = false;
    std::optional<StabilityEstimate> stab;
    try {
        stab = check_exponential_stability(sys, p.horizon, p.step);
        stable = stab->delta > 0.0;
        result["exponential_stability"] = stability(*stab);
        result["exponential_stability"]["holds"] = stable;
    } catch (const UnstableError& e) {
        result["exponential_stability"] = {{"holds", false}, {"error", e.what()}};
    }
    Json var = Json::array();
    if (stable) {
        variance_ok = true;
        for (double t : p.variance_times) {
            const double v = variance_condition(sys, t, p.step, cfg.system.tail_tol, stab);
            const bool ok = v > 0.0 && std::isfinite(v);
            variance_ok = variance_ok && ok;
            var.push_back({{"t", num(t)}, {"value", num(v)}, {"holds", ok}});
        }
        result["variance_condition"] = {{"values", std::move(var)}, {"holds", variance_ok}};
    } else {
        result["variance_condition"] = {{"holds", false}, {"error", "no positive decay certificate"}};
    }
    r.report["result"] = std::move(result);
    std::string verdict;
    if (dissipative && stable && variance_ok) {
        verdict = "dissipativity, exponential stability and the variance condition hold on the grid";
    } else {
        std::vector<std::string> failed;
        if (!dissipative) {
            failed.push_back("dissipativity");
        }
        if (!stable) {
            failed.push_back("exponential stability");
        }
        if (!variance_ok) {
            failed.push_back("variance condition");
        }
        verdict = "violated:";
        for (std::size_t i = 0; i < failed.size(); ++i) {
            verdict += (i == 0 ? " " : ", ") + failed[i];
        }
    }
    finish(r, verdict, dissipative && stable && variance_ok ? exit_code::kSuccess : exit_code::kHypothesisViolation);
    return r;
}

RunResult run_moments(const ExperimentConfig& cfg, std::uint64_t seed, RunResult r) {
    const auto& p = cfg.moments;
    ProcessSampler sampler;
    if (p.sampler == "euler") {
        const EvolutionSystem sys = build_system(cfg.system);
        std::optional<Eigen::MatrixXd> init;
        try {
            init = convolution_covariance(sys, p.times.front(), p.times.front(), cfg.system.step,
                                          cfg.system.tail_tol);
        } catch (const Error&) {
            init.reset();
        }
        sampler = euler_sampler(sys, p.euler_step, init);
        r.report["reproduction"]["system"] = system_json(cfg.system, nullptr);
    } else {
        const GaussianProcessSpec spec = build_spec(cfg.system);
        r.report["reproduction"]["system"] = system_json(cfg.system, &spec);
        sampler = p.sampler == "exact" ? exact_sampler(cfg.system, spec) : marginal_sampler(spec);
    }
    Table t;
    t.comments.push_back("moments of |X_t| sampler=" + sampler.name + " method=" + sampler.method);
    t.comments.push_back("seed=" + std::to_string(seed) + " n=" + std::to_string(p.n) +
                         " generator=" + std::string(kGeneratorId));
    t.columns = {"t", "p", "estimate", "std_error", "exact"};
    Json rows = Json::array();
    bool diverged = false;
    std::string failure;
    for (double time : p.times) {
        for (int order : p.orders) {
            try {
                const MomentEstimate m = mc_moment(sampler, time, order, p.n, seed);
                const double exact = m.exact.value_or(std::nan(""));
                t.rows.push_back({time, static_cast<double>(order), m.estimate.value, m.estimate.std_error, exact});
                Json jr{{"t", num(time)}, {"p", order}, {"estimate", estimate(m.estimate)}};
                if (m.exact) {
                    jr["exact"] = num(*m.exact);
                    jr["within_4se"] = m.estimate.covers(*m.exact);
                }
                rows.push_back(std::move(jr));
            } catch (const DivergedError& e) {
                diverged = true;
                failure = e.what();
            }
        }
    }
    const UiReport ui = ui_proxy(sampler, p.times, p.n, seed, p.cap);
    r.report["result"] = {{"moments", std::move(rows)},
                          {"uniform_integrability",
                           {{"sup_fourth_moment", num(ui.sup_value)},
                            {"sup_upper", num(ui.sup_upper)},
                            {"t_at_sup", num(ui.t_at_sup)},
                            {"cap", num(ui.cap)},
                            {"bounded", ui.bounded},
                            {"failure", ui.failure.empty() ? failure : ui.failure}}}};
    add_csv(r, cfg, "moments.csv", t);
    const bool ok = ui.bounded && !diverged;
    finish(r, ok ? "uniform fourth-moment bound holds" : "uniform fourth-moment bound fails",
           ok ? exit_code::kSuccess : exit_code::kHypothesisViolation);
    return r;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed_override) {
    const std::uint64_t seed = seed_override.value_or(cfg.seed.value_or(kDefaultSeed));
    RunResult r;
    r.report = header(to_string(cfg.kind), seed);
    r.report["reproduction"]["config"] = cfg.source;
    switch (cfg.kind) {
    case ExperimentKind::KernelTable:
        return run_kernel_table(cfg, seed, std::move(r));
    case ExperimentKind::ApScan:
        return run_ap_scan(cfg, std::move(r));
    case ExperimentKind::MsFalsify:
        return run_ms_falsify(cfg, std::move(r));
    case ExperimentKind::LemmaCheck:
        return run_lemma(cfg, seed, std::move(r));
    case ExperimentKind::DistApCheck:
        return run_dist_ap(cfg, std::move(r));
    case ExperimentKind::HypothesisCheck:
        return run_hypotheses(cfg, std::move(r));
    case ExperimentKind::Moments:
        return run_moments(cfg, seed, std::move(r));
    }
    throw Error("unknown experiment kind");
}

void write_artifacts(const RunResult& result, const std::filesystem::path& dir) {
    for (const auto& a : result.artifacts) {
        write_file_atomic(dir / a.name, a.content);
    }
}

} // namespace apsde
