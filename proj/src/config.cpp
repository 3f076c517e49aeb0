#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "apsde/errors.hpp"
#include "apsde/experiment.hpp"
#include "apsde/expr.hpp"

namespace apsde {

namespace {

/// Line of every key and array element in well-formed JSON text, keyed by
/// the dotted path used in diagnostics ("parameters.tau", "system.custom.A[0][1]").
std::map<std::string, int> locate_paths(std::string_view text) {
    struct Frame {
        bool object;
        std::string path;
        std::size_t index = 0;
        bool expect_key = true;
    };
    std::map<std::string, int> lines;
    std::vector<Frame> stack;
    std::string pending;  // path of the next value
    int line = 1;

    const auto child_path = [&](const Frame& f, const std::string& key) {
        return f.path.empty() ? key : f.path + "." + key;
    };
    const auto begin_value = [&]() {
        if (!stack.empty() && !stack.back().object) {
            Frame& f = stack.back();
            pending = f.path + "[" + std::to_string(f.index) + "]";
            lines.emplace(pending, line);
        }
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == ':') {
            continue;
        }
        if (c == ',') {
            if (!stack.empty()) {
                if (stack.back().object) {
                    stack.back().expect_key = true;
                } else {
                    ++stack.back().index;
                }
            }
            continue;
        }
        if (c == '}' || c == ']') {
            if (!stack.empty()) {
                stack.pop_back();
            }
            continue;
        }
        if (c == '"') {
            std::string s;
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\' && i + 1 < text.size()) {
                    s += text[++i];
                } else {
                    s += text[i];
                }
            }
            if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                pending = child_path(stack.back(), s);
                lines.emplace(pending, line);
                stack.back().expect_key = false;
            } else {
                begin_value();
            }
            continue;
        }
        if (c == '{' || c == '[') {
            begin_value();
            stack.push_back({c == '{', stack.empty() ? std::string() : pending});
            continue;
        }
        // Scalar literal: skip to its end.
        begin_value();
        while (i + 1 < text.size() && std::string_view(",}] \t\r\n").find(text[i + 1]) == std::string_view::npos) {
            ++i;
        }
    }
    return lines;
}

class Context {
public:
    Context(std::string origin, std::map<std::string, int> lines)
        : origin_(std::move(origin)), lines_(std::move(lines)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        std::ostringstream msg;
        msg << origin_;
        std::string p = path;
        for (;;) {
            const auto it = lines_.find(p);
            if (it != lines_.end()) {
                msg << ":" << it->second;
                break;
            }
            const auto cut = p.find_last_of(".[");
            if (cut == std::string::npos || p.empty()) {
                break;
            }
            p.resize(cut);
        }
        msg << ": " << (path.empty() ? "<root>" : path) << ": " << message;
        throw ParseError(msg.str());
    }

private:
    std::string origin_;
    std::map<std::string, int> lines_;
};

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

/// Reads an object field by field; finish() rejects keys that were not read.
class ObjectReader {
public:
    ObjectReader(const Context& ctx, const Json& j, std::string path)
        : ctx_(ctx), j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            ctx_.fail(path_, "expected an object");
        }
    }

    const Json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return join(path_, key); }
    const Context& ctx() const { return ctx_; }
    bool has(const std::string& key) const { return j_.contains(key); }

    void finish(const std::vector<std::string>& allowed_hint = {}) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                std::string msg = "unknown key";
                if (!allowed_hint.empty()) {
                    msg += " (allowed:";
                    for (const auto& a : allowed_hint) {
                        msg += " " + a;
                    }
                    msg += ")";
                }
                ctx_.fail(path(it.key()), msg);
            }
        }
    }

    std::vector<std::string> seen() const { return {seen_.begin(), seen_.end()}; }

private:
    const Context& ctx_;
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_number(const Context& ctx, const Json& j, const std::string& path) {
    if (!j.is_number()) {
        ctx.fail(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        ctx.fail(path, "expected a finite number");
    }
    return v;
}

std::uint64_t as_count(const Context& ctx, const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) {
        return j.get<std::uint64_t>();
    }
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (v >= 0.0 && v <= 9.0e15 && std::floor(v) == v) {
            return static_cast<std::uint64_t>(v);
        }
    }
    ctx.fail(path, "expected a non-negative integer");
}

std::string as_string(const Context& ctx, const Json& j, const std::string& path) {
    if (!j.is_string()) {
        ctx.fail(path, "expected a string");
    }
    return j.get<std::string>();
}

std::vector<double> as_numbers(const Context& ctx, const Json& j, const std::string& path) {
    if (!j.is_array()) {
        ctx.fail(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(ctx, j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

void read_number(ObjectReader& r, const std::string& key, double& out) {
    if (const Json* j = r.get(key)) {
        out = as_number(r.ctx(), *j, r.path(key));
    }
}

void read_count(ObjectReader& r, const std::string& key, std::size_t& out) {
    if (const Json* j = r.get(key)) {
        out = static_cast<std::size_t>(as_count(r.ctx(), *j, r.path(key)));
    }
}

void read_numbers(ObjectReader& r, const std::string& key, std::vector<double>& out) {
    if (const Json* j = r.get(key)) {
        out = as_numbers(r.ctx(), *j, r.path(key));
    }
}

void read_string(ObjectReader& r, const std::string& key, std::string& out) {
    if (const Json* j = r.get(key)) {
        out = as_string(r.ctx(), *j, r.path(key));
    }
}

void read_range(ObjectReader& r, const std::string& key, LinRange& out) {
    const Json* j = r.get(key);
    if (!j) {
        return;
    }
    ObjectReader sub(r.ctx(), *j, r.path(key));
    read_number(sub, "start", out.start);
    read_number(sub, "stop", out.stop);
    read_count(sub, "count", out.count);
    sub.finish({"start", "stop", "count"});
    if (out.count == 0 || out.stop < out.start || (out.count == 1 && out.stop != out.start)) {
        r.ctx().fail(r.path(key), "need start <= stop and count >= 1 (count 1 only when start == stop)");
    }
}

void require(const Context& ctx, bool ok, const std::string& path, const std::string& message) {
    if (!ok) {
        ctx.fail(path, message);
    }
}

void require_sorted(const Context& ctx, const std::vector<double>& v, const std::string& path,
                    bool strict) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (strict ? !(v[i] > v[i - 1]) : !(v[i] >= v[i - 1])) {
            ctx.fail(path + "[" + std::to_string(i) + "]",
                     strict ? "values must be strictly increasing" : "values must be non-decreasing");
        }
    }
}

std::vector<std::vector<std::string>> as_expr_matrix(const Context& ctx, const Json& j,
                                                     const std::string& path) {
    if (!j.is_array() || j.empty()) {
        ctx.fail(path, "expected a nonempty array of rows");
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].empty()) {
            ctx.fail(rp, "expected a nonempty row");
        }
        std::vector<std::string> row;
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            const std::string ep = rp + "[" + std::to_string(k) + "]";
            const Json& e = j[i][k];
            std::string src;
            if (e.is_number()) {
                std::ostringstream os;
                os.precision(17);
                os << as_number(ctx, e, ep);
                src = os.str();
            } else if (e.is_string()) {
                src = e.get<std::string>();
            } else {
                ctx.fail(ep, "expected an expression string or a number");
            }
            try {
                TimeExpr::parse(src);
            } catch (const ParseError& err) {
                ctx.fail(ep, err.what());
            }
            row.push_back(src);
        }
        if (!rows.empty() && row.size() != rows[0].size()) {
            ctx.fail(rp, "rows must have equal length");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SystemConfig parse_system(const Context& ctx, const Json& j, const std::string& path) {
    ObjectReader r(ctx, j, path);
    SystemConfig cfg;
    const bool has_builtin = r.has("builtin");
    const bool has_custom = r.has("custom");
    if (has_builtin == has_custom) {
        ctx.fail(path, "specify exactly one of \"builtin\" or \"custom\"");
    }
    if (has_builtin) {
        const std::string name = as_string(ctx, *r.get("builtin"), r.path("builtin"));
        if (name == "ou") {
            cfg.kind = SystemConfig::Kind::Ou;
            read_number(r, "alpha", cfg.alpha);
            read_number(r, "sigma", cfg.sigma);
            require(ctx, cfg.alpha > 0.0, r.path("alpha"), "must be positive");
            require(ctx, cfg.sigma > 0.0, r.path("sigma"), "must be positive");
            r.finish({"builtin", "alpha", "sigma"});
        } else if (name == "periodic_example") {
            cfg.kind = SystemConfig::Kind::PeriodicExample;
            r.finish({"builtin"});
        } else {
            ctx.fail(r.path("builtin"), "unknown builtin \"" + name + "\" (expected ou or periodic_example)");
        }
        return cfg;
    }
    const std::string cpath = r.path("custom");
    ObjectReader c(ctx, *r.get("custom"), cpath);
    r.finish({"builtin", "custom"});
    cfg.kind = SystemConfig::Kind::Custom;
    read_string(c, "name", cfg.name);
    const Json* a = c.get("A");
    const Json* g = c.get("g");
    if (!a) {
        ctx.fail(cpath, "missing key \"A\"");
    }
    if (!g) {
        ctx.fail(cpath, "missing key \"g\"");
    }
    cfg.drift = as_expr_matrix(ctx, *a, c.path("A"));
    cfg.noise = as_expr_matrix(ctx, *g, c.path("g"));
    const std::size_t d = cfg.drift.size();
    require(ctx, cfg.drift[0].size() == d, c.path("A"), "A must be square");
    require(ctx, cfg.noise.size() == d, c.path("g"), "g must have as many rows as A");
    const std::size_t m = cfg.noise[0].size();
    cfg.noise_cov = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    if (const Json* q = c.get("Q")) {
        const std::string qp = c.path("Q");
        if (!q->is_array() || q->size() != m) {
            ctx.fail(qp, "Q must be an m x m array with m = columns of g");
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto row = as_numbers(ctx, (*q)[i], qp + "[" + std::to_string(i) + "]");
            if (row.size() != m) {
                ctx.fail(qp + "[" + std::to_string(i) + "]", "Q must be m x m");
            }
            for (std::size_t k = 0; k < m; ++k) {
                cfg.noise_cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
            }
        }
    }
    if (const Json* p = c.get("period_hint")) {
        cfg.period_hint = as_number(ctx, *p, c.path("period_hint"));
        require(ctx, *cfg.period_hint > 0.0, c.path("period_hint"), "must be positive");
    }
    read_number(c, "step", cfg.step);
    read_number(c, "tail_tol", cfg.tail_tol);
    require(ctx, cfg.step > 0.0, c.path("step"), "must be positive");
    require(ctx, cfg.tail_tol > 0.0, c.path("tail_tol"), "must be positive");
    c.finish({"name", "A", "g", "Q", "period_hint", "step", "tail_tol"});
    try {
        validate(build_system(cfg));
    } catch (const std::invalid_argument& e) {
        ctx.fail(cpath, e.what());
    }
    return cfg;
}

void parse_parameters(const Context& ctx, const Json& j, const std::string& path, ExperimentConfig& cfg) {
    ObjectReader r(ctx, j, path);
    switch (cfg.kind) {
    case ExperimentKind::KernelTable: {
        auto& p = cfg.kernel_table;
        read_numbers(r, "t", p.t);
        read_numbers(r, "tau", p.tau);
        read_count(r, "n_mc", p.n_mc);
        require(ctx, !p.t.empty(), r.path("t"), "must be nonempty");
        require(ctx, !p.tau.empty(), r.path("tau"), "must be nonempty");
        for (double tau : p.tau) {
            require(ctx, tau >= 0.0, r.path("tau"), "lags must be >= 0");
        }
        require(ctx, p.n_mc == 0 || p.n_mc >= 100, r.path("n_mc"), "must be 0 or at least 100");
        break;
    }
    case ExperimentKind::ApScan: {
        auto& p = cfg.ap_scan;
        read_string(r, "target", p.target);
        read_string(r, "expression", p.expression);
        read_number(r, "epsilon", p.epsilon);
        read_number(r, "tau_min", p.tau_min);
        read_number(r, "tau_max", p.tau_max);
        read_number(r, "tau_step", p.tau_step);
        read_number(r, "t_start", p.t_start);
        read_number(r, "t_window", p.t_window);
        read_number(r, "t_step", p.t_step);
        if (const Json* m = r.get("max_inclusion")) {
            p.max_inclusion = as_number(ctx, *m, r.path("max_inclusion"));
        }
        require(ctx, p.target == "l2" || p.target == "expression", r.path("target"),
                "must be \"l2\" or \"expression\"");
        if (p.target == "expression") {
            require(ctx, !p.expression.empty(), r.path("expression"), "required when target is expression");
            try {
                TimeExpr::parse(p.expression);
            } catch (const ParseError& e) {
                ctx.fail(r.path("expression"), e.what());
            }
        }
        require(ctx, p.epsilon >= 0.0, r.path("epsilon"), "must be >= 0");
        require(ctx, p.tau_min >= 0.0 && p.tau_max >= p.tau_min, r.path("tau_max"),
                "need 0 <= tau_min <= tau_max");
        require(ctx, p.tau_step > 0.0, r.path("tau_step"), "must be positive");
        require(ctx, p.t_window > 0.0, r.path("t_window"), "must be positive");
        require(ctx, p.t_step > 0.0 && p.t_step <= p.t_window, r.path("t_step"),
                "must be positive and at most t_window");
        break;
    }
    case ExperimentKind::MsFalsify: {
        auto& p = cfg.ms_falsify;
        read_range(r, "tau", p.tau);
        read_range(r, "t", p.t);
        read_number(r, "tol", p.tol);
        require(ctx, p.tau.start >= 0.0, r.path("tau"), "lags must be >= 0");
        require(ctx, p.tol >= 0.0, r.path("tol"), "must be >= 0");
        break;
    }
    case ExperimentKind::LemmaCheck: {
        auto& p = cfg.lemma;
        read_numbers(r, "times", p.times);
        read_numbers(r, "direction", p.direction);
        read_count(r, "gap", p.gap);
        read_number(r, "cov_tol", p.cov_tol);
        read_number(r, "var_margin", p.var_margin);
        read_count(r, "n_mc", p.n_mc);
        read_string(r, "mode", p.mode);
        if (p.times.empty()) {
            for (int n = 1; n <= 30; ++n) {
                p.times.push_back(n);
            }
        }
        require_sorted(ctx, p.times, r.path("times"), true);
        require(ctx, p.times.size() >= 2, r.path("times"), "need at least two probe times");
        require(ctx, p.gap >= 1 && p.gap < p.times.size(), r.path("gap"),
                "must be in [1, number of probe times)");
        require(ctx, p.cov_tol > 0.0, r.path("cov_tol"), "must be positive");
        require(ctx, p.var_margin >= 0.0, r.path("var_margin"), "must be >= 0");
        require(ctx, p.n_mc >= 100, r.path("n_mc"), "must be at least 100");
        require(ctx, p.mode == "closed_form" || p.mode == "monte_carlo", r.path("mode"),
                "must be \"closed_form\" or \"monte_carlo\"");
        break;
    }
    case ExperimentKind::DistApCheck: {
        auto& p = cfg.dist_ap;
        read_numbers(r, "offsets", p.offsets);
        read_numbers(r, "taus", p.taus);
        read_number(r, "tau_min", p.tau_min);
        read_number(r, "tau_max", p.tau_max);
        read_number(r, "tau_step", p.tau_step);
        read_number(r, "epsilon", p.epsilon);
        read_number(r, "t_start", p.t_start);
        read_number(r, "t_window", p.t_window);
        read_number(r, "t_step", p.t_step);
        require(ctx, !p.offsets.empty() && p.offsets.size() <= 8, r.path("offsets"), "need 1 to 8 offsets");
        require_sorted(ctx, p.offsets, r.path("offsets"), true);
        for (double tau : p.taus) {
            require(ctx, tau >= 0.0, r.path("taus"), "shifts must be >= 0");
        }
        require(ctx, p.tau_min >= 0.0 && p.tau_max >= p.tau_min, r.path("tau_max"),
                "need 0 <= tau_min <= tau_max");
        require(ctx, p.tau_step > 0.0, r.path("tau_step"), "must be positive");
        require(ctx, p.epsilon >= 0.0, r.path("epsilon"), "must be >= 0");
        require(ctx, p.t_window > 0.0, r.path("t_window"), "must be positive");
        require(ctx, p.t_step > 0.0 && p.t_step <= p.t_window, r.path("t_step"),
                "must be positive and at most t_window");
        break;
    }
    case ExperimentKind::HypothesisCheck: {
        auto& p = cfg.hypothesis;
        read_number(r, "horizon", p.horizon);
        read_number(r, "step", p.step);
        read_range(r, "dissipativity_grid", p.dissipativity_grid);
        read_numbers(r, "variance_times", p.variance_times);
        require(ctx, p.horizon > 0.0, r.path("horizon"), "must be positive");
        require(ctx, p.step > 0.0 && p.step <= p.horizon, r.path("step"), "must be positive and at most horizon");
        require(ctx, !p.variance_times.empty(), r.path("variance_times"), "must be nonempty");
        break;
    }
    case ExperimentKind::Moments: {
        auto& p = cfg.moments;
        read_numbers(r, "times", p.times);
        if (const Json* o = r.get("orders")) {
            p.orders.clear();
            for (double v : as_numbers(ctx, *o, r.path("orders"))) {
                require(ctx, v == 2.0 || v == 4.0, r.path("orders"), "orders must be 2 or 4");
                p.orders.push_back(static_cast<int>(v));
            }
        }
        read_count(r, "n", p.n);
        read_string(r, "sampler", p.sampler);
        read_number(r, "euler_step", p.euler_step);
        read_number(r, "cap", p.cap);
        require(ctx, !p.times.empty(), r.path("times"), "must be nonempty");
        require_sorted(ctx, p.times, r.path("times"), false);
        require(ctx, !p.orders.empty(), r.path("orders"), "must be nonempty");
        require(ctx, p.n >= 100, r.path("n"), "must be at least 100");
        require(ctx, p.sampler == "exact" || p.sampler == "euler" || p.sampler == "marginal",
                r.path("sampler"), "must be exact, euler or marginal");
        require(ctx, p.euler_step > 0.0, r.path("euler_step"), "must be positive");
        require(ctx, p.cap > 0.0, r.path("cap"), "must be positive");
        break;
    }
    }
    r.finish(r.seen());
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::KernelTable:
        return "kernel-table";
    case ExperimentKind::ApScan:
        return "ap-scan";
    case ExperimentKind::MsFalsify:
        return "ms-falsify";
    case ExperimentKind::LemmaCheck:
        return "lemma-check";
    case ExperimentKind::DistApCheck:
        return "dist-ap-check";
    case ExperimentKind::HypothesisCheck:
        return "hypothesis-check";
    case ExperimentKind::Moments:
        return "moments";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
    for (auto k : {ExperimentKind::KernelTable, ExperimentKind::ApScan, ExperimentKind::MsFalsify,
                   ExperimentKind::LemmaCheck, ExperimentKind::DistApCheck,
                   ExperimentKind::HypothesisCheck, ExperimentKind::Moments}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    if (kind == ExperimentKind::LemmaCheck) {
        for (int n = 1; n <= 30; ++n) {
            cfg.lemma.times.push_back(n);
        }
    }
    cfg.source = Json::object();
    return cfg;
}

ExperimentConfig parse_config(std::string_view text, ExperimentKind kind, std::string_view origin) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // Translate the byte offset into line and column.
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1;
        std::size_t line_start = 0;
        for (std::size_t i = 0; i < pos; ++i) {
            if (text[i] == '\n') {
                ++line;
                line_start = i + 1;
            }
        }
        std::string what = e.what();
        const auto colon = what.find("syntax error");
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << (pos - line_start + 1) << ": invalid JSON: "
            << (colon == std::string::npos ? what : what.substr(colon));
        throw ParseError(msg.str());
    }
    const Context ctx(std::string(origin), locate_paths(text));
    ExperimentConfig cfg = default_config(kind);
    cfg.lemma.times.clear();
    cfg.source = j;

    ObjectReader root(ctx, j, "");
    if (const Json* e = root.get("experiment")) {
        const std::string name = as_string(ctx, *e, "experiment");
        const auto parsed = parse_experiment_kind(name);
        if (!parsed) {
            ctx.fail("experiment", "unknown experiment \"" + name + "\"");
        }
        if (*parsed != kind) {
            ctx.fail("experiment", "config is for \"" + name + "\" but the subcommand is \"" + to_string(kind) + "\"");
        }
    }
    if (const Json* s = root.get("seed")) {
        cfg.seed = as_count(ctx, *s, "seed");
    }
    if (const Json* s = root.get("system")) {
        cfg.system = parse_system(ctx, *s, "system");
    }
    if (const Json* o = root.get("output")) {
        ObjectReader out(ctx, *o, "output");
        if (const Json* d = out.get("dir")) {
            cfg.out_dir = as_string(ctx, *d, "output.dir");
        }
        if (const Json* f = out.get("formats")) {
            if (!f->is_array()) {
                ctx.fail("output.formats", "expected an array of \"csv\" / \"json\"");
            }
            cfg.write_csv = false;
            for (std::size_t i = 0; i < f->size(); ++i) {
                const std::string p = "output.formats[" + std::to_string(i) + "]";
                const std::string v = as_string(ctx, (*f)[i], p);
                if (v == "csv") {
                    cfg.write_csv = true;
                } else if (v != "json") {
                    ctx.fail(p, "unknown format \"" + v + "\" (expected csv or json)");
                }
            }
        }
        out.finish({"dir", "formats"});
    }
    if (const Json* p = root.get("parameters")) {
        parse_parameters(ctx, *p, "parameters", cfg);
    } else if (kind == ExperimentKind::LemmaCheck) {
        parse_parameters(ctx, Json::object(), "parameters", cfg);
    }
    root.finish({"experiment", "seed", "system", "output", "parameters"});
    return cfg;
}

} // namespace apsde
