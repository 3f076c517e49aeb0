#include "apsde/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "apsde/errors.hpp"

namespace apsde {

namespace {

using Fn = std::function<double(double)>;

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Fn parse_all() {
        Fn e = expr();
        skip_ws();
        if (pos_ != src_.size()) {
            fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression \"" + std::string(src_) + "\", column " +
                         std::to_string(pos_ + 1) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    Fn expr() {
        Fn lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = [a = lhs, b = term()](double t) { return a(t) + b(t); };
            } else if (accept('-')) {
                lhs = [a = lhs, b = term()](double t) { return a(t) - b(t); };
            } else {
                return lhs;
            }
        }
    }

    Fn term() {
        Fn lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = [a = lhs, b = unary()](double t) { return a(t) * b(t); };
            } else if (accept('/')) {
                lhs = [a = lhs, b = unary()](double t) { return a(t) / b(t); };
            } else {
                return lhs;
            }
        }
    }

    Fn unary() {
        if (accept('-')) {
            return [a = unary()](double t) { return -a(t); };
        }
        if (accept('+')) {
            return unary();
        }
        return primary();
    }

    Fn primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("unexpected end of expression");
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Fn inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            const std::string_view name = src_.substr(start, pos_ - start);
            if (name == "t") {
                return [](double t) { return t; };
            }
            if (name == "pi") {
                return [](double) { return std::numbers::pi; };
            }
            double (*fn)(double) = nullptr;
            if (name == "sin") {
                fn = [](double x) { return std::sin(x); };
            } else if (name == "cos") {
                fn = [](double x) { return std::cos(x); };
            } else if (name == "exp") {
                fn = [](double x) { return std::exp(x); };
            } else if (name == "sqrt") {
                fn = [](double x) { return std::sqrt(x); };
            } else {
                pos_ = start;
                fail("unknown identifier '" + std::string(name) + "'");
            }
            expect('(');
            Fn arg = expr();
            expect(')');
            return [fn, arg](double t) { return fn(arg(t)); };
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Fn number() {
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first) {
            fail("malformed number");
        }
        pos_ += static_cast<std::size_t>(ptr - first);
        return [value](double) { return value; };
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

std::string format_constant(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace

TimeExpr TimeExpr::parse(std::string_view source) {
    Parser p(source);
    Fn fn = p.parse_all();
    return TimeExpr(std::string(source), std::move(fn));
}

TimeExpr TimeExpr::constant(double value) {
    return TimeExpr(format_constant(value), [value](double) { return value; });
}

MatrixExpr::MatrixExpr(std::vector<std::vector<TimeExpr>> rows) : rows_(std::move(rows)) {
    if (rows_.empty() || rows_[0].empty()) {
        throw std::invalid_argument("matrix expression must have at least one entry");
    }
    for (const auto& r : rows_) {
        if (r.size() != rows_[0].size()) {
            throw std::invalid_argument("matrix expression rows differ in length");
        }
    }
}

Eigen::MatrixXd MatrixExpr::operator()(double t) const {
    Eigen::MatrixXd m(rows(), cols());
    for (Eigen::Index i = 0; i < rows(); ++i) {
        for (Eigen::Index j = 0; j < cols(); ++j) {
            m(i, j) = rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](t);
        }
    }
    return m;
}

} // namespace apsde
