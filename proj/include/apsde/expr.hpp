#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace apsde {

/// Scalar function of time compiled from a small expression language.
///
/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | primary
///   primary := number | 't' | 'pi' | func '(' expr ')' | '(' expr ')'
///   func    := sin | cos | exp | sqrt
class TimeExpr {
public:
    /// Throws ParseError with the offending column on malformed input.
    static TimeExpr parse(std::string_view source);
    static TimeExpr constant(double value);

    double operator()(double t) const { return fn_(t); }
    const std::string& source() const { return source_; }

private:
    TimeExpr(std::string source, std::function<double(double)> fn)
        : source_(std::move(source)), fn_(std::move(fn)) {}

    std::string source_;
    std::function<double(double)> fn_;
};

/// Row-major grid of expressions evaluated entrywise.
class MatrixExpr {
public:
    MatrixExpr() = default;
    /// Rows must be nonempty and of equal length.
    explicit MatrixExpr(std::vector<std::vector<TimeExpr>> rows);

    Eigen::Index rows() const { return static_cast<Eigen::Index>(rows_.size()); }
    Eigen::Index cols() const { return rows_.empty() ? 0 : static_cast<Eigen::Index>(rows_[0].size()); }
    Eigen::MatrixXd operator()(double t) const;

    const std::vector<std::vector<TimeExpr>>& entries() const { return rows_; }

private:
    std::vector<std::vector<TimeExpr>> rows_;
};

} // namespace apsde
