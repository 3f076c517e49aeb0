#include "apsde/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "apsde/errors.hpp"
#include "apsde/rng.hpp"

namespace apsde {

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (const auto& c : table.comments) {
        out += "# " + c + "\n";
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out += (i ? "," : "") + table.columns[i];
    }
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out += ",";
            }
            out += format_number(row[i]);
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        parts.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) {
            return parts;
        }
        start = comma + 1;
    }
}

double parse_number(std::string_view field, std::size_t line_no) {
    if (field == "nan") {
        return std::nan("");
    }
    if (field == "inf") {
        return HUGE_VAL;
    }
    if (field == "-inf") {
        return -HUGE_VAL;
    }
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    }
    return v;
}

} // namespace

Table parse_csv(std::string_view text) {
    Table t;
    std::size_t line_no = 0;
    bool header = false;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            line.remove_prefix(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            t.comments.emplace_back(line);
            continue;
        }
        const auto fields = split(line);
        if (!header) {
            for (auto f : fields) {
                t.columns.emplace_back(f);
            }
            header = true;
            continue;
        }
        if (fields.size() != t.columns.size()) {
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(t.columns.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto f : fields) {
            row.push_back(parse_number(f, line_no));
        }
        t.rows.push_back(std::move(row));
    }
    if (!header) {
        throw ParseError("csv: missing header row");
    }
    return t;
}

Table path_table(const PathSample& path) {
    Table t;
    t.comments.push_back("seed=" + std::to_string(path.seed));
    t.comments.push_back("path=" + std::to_string(path.path));
    t.comments.push_back("method=" + to_string(path.method));
    t.comments.push_back("generator=" + std::string(kGeneratorId));
    t.columns.push_back("t");
    for (Eigen::Index j = 0; j < path.values.cols(); ++j) {
        t.columns.push_back("x_" + std::to_string(j + 1));
    }
    for (Eigen::Index i = 0; i < path.values.rows(); ++i) {
        std::vector<double> row{path.grid.at(static_cast<std::size_t>(i))};
        for (Eigen::Index j = 0; j < path.values.cols(); ++j) {
            row.push_back(path.values(i, j));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_file_atomic(const std::filesystem::path& target, std::string_view content) {
    namespace fs = std::filesystem;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open " + tmp.string() + " for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

} // namespace apsde
