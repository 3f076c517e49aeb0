#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apsde/sampler.hpp"

namespace apsde {

/// Numeric table with `#` comment lines, serialized as CSV. Values use the
/// shortest round-trip representation, so parse_csv(to_csv(t)) == t.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    bool operator==(const Table&) const = default;
};

std::string format_number(double v);

std::string to_csv(const Table& table);

/// Throws ParseError naming the line on malformed input.
Table parse_csv(std::string_view text);

/// Columns t, x_1..x_d with seed/method/generator comments.
Table path_table(const PathSample& path);

/// Writes `content` to `target` through a temporary file in the same
/// directory followed by a rename.
void write_file_atomic(const std::filesystem::path& target, std::string_view content);

} // namespace apsde
