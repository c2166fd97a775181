#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heatbesov {

inline constexpr std::string_view kVersion = "0.1.0";

/// Round-trip decimal form ("%.17g"); "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);
std::string format_int(long long v);
inline std::string format_int(std::size_t v) { return format_int(static_cast<long long>(v)); }
inline std::string format_int(int v) { return format_int(static_cast<long long>(v)); }

/// Comma-separated table with a header row and "\n" line endings. Cells holding
/// commas, quotes or newlines are quoted, with inner quotes doubled.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);
    void add_row(std::vector<std::string> cells);
    std::string str() const;
    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string digest_doubles(std::span<const double> values);

}  // namespace heatbesov
