#ifndef ADPROG_TEXTIO_HPP
#define ADPROG_TEXTIO_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adprog {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Lossless decimal rendering of a double (17 significant digits).
std::string format_double(double v);
// Compact rendering for human-facing summaries.
std::string format_double4(double v);
double parse_double(std::string_view s, const std::string& context);
long parse_long(std::string_view s, const std::string& context);

std::uint64_t fnv1a64(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Minimal CSV support: comma separator, double-quote escaping, one record
// per line. Quoted fields may contain commas and doubled quotes; embedded
// newlines are not supported (none of the consumed formats use them).
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split_line(std::string_view line, std::size_t line_no);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // ragged rows are an error at parse time
    int column(std::string_view name) const;    // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv_text(std::string_view text, const std::string& origin);

// Flat key-value config with [section] headers; '#' and ';' start comments.
// Keys may contain spaces ("NL to MCI = MCI").
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::filesystem::path& path);
    static KeyValueConfig from_text(std::string_view text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    // All key/value pairs of one section, in file order.
    std::vector<std::pair<std::string, std::string>> section(const std::string& name) const;

private:
    // section -> ordered pairs
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

} // namespace adprog

#endif
