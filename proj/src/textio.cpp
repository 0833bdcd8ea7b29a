#include "adprog/textio.hpp"

#include "adprog/errors.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace adprog {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string format_double4(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
    const std::string t = trim(s);
    double v{};
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw DataError("not a number: '" + t + "' (" + context + ")");
    return v;
}

long parse_long(std::string_view s, const std::string& context) {
    const std::string t = trim(s);
    long v{};
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw DataError("not an integer: '" + t + "' (" + context + ")");
    return v;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted)
        throw DataError("unterminated quote at line " + std::to_string(line_no));
    fields.push_back(std::move(cur));
    return fields;
}

int CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv_text(std::string_view text, const std::string& origin) {
    CsvTable table;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line.empty() && pos > text.size()) break; // trailing newline
        if (line.empty()) continue;
        auto fields = csv_split_line(line, line_no);
        if (line_no == 1) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw DataError(origin + ": line " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(table.header.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty())
        throw DataError(origin + ": empty CSV (no header row)");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    return parse_csv_text(read_file(path), path.string());
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
    return from_text(read_file(path), path.string());
}

KeyValueConfig KeyValueConfig::from_text(std::string_view text, const std::string& origin) {
    KeyValueConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw DataError(origin + ": malformed section at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section]; // ensure section exists even if empty
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(origin + ": expected key=value at line " + std::to_string(line_no));
        cfg.sections_[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return false;
    for (const auto& [k, v] : it->second)
        if (k == key) return true;
    return false;
}

std::string KeyValueConfig::get(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    for (const auto& [k, v] : it->second)
        if (k == key) return v;
    return fallback;
}

std::vector<std::pair<std::string, std::string>>
KeyValueConfig::section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) return {};
    return it->second;
}

} // namespace adprog
