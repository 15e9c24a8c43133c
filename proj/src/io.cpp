#include "nsrl/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nsrl/types.hpp"

namespace nsrl::io {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { append_line(header); }

void Csv::add_row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw UsageError("csv: row width mismatch");
    append_line(fields);
}

void Csv::append_line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) text_ += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            text_ += '"';
            for (char c : f) {
                if (c == '"') text_ += '"';
                text_ += c;
            }
            text_ += '"';
        } else {
            text_ += f;
        }
    }
    text_ += '\n';
}

void Csv::save(const std::string& path) const { write_file(path, text_); }

std::string csv_field(double v) { return format_double(v); }
std::string csv_field(int v) { return std::to_string(v); }

}  // namespace nsrl::io
