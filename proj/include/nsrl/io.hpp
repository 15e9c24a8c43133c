#pragma once

#include <string>
#include <vector>

namespace nsrl::io {

// Shortest round-trip decimal form; keeps artifacts byte-stable.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Minimal CSV writer: fields are escaped only if they contain a comma or
// quote, doubles via format_double.
class Csv {
  public:
    explicit Csv(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& fields);
    const std::string& text() const { return text_; }
    void save(const std::string& path) const;

  private:
    void append_line(const std::vector<std::string>& fields);
    std::string text_;
    std::size_t width_;
};

std::string csv_field(double v);
std::string csv_field(int v);

}  // namespace nsrl::io
