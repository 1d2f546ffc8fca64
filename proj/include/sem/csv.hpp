#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace sem {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// RFC-4180 writer: fields containing a comma, quote or newline are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(std::initializer_list<std::string> fields);
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

/// Parses an RFC-4180 document. Empty lines are skipped.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace sem
