#pragma once

#include <complex>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cfmm {

/// Field of a CSV row. Doubles print with 17 significant digits in scientific
/// notation; an empty optional value prints as an empty field.
using CsvField = std::variant<std::string, long long, double, std::monostate>;

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size()) {
    write_strings(header);
  }

  void row(const std::vector<CsvField>& fields) {
    if (fields.size() != columns_) throw std::invalid_argument("CSV row has the wrong number of fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << format(fields[i]);
    }
    os_ << '\n';
  }

  static std::string format(const CsvField& f) {
    if (const auto* s = std::get_if<std::string>(&f)) return *s;
    if (const auto* i = std::get_if<long long>(&f)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&f)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.16e", *d);
      return buf;
    }
    return {};
  }

 private:
  void write_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << v[i];
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t columns_;
};

}  // namespace cfmm
