#pragma once

// Constant-coefficient scalar PDE operators  L = sum_m a_m D^m,
// and a small text format for reading them:
//
//   # Laplace in two dimensions
//   dimension = 2
//   [2,0] = 1
//   [0,2] = 1
//
// Coefficients are written `re`, `im i`, or `re+im i` / `re-im i`.

#include <algorithm>
#include <cctype>
#include <complex>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cfmm/multiindex.hpp"

namespace cfmm {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct PdeTerm {
  MultiIndex index;
  std::complex<double> coefficient;
};

class PdeOperator {
 public:
  PdeOperator() = default;

  /// Zero coefficients are dropped; repeated indices are summed.
  PdeOperator(int dim, const std::vector<PdeTerm>& terms) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("PDE dimension out of range");
    for (const auto& t : terms) {
      if (t.index.dim() != dim) throw std::invalid_argument("PDE term dimension mismatch");
      bool merged = false;
      for (auto& u : terms_)
        if (u.index == t.index) {
          u.coefficient += t.coefficient;
          merged = true;
        }
      if (!merged) terms_.push_back(t);
    }
    std::erase_if(terms_, [](const PdeTerm& t) { return t.coefficient == 0.0; });
    if (terms_.empty()) throw std::invalid_argument("degenerate PDE: all coefficients are zero");
    for (const auto& t : terms_) order_ = std::max(order_, t.index.order());
  }

  int dim() const { return dim_; }
  int order() const { return order_; }
  const std::vector<PdeTerm>& terms() const { return terms_; }

  std::complex<double> coefficient(const MultiIndex& m) const {
    for (const auto& t : terms_)
      if (t.index == m) return t.coefficient;
    return 0.0;
  }

  bool real_coefficients() const {
    for (const auto& t : terms_)
      if (t.coefficient.imag() != 0.0) return false;
    return true;
  }

  friend bool operator==(const PdeOperator& a, const PdeOperator& b) {
    if (a.dim_ != b.dim_ || a.terms_.size() != b.terms_.size()) return false;
    for (const auto& t : a.terms_)
      if (b.coefficient(t.index) != t.coefficient) return false;
    return true;
  }

  std::string str() const {
    std::ostringstream os;
    os << "dimension = " << dim_ << "\n";
    for (const auto& t : terms_) {
      os << "[";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << t.index[i];
      os << "] = " << t.coefficient.real();
      if (t.coefficient.imag() != 0.0)
        os << (t.coefficient.imag() < 0 ? "" : "+") << t.coefficient.imag() << " i";
      os << "\n";
    }
    return os.str();
  }

 private:
  int dim_ = 0;
  int order_ = 0;
  std::vector<PdeTerm> terms_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_real(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "bad number '" + s + "'");
  }
  if (used != s.size()) throw ParseError(line, "bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses `re`, `im i`, `re+im i`, `re-im i` (spaces ignored).
inline std::complex<double> parse_complex(const std::string& text, int line = 0) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw ParseError(line, "missing coefficient");
  if (s.back() != 'i') return detail::parse_real(s, line);
  s.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_of = [&](std::string part) {
    if (part.empty() || part == "+") return 1.0;
    if (part == "-") return -1.0;
    return detail::parse_real(part, line);
  };
  if (split == std::string::npos) return {0.0, imag_of(s)};
  return {detail::parse_real(s.substr(0, split), line), imag_of(s.substr(split))};
}

inline PdeOperator parse_pde(std::istream& in) {
  int dim = 0;
  int line_no = 0;
  std::vector<std::pair<std::vector<int>, std::pair<std::complex<double>, int>>> raw;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected '='");
    const std::string lhs = detail::trim(line.substr(0, eq));
    const std::string rhs = detail::trim(line.substr(eq + 1));
    if (lhs == "dimension") {
      try {
        std::size_t used = 0;
        dim = std::stoi(rhs, &used);
        if (used != rhs.size()) throw std::invalid_argument(rhs);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad dimension '" + rhs + "'");
      }
      if (dim < 1 || dim > kMaxDim) throw ParseError(line_no, "dimension out of range");
      continue;
    }
    if (lhs.size() < 2 || lhs.front() != '[' || lhs.back() != ']')
      throw ParseError(line_no, "expected '[e1,...,ed] = coefficient'");
    std::vector<int> exps;
    std::stringstream ss(lhs.substr(1, lhs.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      std::size_t used = 0;
      int e = -1;
      try {
        e = std::stoi(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size() || e < 0)
        throw ParseError(line_no, "bad exponent '" + item + "'");
      exps.push_back(e);
    }
    raw.push_back({exps, {parse_complex(rhs, line_no), line_no}});
  }
  if (dim == 0) throw ParseError(line_no, "missing 'dimension = d'");
  std::vector<PdeTerm> terms;
  for (const auto& [exps, cv] : raw) {
    if (static_cast<int>(exps.size()) != dim)
      throw ParseError(cv.second, "exponent count does not match dimension");
    MultiIndex m(dim);
    for (int i = 0; i < dim; ++i) m[i] = exps[i];
    terms.push_back({m, cv.first});
  }
  try {
    return PdeOperator(dim, terms);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, e.what());
  }
}

inline PdeOperator parse_pde(const std::string& text) {
  std::istringstream in(text);
  return parse_pde(in);
}

inline PdeOperator load_pde(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open PDE file " + path);
  return parse_pde(in);
}

}  // namespace cfmm
