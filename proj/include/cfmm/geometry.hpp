#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cfmm/multiindex.hpp"

namespace cfmm {

/// A point or displacement in R^d, d <= kMaxDim.
class Point {
 public:
  Point() = default;
  explicit Point(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("point dimension out of range");
  }
  Point(std::initializer_list<double> xs) : Point(static_cast<int>(xs.size())) {
    int i = 0;
    for (double v : xs) x_[i++] = v;
  }
  static Point filled(int dim, double v) {
    Point p(dim);
    for (int i = 0; i < dim; ++i) p.x_[i] = v;
    return p;
  }

  int dim() const { return dim_; }
  double operator[](int i) const { return x_[i]; }
  double& operator[](int i) { return x_[i]; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < dim_; ++i) s += x_[i] * x_[i];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  friend Point operator-(Point a, const Point& b) {
    a.check(b);
    for (int i = 0; i < a.dim_; ++i) a.x_[i] -= b.x_[i];
    return a;
  }
  friend Point operator+(Point a, const Point& b) {
    a.check(b);
    for (int i = 0; i < a.dim_; ++i) a.x_[i] += b.x_[i];
    return a;
  }
  friend Point operator*(double s, Point a) {
    for (int i = 0; i < a.dim_; ++i) a.x_[i] *= s;
    return a;
  }
  friend bool operator==(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.x_[i] != b.x_[i]) return false;
    return true;
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < dim_; ++i) os << (i ? ", " : "") << x_[i];
    os << ')';
    return os.str();
  }

  void check(const Point& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("mixed point dimensions");
  }

 private:
  std::array<double, kMaxDim> x_{};
  int dim_ = 0;
};

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

}  // namespace cfmm
