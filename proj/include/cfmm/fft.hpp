#pragma once

// Discrete Fourier transforms of arbitrary length and d-dimensional circulant
// convolution.
//
// Forward transforms are unnormalised, X_k = sum_j x_j exp(-2 pi i jk / n);
// inverse transforms divide by the total number of entries. Lengths whose prime
// factors are all <= 7 use a recursive mixed-radix decimation in time; other
// lengths go through Bluestein's chirp-z algorithm on a power-of-two grid.
// Transforms are templated on the complex scalar so that counted scalars can
// tally their arithmetic.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cfmm/scalar.hpp"

namespace cfmm {

template <class C>
struct GridTensor {
  std::vector<int> shape;
  std::vector<C> data;  // row major, last axis fastest

  GridTensor() = default;
  explicit GridTensor(std::vector<int> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int e : shape) {
      if (e < 1) throw std::invalid_argument("grid extents must be positive");
      n *= static_cast<std::size_t>(e);
    }
    data.assign(n, C{});
  }
  std::size_t size() const { return data.size(); }
};

template <class C>
class Fft1D {
 public:
  Fft1D() = default;
  explicit Fft1D(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("transform length must be positive");
    int m = n;
    bool smooth = true;
    for (int r : {4, 2, 3, 5, 7})
      while (m % r == 0) {
        factors_.push_back(r);
        m /= r;
      }
    if (m != 1) smooth = false;
    if (smooth) {
      twiddle_.resize(n);
      for (int k = 0; k < n; ++k) twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
      return;
    }
    // Bluestein: convolution with a chirp on a power-of-two grid.
    factors_.clear();
    int big = 1;
    while (big < 2 * n - 1) big *= 2;
    inner_ = std::make_shared<Fft1D<C>>(big);
    chirp_.resize(n);
    for (int k = 0; k < n; ++k) {
      const std::int64_t k2 = (static_cast<std::int64_t>(k) * k) % (2 * static_cast<std::int64_t>(n));
      chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / n);
    }
    std::vector<C> b(big, C{});
    for (int k = 0; k < n; ++k) {
      b[k] = C(std::conj(chirp_[k]));
      if (k > 0) b[big - k] = C(std::conj(chirp_[k]));
    }
    {
      // Precomputation is plan setup, not transform work.
      const FlopCounter saved = thread_flops();
      inner_->forward(b.data());
      thread_flops() = saved;
    }
    chirp_spectrum_.resize(big);
    for (int k = 0; k < big; ++k) chirp_spectrum_[k] = raw_value(b[k]) / static_cast<double>(big);
  }

  int size() const { return n_; }

  /// In-place forward transform of n contiguous entries.
  void forward(C* x) const { run(x, false); }
  /// In-place unnormalised inverse (conjugate) transform.
  void backward(C* x) const { run(x, true); }

 private:
  void run(C* x, bool inverse) const {
    if (n_ == 1) return;
    if (!inner_) {
      thread_local std::vector<C> out;
      out.resize(n_);
      rec(x, out.data(), n_, 1, 0, inverse);
      for (int k = 0; k < n_; ++k) x[k] = out[k];
      return;
    }
    const int big = inner_->size();
    thread_local std::vector<C> work;
    work.resize(big);
    for (int k = 0; k < n_; ++k) work[k] = x[k] * C(chirp(k, inverse));
    for (int k = n_; k < big; ++k) work[k] = C{};
    inner_->forward(work.data());
    for (int k = 0; k < big; ++k) {
      const std::complex<double> s = inverse ? std::conj(chirp_spectrum_[k]) : chirp_spectrum_[k];
      work[k] = work[k] * C(s);
    }
    // Inverse of size big via the conjugate trick: the 1/big factor is folded
    // into chirp_spectrum_.
    inner_->backward(work.data());
    for (int k = 0; k < n_; ++k) x[k] = work[k] * C(chirp(k, inverse));
  }

  std::complex<double> chirp(int k, bool inverse) const { return inverse ? std::conj(chirp_[k]) : chirp_[k]; }

  // out[k] = sum_j in[j*stride] w^{jk}, length n, n | n_.
  void rec(const C* in, C* out, int n, int stride, std::size_t level, bool inverse) const {
    if (n == 1) {
      out[0] = in[0];
      return;
    }
    const int r = factors_[level];
    const int m = n / r;
    for (int q = 0; q < r; ++q) rec(in + q * stride, out + q * m, m, stride * r, level + 1, inverse);
    const int tw_step = n_ / n;  // w_n^x = w_N^{x * tw_step}
    C tmp[7];
    for (int k = 0; k < m; ++k) {
      for (int q = 0; q < r; ++q) {
        const int e = q * k;
        tmp[q] = e == 0 ? out[q * m + k] : out[q * m + k] * C(tw(e * tw_step, inverse));
      }
      if (r == 2) {
        out[k] = tmp[0] + tmp[1];
        out[k + m] = tmp[0] - tmp[1];
        continue;
      }
      for (int s = 0; s < r; ++s) {
        C acc = tmp[0];
        for (int q = 1; q < r; ++q) {
          const int e = (q * s) % r;
          acc += e == 0 ? tmp[q] : tmp[q] * C(tw(e * (n_ / r), inverse));
        }
        out[k + s * m] = acc;
      }
    }
  }

  std::complex<double> tw(int e, bool inverse) const {
    const auto& w = twiddle_[e % n_];
    return inverse ? std::conj(w) : w;
  }

  int n_ = 0;
  std::vector<int> factors_;
  std::vector<std::complex<double>> twiddle_;
  std::shared_ptr<Fft1D<C>> inner_;
  std::vector<std::complex<double>> chirp_;
  std::vector<std::complex<double>> chirp_spectrum_;
};

/// Transforms over a fixed grid shape. Scratch space is per thread, so one
/// instance may be shared.
template <class C>
class GridFft {
 public:
  GridFft() = default;
  explicit GridFft(std::vector<int> shape) : shape_(std::move(shape)) {
    for (int e : shape_) axes_.emplace_back(e);
    total_ = 1;
    for (int e : shape_) total_ *= static_cast<std::size_t>(e);
  }

  const std::vector<int>& shape() const { return shape_; }
  std::size_t total() const { return total_; }

  void forward(std::vector<C>& data) const { apply(data, false); }
  void inverse(std::vector<C>& data) const {
    apply(data, true);
    const C inv_n(1.0 / static_cast<double>(total_));
    for (auto& v : data) v = v * inv_n;
  }

 private:
  void apply(std::vector<C>& data, bool inverse) const {
    if (data.size() != total_) throw std::invalid_argument("grid data size does not match transform shape");
    const int d = static_cast<int>(shape_.size());
    thread_local std::vector<C> line;
    std::size_t stride = 1;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t n = static_cast<std::size_t>(shape_[a]);
      if (n > 1) {
        line.resize(n);
        const std::size_t block = stride * n;
        for (std::size_t base = 0; base < total_; base += block)
          for (std::size_t off = 0; off < stride; ++off) {
            for (std::size_t k = 0; k < n; ++k) line[k] = data[base + off + k * stride];
            if (inverse)
              axes_[a].backward(line.data());
            else
              axes_[a].forward(line.data());
            for (std::size_t k = 0; k < n; ++k) data[base + off + k * stride] = line[k];
          }
      }
      stride *= n;
    }
  }

  std::vector<int> shape_;
  std::vector<Fft1D<C>> axes_;
  std::size_t total_ = 0;
};

template <class C>
GridTensor<C> dft_forward(GridTensor<C> t) {
  GridFft<C>(t.shape).forward(t.data);
  return t;
}

template <class C>
GridTensor<C> dft_inverse(GridTensor<C> t) {
  GridFft<C>(t.shape).inverse(t.data);
  return t;
}

/// Cyclic convolution of `signal` with the kernel whose forward transform is
/// `kernel_spectrum`.
template <class C>
GridTensor<C> circulant_convolve(const GridTensor<C>& kernel_spectrum, GridTensor<C> signal) {
  if (kernel_spectrum.shape != signal.shape) throw std::invalid_argument("convolution shapes differ");
  const GridFft<C> fft(signal.shape);
  fft.forward(signal.data);
  for (std::size_t i = 0; i < signal.size(); ++i) signal.data[i] = signal.data[i] * kernel_spectrum.data[i];
  fft.inverse(signal.data);
  return signal;
}

}  // namespace cfmm
