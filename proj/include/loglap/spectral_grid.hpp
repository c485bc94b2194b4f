#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "loglap/errors.hpp"
#include "loglap/fft.hpp"

namespace loglap {

using cplx = std::complex<double>;

/// Uniform periodic grid of n points on [-L/2, L/2) with the matching
/// frequency lattice p_k = 2 pi k / L. Frequencies are stored in transform
/// order: index k < n/2 holds k, index k >= n/2 holds k - n.
class SpectralGrid {
public:
  SpectralGrid(std::size_t n_points, double length) : n_(n_points), length_(length) {
    if (n_ < 2 || (n_ & (n_ - 1)) != 0) {
      throw ValidationError("grid.n_points must be a power of two >= 2");
    }
    if (!(length_ > 0.0) || !std::isfinite(length_)) {
      throw ValidationError("grid.length must be positive and finite");
    }
  }

  std::size_t size() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / static_cast<double>(n_); }
  double dp() const noexcept { return 2.0 * std::numbers::pi / length_; }

  double node(std::size_t j) const noexcept {
    return -0.5 * length_ + static_cast<double>(j) * dx();
  }

  /// Signed wavenumber index of transform slot k.
  long wavenumber(std::size_t k) const noexcept {
    const long kk = static_cast<long>(k);
    return k < n_ / 2 ? kk : kk - static_cast<long>(n_);
  }

  double freq(std::size_t k) const noexcept { return dp() * static_cast<double>(wavenumber(k)); }

  std::size_t zero_index() const noexcept { return 0; }
  std::size_t nyquist_index() const noexcept { return n_ / 2; }

  std::vector<double> nodes() const {
    std::vector<double> x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = node(j);
    return x;
  }

  std::vector<double> freqs() const {
    std::vector<double> p(n_);
    for (std::size_t k = 0; k < n_; ++k) p[k] = freq(k);
    return p;
  }

  friend bool operator==(const SpectralGrid&, const SpectralGrid&) = default;

private:
  std::size_t n_;
  double length_;
};

enum class Domain { space, frequency };

/// Samples of a function on a SpectralGrid, either at the nodes (space side)
/// or on the frequency lattice (frequency side).
class GridFunction {
public:
  GridFunction(SpectralGrid grid, Domain domain, std::vector<cplx> values)
      : grid_(grid), domain_(domain), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw GridMismatch("GridFunction: value count does not match grid size");
    }
  }

  static GridFunction zeros(const SpectralGrid& grid, Domain domain = Domain::space) {
    return {grid, domain, std::vector<cplx>(grid.size())};
  }

  template <typename Fn>
  static GridFunction sample(const SpectralGrid& grid, Fn&& fn) {
    std::vector<cplx> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = cplx(fn(grid.node(j)));
    return {grid, Domain::space, std::move(v)};
  }

  static GridFunction from_real(const SpectralGrid& grid, const std::vector<double>& re) {
    if (re.size() != grid.size()) throw GridMismatch("from_real: size mismatch");
    std::vector<cplx> v(re.begin(), re.end());
    return {grid, Domain::space, std::move(v)};
  }

  const SpectralGrid& grid() const noexcept { return grid_; }
  Domain domain() const noexcept { return domain_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<cplx>& values() const noexcept { return values_; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }

  /// Quadrature weight: dx on the space side, dp on the frequency side.
  double weight() const noexcept { return domain_ == Domain::space ? grid_.dx() : grid_.dp(); }

  std::vector<double> real_part() const {
    std::vector<double> r(values_.size());
    std::transform(values_.begin(), values_.end(), r.begin(), [](const cplx& z) { return z.real(); });
    return r;
  }

  GridFunction map(auto&& fn) const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), fn);
    return {grid_, domain_, std::move(v)};
  }

  friend GridFunction operator+(const GridFunction& lhs, const GridFunction& rhs) {
    return combine(lhs, rhs, 1.0, 1.0);
  }
  friend GridFunction operator-(const GridFunction& lhs, const GridFunction& rhs) {
    return combine(lhs, rhs, 1.0, -1.0);
  }
  friend GridFunction operator*(cplx s, const GridFunction& f) {
    return f.map([s](const cplx& z) { return s * z; });
  }
  friend GridFunction operator*(double s, const GridFunction& f) { return cplx(s) * f; }

  /// alpha*lhs + beta*rhs
  static GridFunction combine(const GridFunction& lhs, const GridFunction& rhs, cplx alpha, cplx beta) {
    require_compatible(lhs, rhs);
    std::vector<cplx> v(lhs.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = alpha * lhs.values_[i] + beta * rhs.values_[i];
    return {lhs.grid_, lhs.domain_, std::move(v)};
  }

  static void require_compatible(const GridFunction& lhs, const GridFunction& rhs) {
    if (!(lhs.grid_ == rhs.grid_)) throw GridMismatch("grid functions live on different grids");
    if (lhs.domain_ != rhs.domain_) throw GridMismatch("grid functions live on different sides of the transform");
  }

private:
  SpectralGrid grid_;
  Domain domain_;
  std::vector<cplx> values_;
};

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Rectangle-rule norms with the side-appropriate weight.
inline Norms norms(const GridFunction& f) {
  Norms n;
  double sq = 0.0;
  for (const auto& z : f.values()) {
    const double m = std::abs(z);
    n.l1 += m;
    sq += std::norm(z);
    n.linf = std::max(n.linf, m);
  }
  n.l1 *= f.weight();
  n.l2 = std::sqrt(sq * f.weight());
  return n;
}

inline double l2_norm(const GridFunction& f) { return norms(f).l2; }

/// Discrete version of (1/sqrt(2 pi)) int f(x) e^{-ipx} dx on the grid
/// frequencies, including the (-1)^k phase from the -L/2 domain offset.
inline GridFunction ft_forward(const GridFunction& f) {
  if (f.domain() != Domain::space) throw GridMismatch("ft_forward expects a space-side function");
  auto out = fft::forward(f.values());
  const double scale = f.grid().dx() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= (k % 2 == 0 ? scale : -scale);
  return {f.grid(), Domain::frequency, std::move(out)};
}

enum class Output { complex_valued, real_valued };

inline constexpr double kImaginaryTolerance = 1e-10;

/// Inverse of ft_forward. With Output::real_valued the imaginary part must be
/// below kImaginaryTolerance relative to the l2 norm, and is then dropped.
inline GridFunction ft_inverse(const GridFunction& F, Output mode = Output::complex_valued) {
  if (F.domain() != Domain::frequency) throw GridMismatch("ft_inverse expects a frequency-side function");
  const auto& grid = F.grid();
  std::vector<cplx> shifted(F.values());
  for (std::size_t k = 1; k < shifted.size(); k += 2) shifted[k] = -shifted[k];
  auto out = fft::backward(shifted);
  const double scale = std::sqrt(2.0 * std::numbers::pi) / (static_cast<double>(grid.size()) * grid.dx());
  for (auto& z : out) z *= scale;

  if (mode == Output::real_valued) {
    double im2 = 0.0, all2 = 0.0;
    for (const auto& z : out) {
      im2 += z.imag() * z.imag();
      all2 += std::norm(z);
    }
    if (std::sqrt(im2) > kImaginaryTolerance * std::sqrt(all2)) {
      std::ostringstream msg;
      msg << "ft_inverse: imaginary residue " << std::sqrt(im2 / all2) << " (relative) exceeds tolerance";
      throw ImaginaryResidue(msg.str());
    }
    for (auto& z : out) z = {z.real(), 0.0};
  }
  return {grid, Domain::space, std::move(out)};
}

/// Periodic convolution int K(x-y) G(y) dy through the transform:
/// ft_inverse(sqrt(2 pi) * K^ * G^).
inline GridFunction convolve_fft(const GridFunction& K, const GridFunction& G) {
  GridFunction::require_compatible(K, G);
  if (K.domain() != Domain::space) throw GridMismatch("convolve_fft expects space-side inputs");
  const auto Kh = ft_forward(K);
  const auto Gh = ft_forward(G);
  const double s = std::sqrt(2.0 * std::numbers::pi);
  std::vector<cplx> prod(Kh.size());
  for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = s * Kh[k] * Gh[k];
  return ft_inverse(GridFunction(K.grid(), Domain::frequency, std::move(prod)));
}

/// O(n^2) periodic quadrature sum_j K((x_i - x_j) wrapped) G(x_j) dx.
/// Intended as an independent check of convolve_fft.
inline GridFunction convolve_direct(const GridFunction& K, const GridFunction& G) {
  GridFunction::require_compatible(K, G);
  if (K.domain() != Domain::space) throw GridMismatch("convolve_direct expects space-side inputs");
  const std::size_t n = K.size();
  const std::size_t half = n / 2;
  const double dx = K.grid().dx();
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      // offset (i - j) dx wrapped into [-L/2, L/2) lives at node index offset + n/2
      const std::size_t idx = (i + n - j + half) % n;
      acc += K[idx] * G[j];
    }
    out[i] = acc * dx;
  }
  return {K.grid(), Domain::space, std::move(out)};
}

struct DecayCheck {
  double boundary_magnitude = 0.0;
  double threshold = 0.0;
  bool ok = true;
};

/// Compares |f| at the two outermost nodes against decay_tol * |f|_inf.
inline DecayCheck check_decay(const GridFunction& f, double decay_tol) {
  DecayCheck d;
  const auto n = f.size();
  d.boundary_magnitude = std::max(std::abs(f[0]), std::abs(f[n - 1]));
  d.threshold = decay_tol * norms(f).linf;
  d.ok = d.boundary_magnitude <= d.threshold;
  return d;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV with header "x,re,im" (space side) or "p,re,im" (frequency side),
/// 17 significant digits.
inline void write_csv(std::ostream& os, const GridFunction& f) {
  const bool space = f.domain() == Domain::space;
  os << (space ? "x" : "p") << ",re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double coord = space ? f.grid().node(i) : f.grid().freq(i);
    os << format_g17(coord) << ',' << format_g17(f[i].real()) << ',' << format_g17(f[i].imag()) << '\n';
  }
}

/// Parses the write_csv format back onto `grid`; the coordinate column must
/// match the grid to 1e-9 relative to the grid length.
inline GridFunction read_csv(std::istream& is, const SpectralGrid& grid) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("read_csv: empty input");
  Domain domain;
  if (line == "x,re,im") domain = Domain::space;
  else if (line == "p,re,im") domain = Domain::frequency;
  else throw ValidationError("read_csv: unexpected header '" + line + "'");

  std::vector<cplx> values;
  values.reserve(grid.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double c = 0, re = 0, im = 0;
    char comma1 = 0, comma2 = 0;
    std::istringstream row(line);
    if (!(row >> c >> comma1 >> re >> comma2 >> im) || comma1 != ',' || comma2 != ',') {
      throw ValidationError("read_csv: malformed row '" + line + "'");
    }
    const std::size_t i = values.size();
    if (i >= grid.size()) throw GridMismatch("read_csv: more rows than grid points");
    const double expect = domain == Domain::space ? grid.node(i) : grid.freq(i);
    if (std::abs(c - expect) > 1e-9 * grid.length()) throw GridMismatch("read_csv: coordinate does not match grid");
    values.emplace_back(re, im);
  }
  return {grid, domain, std::move(values)};
}

}  // namespace loglap
