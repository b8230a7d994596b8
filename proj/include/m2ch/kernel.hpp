#pragma once

// Discrete convolution with the Helmholtz Green function on a monotone point set:
//   sym_i  = sum_j            exp(-|y_i - y_j|) w_j dxi
//   asym_i = sum_j sign(i-j)  exp(-|y_i - y_j|) w_j dxi      (sign(0) = 0)
// evaluated in O(N) with a forward and a backward sweep. Every recursion factor
// exp(-(y_i - y_{i-1})) is at most one, so the sweeps cannot overflow.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace m2ch {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct KernelSums {
  ArrayX<Scalar> sym;
  ArrayX<Scalar> asym;
};

/// exp(-(y_i - y_{i-1})) for i >= 1 (entry 0 unused). Decrements larger than
/// `tolerance` are rejected; smaller ones are rounding noise and clamped to zero.
template <typename Derived>
ArrayX<typename Derived::Scalar> decay_factors(const Eigen::DenseBase<Derived>& y,
                                               typename Derived::Scalar tolerance = 1e-9) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = y.size();
  ArrayX<Scalar> f(n);
  if (n == 0) return f;
  f[0] = Scalar(1);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Scalar dy = y[i] - y[i - 1];
    if (dy < -tolerance || std::isnan(dy)) throw std::invalid_argument("kernel_convolve: positions are not monotone");
    f[i] = dy > Scalar(0) ? std::exp(-dy) : Scalar(1);
  }
  return f;
}

template <typename DerivedF, typename DerivedW>
KernelSums<typename DerivedW::Scalar> convolve_with_factors(const Eigen::DenseBase<DerivedF>& factors,
                                                            const Eigen::DenseBase<DerivedW>& w,
                                                            typename DerivedW::Scalar dxi) {
  using Scalar = typename DerivedW::Scalar;
  const Eigen::Index n = w.size();
  if (factors.size() != n) throw std::invalid_argument("kernel_convolve: size mismatch");
  KernelSums<Scalar> out{ArrayX<Scalar>(n), ArrayX<Scalar>(n)};
  if (n == 0) return out;

  ArrayX<Scalar> fwd(n), bwd(n);
  fwd[0] = w[0] * dxi;
  for (Eigen::Index i = 1; i < n; ++i) fwd[i] = factors[i] * fwd[i - 1] + w[i] * dxi;
  bwd[n - 1] = w[n - 1] * dxi;
  for (Eigen::Index i = n - 1; i-- > 0;) bwd[i] = factors[i + 1] * bwd[i + 1] + w[i] * dxi;

  out.sym = fwd + bwd - w.derived().array() * dxi;
  out.asym = fwd - bwd;
  return out;
}

template <typename DerivedY, typename DerivedW>
KernelSums<typename DerivedW::Scalar> kernel_convolve(const Eigen::DenseBase<DerivedY>& y,
                                                      const Eigen::DenseBase<DerivedW>& w,
                                                      typename DerivedW::Scalar dxi) {
  if (y.size() != w.size()) throw std::invalid_argument("kernel_convolve: size mismatch");
  return convolve_with_factors(decay_factors(y), w, dxi);
}

}  // namespace m2ch
