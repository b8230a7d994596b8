#pragma once

// Multipeakon configurations and the Eulerian fields they define:
//   u(x)    = sum_i p_i exp(-|x - q_i|)
//   rhob(x) = sum_i s_i exp(-|x - q_i|)

#include <Eigen/Core>

#include <cmath>
#include <initializer_list>
#include <stdexcept>

namespace m2ch {

/// Signum with sign(0) = 0.
template <typename Scalar>
constexpr Scalar sign0(Scalar v) {
  return Scalar((Scalar(0) < v) - (v < Scalar(0)));
}

template <typename Scalar>
struct PeakonStateT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar t{0};
  Vector q;  // positions, strictly increasing
  Vector p;  // momenta
  Vector s;  // density amplitudes

  Eigen::Index size() const { return q.size(); }

  bool strictly_increasing() const {
    for (Eigen::Index i = 1; i < q.size(); ++i)
      if (!(q[i] > q[i - 1])) return false;
    return true;
  }
};

using PeakonState = PeakonStateT<double>;

/// Builds a state and checks shape and ordering; throws std::invalid_argument.
template <typename Scalar>
PeakonStateT<Scalar> make_peakon_state(const typename PeakonStateT<Scalar>::Vector& q,
                                       const typename PeakonStateT<Scalar>::Vector& p,
                                       const typename PeakonStateT<Scalar>::Vector& s,
                                       Scalar t = Scalar(0)) {
  if (q.size() != p.size() || q.size() != s.size())
    throw std::invalid_argument("peakon arrays q, p, s must have equal length");
  PeakonStateT<Scalar> state{t, q, p, s};
  if (!state.strictly_increasing())
    throw std::invalid_argument("peakon positions must be strictly increasing");
  if (!q.allFinite() || !p.allFinite() || !s.allFinite())
    throw std::invalid_argument("peakon arrays must be finite");
  return state;
}

inline PeakonState make_peakon_state(std::initializer_list<double> q, std::initializer_list<double> p,
                                     std::initializer_list<double> s, double t = 0.0) {
  auto to_vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
  };
  return make_peakon_state<double>(to_vec(q), to_vec(p), to_vec(s), t);
}

template <typename Scalar>
Scalar eval_u(const PeakonStateT<Scalar>& state, Scalar x) {
  if (state.size() == 0) return Scalar(0);
  return (state.p.array() * (-(state.q.array() - x).abs()).exp()).sum();
}

template <typename Scalar>
Scalar eval_rho_bar(const PeakonStateT<Scalar>& state, Scalar x) {
  if (state.size() == 0) return Scalar(0);
  return (state.s.array() * (-(state.q.array() - x).abs()).exp()).sum();
}

template <typename Scalar>
struct SlopesT {
  Scalar u_x{0};
  Scalar rho_bar_x{0};
};

/// Piecewise derivatives of u and rhob; at a peak the symmetric value (sign(0) = 0) is used.
template <typename Scalar>
SlopesT<Scalar> eval_derivatives(const PeakonStateT<Scalar>& state, Scalar x) {
  SlopesT<Scalar> out;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const Scalar d = state.q[i] - x;
    const Scalar w = sign0(d) * std::exp(-std::abs(d));
    out.u_x += state.p[i] * w;
    out.rho_bar_x += state.s[i] * w;
  }
  return out;
}

template <typename Scalar>
struct EulerianSampleT {
  Scalar x{0};
  Scalar u{0};
  Scalar u_x{0};
  Scalar rho_bar{0};
  Scalar rho_bar_x{0};
};

using EulerianSample = EulerianSampleT<double>;

template <typename Scalar>
EulerianSampleT<Scalar> sample(const PeakonStateT<Scalar>& state, Scalar x) {
  const auto slopes = eval_derivatives(state, x);
  return {x, eval_u(state, x), slopes.u_x, eval_rho_bar(state, x), slopes.rho_bar_x};
}

/// exp(-|q_i - q_j|) for all pairs.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> peak_kernel(const PeakonStateT<Scalar>& state) {
  const Eigen::Index n = state.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) k(i, j) = std::exp(-std::abs(state.q[i] - state.q[j]));
  return k;
}

/// Total energy 1/2 * int (u^2 + u_x^2 + rhob^2 + rhob_x^2) dx, which for peakons is
/// sum_{i,j} (p_i p_j + s_i s_j) exp(-|q_i - q_j|).
template <typename Scalar>
Scalar total_energy(const PeakonStateT<Scalar>& state) {
  if (state.size() == 0) return Scalar(0);
  const auto k = peak_kernel(state);
  return state.p.dot(k * state.p) + state.s.dot(k * state.s);
}

}  // namespace m2ch
