#pragma once

// All odeint use goes through this header: the specialization below must precede odeint's instantiations.
#include <boost/multiprecision/float128.hpp>
#include <boost/numeric/odeint/algebra/detail/extract_value_type.hpp>

namespace boost::numeric::odeint::detail {
template <>
struct extract_value_type<boost::multiprecision::float128, void> {
  typedef boost::multiprecision::float128 type;
};
}  // namespace boost::numeric::odeint::detail

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cstddef>
#include <vector>

#include "../errors.hpp"

namespace kgwave::detail {

using quad = boost::multiprecision::float128;

template <class Real, std::size_t N>
using ode_state = std::array<Real, N>;

template <class Real, std::size_t N>
auto make_stepper(Real tol) {
  namespace od = boost::numeric::odeint;
  using S = ode_state<Real, N>;
  return od::make_controlled(tol, tol, od::runge_kutta_fehlberg78<S, Real, S, Real>());
}

// Adaptive RKF7(8) from t0 to t1; observer(state, t) sees every accepted step.
template <class Real, std::size_t N, class Rhs, class Obs>
std::size_t integrate_adaptive(Rhs rhs, ode_state<Real, N>& x, Real t0, Real t1, Real tol, Obs obs) {
  namespace od = boost::numeric::odeint;
  Real dt0 = (t1 - t0) / Real(64);
  std::size_t steps = od::integrate_adaptive(make_stepper<Real, N>(tol), rhs, x, t0, t1, dt0, obs);
  for (auto& v : x)
    if (!boost::math::isfinite(v)) throw IntegratorError("integrator produced a non-finite state");
  return steps;
}

template <class Real, std::size_t N, class Rhs>
std::size_t integrate_adaptive(Rhs rhs, ode_state<Real, N>& x, Real t0, Real t1, Real tol) {
  return integrate_adaptive<Real, N>(rhs, x, t0, t1, tol, [](const ode_state<Real, N>&, Real) {});
}

// States at the requested (increasing) times.
template <class Real, std::size_t N, class Rhs>
std::vector<ode_state<Real, N>> integrate_at(Rhs rhs, ode_state<Real, N> x, const std::vector<Real>& times, Real tol) {
  std::vector<ode_state<Real, N>> out;
  out.reserve(times.size());
  Real t = times.empty() ? Real(0) : times.front();
  for (Real tn : times) {
    if (tn > t) integrate_adaptive<Real, N>(rhs, x, t, tn, tol);
    t = tn;
    out.push_back(x);
  }
  return out;
}

}  // namespace kgwave::detail
