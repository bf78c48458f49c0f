#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kramers::quad {

/// Adaptive Gauss-Kronrod (7/15) on a finite interval.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = 1e-11) {
  if (hi == lo) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), lo, hi, 30, rel_tol);
}

/// Integral of f over [lo, inf) for integrands with algebraic or faster decay.
template <class F>
double integrate_to_infinity(F&& f, double lo, double rel_tol = 1e-11) {
  // Boost declares integrate() non-const; one instance per thread.
  thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
  double err = 0.0;
  if (lo > 0.0) {
    // z = lo * e^s turns algebraic tails into exponential ones.
    auto logmap = [&](double s) {
      const double z = lo * std::exp(s);
      return std::isinf(z) ? 0.0 : f(z) * z;
    };
    return integrator.integrate(logmap, rel_tol, &err);
  }
  auto shifted = [&](double s) { return f(lo + s); };
  return integrator.integrate(shifted, rel_tol, &err);
}

}  // namespace kramers::quad
