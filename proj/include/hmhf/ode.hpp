#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "hmhf/errors.hpp"

namespace hmhf {

template <size_t N>
using State = std::array<double, N>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double h0 = 0.0;  // 0: pick from the derivative scale
  double hmax = INFINITY;
  std::function<double(double)> hmax_at;  // optional position-dependent step cap
  long max_steps = 2000000;
};

// Adaptive Dormand-Prince 5(4). on_step(t, y, dydt) is called at t0 and after every accepted step;
// returning false stops the integration early. Returns the final t reached.
template <size_t N, class F, class OnStep>
double dopri5(F&& f, double t0, State<N> y, double t1, const OdeOptions& o, OnStep&& on_step) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double dir = t1 >= t0 ? 1.0 : -1.0;
  double t = t0;
  State<N> k1 = f(t, y), k2, k3, k4, k5, k6, k7, yt, yn;
  if (!on_step(t, y, k1)) return t;

  auto cap = [&](double tt) {
    double m = o.hmax;
    if (o.hmax_at) m = std::min(m, o.hmax_at(tt));
    return m;
  };
  double h = o.h0;
  if (!(h > 0)) {
    double sc = 0, dn = 0;
    for (size_t i = 0; i < N; ++i) {
      double s = o.atol + o.rtol * std::abs(y[i]);
      sc += (y[i] / s) * (y[i] / s);
      dn += (k1[i] / s) * (k1[i] / s);
    }
    h = (dn > 1e-20 && sc > 1e-20) ? 0.01 * std::sqrt(sc / dn) : 1e-6;
    h = std::min(h, std::abs(t1 - t0));
  }
  double err_prev = 1e-4;
  long steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > o.max_steps) throw Error(Errc::StepFailure, "step budget exhausted");
    h = std::min({h, cap(t), std::abs(t1 - t)});
    if (h < 1e-15 * std::max(1.0, std::abs(t))) throw Error(Errc::StepFailure, "step size underflow");
    double hs = dir * h;
    for (size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
    k2 = f(t + c2 * hs, yt);
    for (size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * hs, yt);
    for (size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * hs, yt);
    for (size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * hs, yt);
    for (size_t i = 0; i < N; ++i)
      yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(t + hs, yt);
    for (size_t i = 0; i < N; ++i)
      yn[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = f(t + hs, yn);
    double err = 0;
    bool finite = true;
    for (size_t i = 0; i < N; ++i) {
      double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double sc = o.atol + o.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      err += (ei / sc) * (ei / sc);
      finite = finite && std::isfinite(yn[i]);
    }
    err = std::sqrt(err / N);
    if (!finite || !std::isfinite(err)) {
      h *= 0.2;
      continue;
    }
    if (err <= 1.0) {
      t = (std::abs(t1 - (t + hs)) < 1e-14 * std::max(1.0, std::abs(t1))) ? t1 : t + hs;
      y = yn;
      k1 = k7;
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err, 1e-4);
      if (!on_step(t, y, k1)) return t;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return t;
}

}  // namespace hmhf
