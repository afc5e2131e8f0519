#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace hmhf {

// Five-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 5> kGaussX = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussW = {0.2369268850561891, 0.4786286704993665,
                                                  0.5688888888888889, 0.4786286704993665,
                                                  0.2369268850561891};

template <class F>
double gauss5(F&& f, double a, double b) {
  double m = 0.5 * (a + b), hw = 0.5 * (b - a), s = 0;
  for (int i = 0; i < 5; ++i) s += kGaussW[i] * f(m + hw * kGaussX[i]);
  return s * hw;
}

// Quintic Hermite interpolation on [x0, x1] from value, first and second derivative at both ends.
struct Quintic {
  double value, deriv;
};

inline Quintic quintic_hermite(double x0, double x1, double y0, double d0, double s0, double y1, double d1,
                               double s1, double x) {
  double D = x1 - x0, t = (x - x0) / D;
  double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, H0p = -30 * t2 + 60 * t3 - 30 * t4;
  double H1 = t - 6 * t3 + 8 * t4 - 3 * t5, H1p = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), H2p = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  double H3 = 0.5 * (t3 - 2 * t4 + t5), H3p = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  double H4 = -4 * t3 + 7 * t4 - 3 * t5, H4p = -12 * t2 + 28 * t3 - 15 * t4;
  double H5 = 10 * t3 - 15 * t4 + 6 * t5, H5p = 30 * t2 - 60 * t3 + 30 * t4;
  double v = y0 * H0 + D * d0 * H1 + D * D * s0 * H2 + D * D * s1 * H3 + D * d1 * H4 + y1 * H5;
  double dv = (y0 * H0p + D * d0 * H1p + D * D * s0 * H2p + D * D * s1 * H3p + D * d1 * H4p + y1 * H5p) / D;
  return {v, dv};
}

// Trapezoid rule over tabulated samples.
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0;
  for (size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  return s;
}

// Unit sphere measure |S^{d-1}|.
inline double sphere_measure(int d) { return 2 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace hmhf
