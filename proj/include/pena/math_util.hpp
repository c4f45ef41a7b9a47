#pragma once

#include <cmath>

namespace pena {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_choose(int n, int k) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

inline double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(log_choose(n, k));
}

// Generalized binomial coefficient C(q, j) = q(q-1)...(q-j+1)/j! for real q.
inline double gen_binom(double q, int j) {
  double num = 1.0;
  for (int i = 0; i < j; ++i) num *= (q - double(i)) / double(i + 1);
  return num;
}

// x^n with the 0^0 = 1 endpoint convention used by the coalescent rates.
inline double pow_int_00(double x, int n) {
  if (n == 0) return 1.0;
  return std::pow(x, double(n));
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace pena
