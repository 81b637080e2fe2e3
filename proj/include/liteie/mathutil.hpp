#pragma once

#include <cmath>
#include <algorithm>

namespace liteie {

// Rational tanh approximation (the classic Cephes polynomial, also used by
// Eigen): accurate to ~2.6e-7 absolute over the clamped range and roughly
// 6x faster than std::tanh here. Branch-free, so it vectorizes. The
// numerator/denominator split is exposed so sums of several tanh values can
// share one division.
inline void fast_tanhf_pq(float x, float& p, float& q) {
  x = std::min(std::max(x, -7.90531110763549805f), 7.90531110763549805f);
  const float x2 = x * x;
  p = -2.76076847742355e-16f;
  p = p * x2 + 2.00018790482477e-13f;
  p = p * x2 - 8.60467152213735e-11f;
  p = p * x2 + 5.12229709037114e-08f;
  p = p * x2 + 1.48572235717979e-05f;
  p = p * x2 + 6.37261928875436e-04f;
  p = p * x2 + 4.89352455891786e-03f;
  p = p * x;
  q = 1.19825839466702e-06f;
  q = q * x2 + 1.18534705686654e-04f;
  q = q * x2 + 2.26843463243900e-03f;
  q = q * x2 + 4.89352518554385e-03f;
}

inline float fast_tanhf(float x) {
  float p, q;
  fast_tanhf_pq(x, p, q);
  return p / q;
}

// Stage activation: the float inference path trades a few ULPs for speed,
// the double path (training, gradient checks) stays exact.
inline float act_tanh(float x) { return fast_tanhf(x); }
inline double act_tanh(double x) { return std::tanh(x); }

// a1*tanh(x1) + a2*tanh(x2) + a3*tanh(x3). The float version puts the three
// rationals over a common denominator (q > 0 everywhere) to pay for one
// division instead of three; the restoration pipeline evaluates this per
// pixel per call site, so both call sites sharing this definition is what
// keeps their outputs bit-equal.
inline float tanh_mix3(float a1, float x1, float a2, float x2, float a3,
                       float x3) {
  float p1, q1, p2, q2, p3, q3;
  fast_tanhf_pq(x1, p1, q1);
  fast_tanhf_pq(x2, p2, q2);
  fast_tanhf_pq(x3, p3, q3);
  const float q23 = q2 * q3;
  const float num = a1 * p1 * q23 + a2 * p2 * (q1 * q3) + a3 * p3 * (q1 * q2);
  return num / (q1 * q23);
}

inline double tanh_mix3(double a1, double x1, double a2, double x2, double a3,
                        double x3) {
  return a1 * std::tanh(x1) + a2 * std::tanh(x2) + a3 * std::tanh(x3);
}

template <typename T>
inline T clamp01(T v) {
  return std::min(std::max(v, T(0)), T(1));
}

// Neumaier-compensated accumulator. Loss and metric reductions use this so
// finite-difference gradient checks are not polluted by summation error.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

}  // namespace liteie
