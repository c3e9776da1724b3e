#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace kdl {

inline constexpr int kMaxDim = 3;

// Points and displacements. Components beyond the box dimension are kept at
// exactly zero, so full-length dot products and norms are always correct.
using Vec = std::array<double, kMaxDim>;
using Mat = std::array<Vec, kMaxDim>;

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec& operator+=(Vec& a, const Vec& b) {
  a[0] += b[0];
  a[1] += b[1];
  a[2] += b[2];
  return a;
}

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline Mat zero_mat() { return Mat{}; }

inline Mat outer(const Vec& a, const Vec& b) {
  Mat m{};
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) m[i][j] = a[i] * b[j];
  return m;
}

inline Mat& add_scaled(Mat& m, double s, const Mat& other) {
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) m[i][j] += s * other[i][j];
  return m;
}

inline double trace(const Mat& m) { return m[0][0] + m[1][1] + m[2][2]; }

// Identity restricted to the first `dim` axes.
inline Mat identity(int dim) {
  Mat m{};
  for (int i = 0; i < dim; ++i) m[i][i] = 1.0;
  return m;
}

inline double max_abs(const Mat& m) {
  double v = 0.0;
  for (const auto& row : m)
    for (double x : row) v = std::fmax(v, std::fabs(x));
  return v;
}

}  // namespace kdl
