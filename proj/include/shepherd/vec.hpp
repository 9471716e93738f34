#pragma once

#include <cmath>

namespace shepherd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double norm2() const { return x * x + y * y; }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

/// Rescale v to norm `limit` when it exceeds it, identity otherwise.
inline Vec2 saturate(Vec2 v, double limit) {
  const double n = v.norm();
  if (n > limit) return v * (limit / n);
  return v;
}

}  // namespace shepherd
