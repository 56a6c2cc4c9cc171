#pragma once

#include <cmath>

namespace hall {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 p, Vec2 q) { return {p.x + q.x, p.y + q.y}; }
inline Vec2 operator-(Vec2 p, Vec2 q) { return {p.x - q.x, p.y - q.y}; }
inline Vec2 operator*(double c, Vec2 p) { return {c * p.x, c * p.y}; }
inline double dot(Vec2 p, Vec2 q) { return p.x * q.x + p.y * q.y; }
inline double cross(Vec2 p, Vec2 q) { return p.x * q.y - p.y * q.x; }
inline double norm(Vec2 p) { return std::hypot(p.x, p.y); }

// Wrap x into [0, L).
inline double wrap(double x, double L) {
  double r = std::fmod(x, L);
  return r < 0.0 ? r + L : r;
}

// Signed minimum-image representative in [-L/2, L/2).
inline double min_image(double dx, double L) {
  double r = wrap(dx + 0.5 * L, L) - 0.5 * L;
  return r;
}

inline Vec2 torus_delta(Vec2 p, Vec2 q, double Lx, double Ly) {
  return {min_image(p.x - q.x, Lx), min_image(p.y - q.y, Ly)};
}

inline double torus_dist(Vec2 p, Vec2 q, double Lx, double Ly) {
  return norm(torus_delta(p, q, Lx, Ly));
}

// Distance from point p to segment [s0, s1] in the plane (no wrapping).
inline double dist_point_segment(Vec2 p, Vec2 s0, Vec2 s1) {
  Vec2 d = s1 - s0;
  double len2 = dot(d, d);
  if (len2 == 0.0) return norm(p - s0);
  double t = dot(p - s0, d) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  Vec2 proj = s0 + t * d;
  return norm(p - proj);
}

}  // namespace hall
