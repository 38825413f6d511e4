#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "swarmrl/env/config.hpp"

namespace swarmrl::env {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (−π, π].
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

/// Wraps an angle into [0, 2π).
inline double wrap_heading(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double wrap_coordinate(double c, double extent) {
  double r = std::fmod(c, extent);
  if (r < 0.0) r += extent;
  return r >= extent ? 0.0 : r;
}

/// Clamps (closed) or wraps (toroidal) a position into the world.
inline Vec2 apply_boundary(double x, double y, const WorldConfig& world) {
  if (world.boundary == Boundary::closed)
    return {std::clamp(x, 0.0, world.x_max), std::clamp(y, 0.0, world.y_max)};
  return {wrap_coordinate(x, world.x_max), wrap_coordinate(y, world.y_max)};
}

/// Displacement from `from` to `to`; minimal image on toroidal worlds.
inline Vec2 displacement(Vec2 from, Vec2 to, const WorldConfig& world) {
  Vec2 d = to - from;
  if (world.boundary == Boundary::toroidal) {
    auto image = [](double c, double extent) {
      if (c > 0.5 * extent) c -= extent;
      else if (c < -0.5 * extent) c += extent;
      if (std::abs(c) > 0.5 * extent) c -= extent * std::round(c / extent);
      return c;
    };
    d.x = image(d.x, world.x_max);
    d.y = image(d.y, world.y_max);
  }
  return d;
}

inline double distance(Vec2 a, Vec2 b, const WorldConfig& world) { return displacement(a, b, world).norm(); }

inline Vec2 position(const AgentState& s) { return {s.x, s.y}; }
inline Vec2 position(const EvaderState& s) { return {s.x, s.y}; }

/// Geometry of agent j as perceived by agent i.
struct PairGeometry {
  double distance = 0.0;
  double bearing = 0.0;      // direction to j relative to i's heading, (−π, π]
  double orientation = 0.0;  // direction to i relative to j's heading, (−π, π]
  Vec2 relative_velocity;    // ν^i − ν^j
};

/// Coincident agents get bearing and orientation 0.
inline PairGeometry pairwise_geometry(const AgentState& i, const AgentState& j, const WorldConfig& world) {
  PairGeometry g;
  const Vec2 d = displacement(position(i), position(j), world);
  g.distance = d.norm();
  if (g.distance > 0.0) {
    g.bearing = wrap_angle(std::atan2(d.y, d.x) - i.phi);
    g.orientation = wrap_angle(std::atan2(-d.y, -d.x) - j.phi);
  }
  g.relative_velocity = {i.v * std::cos(i.phi) - j.v * std::cos(j.phi), i.v * std::sin(i.phi) - j.v * std::sin(j.phi)};
  return g;
}

/// Distance and bearing from an agent to a point target (e.g. an evader).
inline std::array<double, 2> range_bearing(const AgentState& i, Vec2 target, const WorldConfig& world) {
  const Vec2 d = displacement(position(i), target, world);
  const double r = d.norm();
  return {r, r > 0.0 ? wrap_angle(std::atan2(d.y, d.x) - i.phi) : 0.0};
}

struct WallFeatures {
  double distance = 0.0;
  double bearing = 0.0;
};

/// Distance and relative orientation to the nearest wall of a closed world.
/// Ties resolve in the order x-min, y-min, x-max, y-max.
inline WallFeatures wall_features(const AgentState& s, const WorldConfig& world) {
  if (world.boundary != Boundary::closed) throw ConfigError("wall features are absent in toroidal worlds");
  const std::array<double, 4> dist{s.x, s.y, world.x_max - s.x, world.y_max - s.y};
  static constexpr std::array<double, 4> wall_dir{kPi, -kPi / 2.0, 0.0, kPi / 2.0};
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.size(); ++k)
    if (dist[k] < dist[best]) best = k;
  return {dist[best], wrap_angle(wall_dir[best] - s.phi)};
}

}  // namespace swarmrl::env
