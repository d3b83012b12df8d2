#pragma once

#include <cmath>

namespace camrl {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    // z-component of the cross product; positive when o is ccw from *this
    constexpr double det(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double norm_sq() const { return x * x + y * y; }

    // zero vector normalizes to zero
    Vec2 normalized() const {
        double n = norm();
        if (n == 0.0) return {0.0, 0.0};
        return {x / n, y / n};
    }
    constexpr Vec2 perp() const { return {-y, x}; }
    Vec2 rotated(double angle) const {
        double c = std::cos(angle), s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

}  // namespace camrl
