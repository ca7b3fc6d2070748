// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_TORUS_HPP
#define CHAINLAB_TORUS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace chainlab {

/// Reduce a real number to [0, 1).
inline double wrap01(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;  // x - floor(x) can round up to 1.0 for tiny negative x
    return r;
}

/// Reduce a coordinate difference to [-1/2, 1/2].
inline double wrap_half(double d) {
    return d - std::round(d);
}

/// Signed circle displacement carrying `from` onto `to`, in [-1/2, 1/2].
inline double circle_signed_dist(double from, double to) {
    return wrap_half(to - from);
}

inline double circle_dist(double a, double b) {
    return std::abs(wrap_half(a - b));
}

/// A point of T^3 = T^2 x S^1 in the flat quotient metric. All coordinates
/// are kept in [0, 1).
struct TorusPoint {
    Eigen::Vector2d base{0.0, 0.0};
    double fiber = 0.0;

    TorusPoint() = default;
    TorusPoint(double bx, double by, double f) : base(bx, by), fiber(f) {}
    TorusPoint(const Eigen::Vector2d& b, double f) : base(b), fiber(f) {}

    TorusPoint normalized() const {
        return {wrap01(base.x()), wrap01(base.y()), wrap01(fiber)};
    }

    bool operator==(const TorusPoint& o) const {
        return base.x() == o.base.x() && base.y() == o.base.y() && fiber == o.fiber;
    }
    bool operator!=(const TorusPoint& o) const { return !(*this == o); }
};

/// Difference vector in the covering space, each component in [-1/2, 1/2].
inline Eigen::Vector3d torus_diff(const TorusPoint& a, const TorusPoint& b) {
    return {wrap_half(a.base.x() - b.base.x()),
            wrap_half(a.base.y() - b.base.y()),
            wrap_half(a.fiber - b.fiber)};
}

inline Eigen::Vector2d base_diff(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return {wrap_half(a.x() - b.x()), wrap_half(a.y() - b.y())};
}

/// Flat quotient metric on T^3.
inline double torus_dist(const TorusPoint& a, const TorusPoint& b) {
    return torus_diff(a, b).norm();
}

inline double base_dist(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return base_diff(a, b).norm();
}

inline std::string to_string(const TorusPoint& p) {
    return "(" + std::to_string(p.base.x()) + ", " + std::to_string(p.base.y()) +
           ", " + std::to_string(p.fiber) + ")";
}

}  // namespace chainlab

#endif  // CHAINLAB_TORUS_HPP
