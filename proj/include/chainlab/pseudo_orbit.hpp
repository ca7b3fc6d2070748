// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_PSEUDO_ORBIT_HPP
#define CHAINLAB_PSEUDO_ORBIT_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "chainlab/skew_product.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

/// Finite eps-pseudo-orbit: d(x_{i+1}, f(x_i)) < eps for consecutive points.
struct PseudoOrbit {
    std::vector<TorusPoint> points;
    double epsilon = 0.0;

    int steps() const { return int(points.size()) - 1; }

    double max_jump(const SkewProductSystem& sys) const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            m = std::max(m, torus_dist(points[i + 1], sys.apply(points[i])));
        return m;
    }

    void validate(const SkewProductSystem& sys) const {
        if (points.size() < 2) throw std::invalid_argument("pseudo-orbit needs >= 2 points");
        const double m = max_jump(sys);
        if (!(m < epsilon))
            throw std::invalid_argument("pseudo-orbit jump bound violated: max jump " +
                                        std::to_string(m) + " >= eps " + std::to_string(epsilon));
    }
};

/// eps-center pseudo-orbit: all jumps run along center leaves, i.e. f(x_i)
/// and x_{i+1} share the base point, and the signed fiber jump times t_i
/// satisfy |t_i| < eps.
struct CenterPseudoOrbit {
    std::vector<TorusPoint> points;
    double epsilon = 0.0;
    /// jumpTimes[i] = t_{i+1}: signed fiber distance from fiber(f(x_i)) to
    /// fiber(x_{i+1}).
    std::vector<double> jumpTimes;

    int steps() const { return int(points.size()) - 1; }
    bool periodic() const { return points.size() >= 2 && points.front() == points.back(); }

    void validate(const SkewProductSystem& sys, double baseTol = 1e-10) const {
        if (points.size() < 2) throw std::invalid_argument("center pseudo-orbit needs >= 2 points");
        if (jumpTimes.size() + 1 != points.size())
            throw std::invalid_argument("center pseudo-orbit: jump time count mismatch");
        for (std::size_t i = 0; i + 1 < points.size(); ++i) {
            const TorusPoint img = sys.apply(points[i]);
            if (base_dist(img.base, points[i + 1].base) > baseTol)
                throw std::invalid_argument(
                    "center pseudo-orbit: jump at step " + std::to_string(i) +
                    " leaves the center leaf (base mismatch " +
                    std::to_string(base_dist(img.base, points[i + 1].base)) + ")");
            const double t = circle_signed_dist(img.fiber, points[i + 1].fiber);
            if (!(std::abs(t) < epsilon))
                throw std::invalid_argument("center pseudo-orbit: |t_" + std::to_string(i + 1) +
                                            "| = " + std::to_string(std::abs(t)) +
                                            " >= eps " + std::to_string(epsilon));
            if (std::abs(t - jumpTimes[i]) > 1e-12)
                throw std::invalid_argument("center pseudo-orbit: stored jump time mismatch at " +
                                            std::to_string(i));
        }
    }
};

}  // namespace chainlab

#endif  // CHAINLAB_PSEUDO_ORBIT_HPP
