// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_CENTER_SHADOWING_HPP
#define CHAINLAB_CENTER_SHADOWING_HPP

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainlab/pseudo_orbit.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

/// Closed-form shadowing constant of the linear base:
/// L_b = 1/(1-lambda_s) + 1/(1-1/lambda_u).
inline double base_lipschitz_bound(const SkewProductSystem& sys) {
    const double ls = std::abs(sys.lambda_s());
    const double lu = std::abs(sys.lambda_u());
    return 1.0 / (1.0 - ls) + 1.0 / (1.0 - 1.0 / lu);
}

namespace detail {

/// Base jump vectors of a pseudo-orbit in eigencoordinates:
/// j_i = A w_i - w_{i+1} reduced to [-1/2,1/2]^2, split as js*e_s + ju*e_u.
struct BaseJumps {
    std::vector<double> js, ju;
};

inline Eigen::Vector2d base_image(const SkewProductSystem& sys, const Eigen::Vector2d& v) {
    return {sys.base()(0, 0) * v.x() + sys.base()(0, 1) * v.y(),
            sys.base()(1, 0) * v.x() + sys.base()(1, 1) * v.y()};
}

inline BaseJumps decompose_base_jumps(const SkewProductSystem& sys,
                                      const std::vector<Eigen::Vector2d>& w) {
    Eigen::Matrix2d frame;
    frame.col(0) = sys.eig_s();
    frame.col(1) = sys.eig_u();
    const Eigen::Matrix2d inv = frame.inverse();
    BaseJumps out;
    const std::size_t n = w.size() - 1;
    out.js.resize(n);
    out.ju.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d j = base_diff(base_image(sys, w[i]), w[i + 1]);
        const Eigen::Vector2d c = inv * j;
        out.js[i] = c(0);
        out.ju[i] = c(1);
    }
    return out;
}

inline BaseJumps decompose_base_jumps(const SkewProductSystem& sys,
                                      const std::vector<TorusPoint>& w) {
    std::vector<Eigen::Vector2d> bases(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) bases[i] = w[i].base;
    return decompose_base_jumps(sys, bases);
}

/// Global shadowing solve of the linear base (free ends, bi-infinite
/// extension convention). Valid for jumps of any size; the eps_0-gated
/// base_shadow below is the Prop 2.1 entry point.
inline std::vector<Eigen::Vector2d> linear_shadow(const SkewProductSystem& sys,
                                                  const std::vector<Eigen::Vector2d>& w) {
    const std::size_t n = w.size() - 1;
    const BaseJumps j = decompose_base_jumps(sys, w);
    const double ls = sys.lambda_s(), lu = sys.lambda_u();
    std::vector<double> cs(n + 1, 0.0), cu(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cs[i + 1] = ls * cs[i] + j.js[i];
    for (std::size_t i = n; i-- > 0;) cu[i] = (cu[i + 1] - j.ju[i]) / lu;
    std::vector<Eigen::Vector2d> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const Eigen::Vector2d p = w[i] + cs[i] * sys.eig_s() + cu[i] * sys.eig_u();
        v[i] = Eigen::Vector2d(wrap01(p.x()), wrap01(p.y()));
    }
    return v;
}

}  // namespace detail

/// Holonomy step of the proof: the map between consecutive local stable disks,
/// a composition of the cu-holonomy with one application of f. In the global
/// eigen-fiber coordinates of the model it is the affine contraction
/// s -> lambda_s * s + jump_s.
struct HolonomyStep {
    TorusPoint source, target;
    double lambdaS = 0.0;
    double jumpS = 0.0;

    double apply(double s) const { return lambdaS * s + jumpS; }

    /// Point of the local stable disk at `source` with parameter s.
    TorusPoint disk_point(const SkewProductSystem& sys, double s) const {
        return TorusPoint(source.base + s * sys.eig_s(), source.fiber).normalized();
    }
};

inline std::vector<HolonomyStep> holonomy_steps(const SkewProductSystem& sys,
                                                const std::vector<TorusPoint>& w) {
    const detail::BaseJumps j = detail::decompose_base_jumps(sys, w);
    std::vector<HolonomyStep> steps(j.js.size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        steps[i] = {w[i], w[i + 1], sys.lambda_s(), j.js[i]};
    return steps;
}

namespace detail {

inline void check_jump_size(const SkewProductSystem& sys, const PseudoOrbit& po) {
    const double m = po.max_jump(sys);
    if (!(m < kEpsilon0))
        throw std::invalid_argument("shadowing: jumps too large (max " + std::to_string(m) +
                                    " >= eps_0 " + std::to_string(kEpsilon0) + ")");
}

}  // namespace detail

/// True base orbit shadowing the base components of a pseudo-orbit, with the
/// bi-infinite extension convention for the free ends (tail jumps vanish, so
/// the stable correction starts at zero and the unstable one ends at zero).
inline std::vector<Eigen::Vector2d> base_shadow(const SkewProductSystem& sys,
                                                const PseudoOrbit& po) {
    detail::check_jump_size(sys, po);
    std::vector<Eigen::Vector2d> bases(po.points.size());
    for (std::size_t i = 0; i < bases.size(); ++i) bases[i] = po.points[i].base;
    std::vector<Eigen::Vector2d> v = detail::linear_shadow(sys, bases);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double resid = base_dist(detail::base_image(sys, v[i]), v[i + 1]);
        if (resid > 1e-10)
            throw std::logic_error("base_shadow: output is not a true orbit (residual " +
                                   std::to_string(resid) + ")");
    }
    return v;
}

struct PeriodicShadowStats {
    int stable_iterations = 0;
    int unstable_iterations = 0;
};

/// Periodic variant: the stable correction is the fixed point of the composed
/// holonomy H^s_n, found by iterating it from the zero section (a uniform
/// contraction with factor lambda_s^n); the unstable pass runs backward.
inline std::vector<Eigen::Vector2d> base_shadow_periodic(const SkewProductSystem& sys,
                                                         const PseudoOrbit& po,
                                                         PeriodicShadowStats* stats = nullptr) {
    detail::check_jump_size(sys, po);
    const auto& w = po.points;
    if (!(w.front().base.x() == w.back().base.x() && w.front().base.y() == w.back().base.y()))
        throw std::invalid_argument("base_shadow_periodic: pseudo-orbit base is not periodic");
    const std::size_t n = w.size() - 1;
    const detail::BaseJumps j = detail::decompose_base_jumps(sys, w);
    const double ls = sys.lambda_s(), lu = sys.lambda_u();
    constexpr int kMaxIter = 10000;

    auto sweep_s = [&](double s0) {
        double s = s0;
        for (std::size_t i = 0; i < n; ++i) s = ls * s + j.js[i];
        return s;
    };
    double s = 0.0;
    int its = 0;
    for (;; ++its) {
        if (its > kMaxIter)
            throw std::runtime_error("base_shadow_periodic: stable holonomy iteration failed "
                                     "to converge (broken contraction)");
        const double next = sweep_s(s);
        const bool done = std::abs(next - s) < 1e-12;
        s = next;
        if (done) break;
    }

    auto sweep_u = [&](double un) {
        double u = un;
        for (std::size_t i = n; i-- > 0;) u = (u - j.ju[i]) / lu;
        return u;
    };
    double u = 0.0;
    int itu = 0;
    for (;; ++itu) {
        if (itu > kMaxIter)
            throw std::runtime_error("base_shadow_periodic: unstable holonomy iteration failed "
                                     "to converge (broken contraction)");
        const double next = sweep_u(u);
        const bool done = std::abs(next - u) < 1e-12;
        u = next;
        if (done) break;
    }
    if (stats) *stats = {its + 1, itu + 1};

    std::vector<double> cs(n + 1), cu(n + 1);
    cs[0] = s;
    for (std::size_t i = 0; i < n; ++i) cs[i + 1] = ls * cs[i] + j.js[i];
    cu[n] = u;
    for (std::size_t i = n; i-- > 0;) cu[i] = (cu[i + 1] - j.ju[i]) / lu;

    std::vector<Eigen::Vector2d> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const Eigen::Vector2d p = w[i].base + cs[i] * sys.eig_s() + cu[i] * sys.eig_u();
        v[i] = Eigen::Vector2d(wrap01(p.x()), wrap01(p.y()));
    }
    v[n] = v[0];  // exact closure; the cyclic solve leaves only rounding here
    return v;
}

struct CenterShadowResult {
    CenterPseudoOrbit chain;
    /// Empirical Lipschitz ratio sup_i max(d(x_i, w_i), |t_i|) / eps.
    double L = 0.0;
    double max_distance = 0.0;
    PeriodicShadowStats stats;
};

namespace detail {

inline CenterShadowResult assemble_center_chain(const SkewProductSystem& sys,
                                                const PseudoOrbit& po,
                                                const std::vector<Eigen::Vector2d>& bases) {
    const auto& w = po.points;
    const std::size_t n = w.size() - 1;
    CenterShadowResult res;
    res.chain.points.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) res.chain.points[i] = {bases[i], w[i].fiber};

    res.chain.jumpTimes.resize(n);
    double maxT = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const TorusPoint img = sys.apply(res.chain.points[i]);
        res.chain.jumpTimes[i] = circle_signed_dist(img.fiber, res.chain.points[i + 1].fiber);
        maxT = std::max(maxT, std::abs(res.chain.jumpTimes[i]));
    }
    for (std::size_t i = 0; i <= n; ++i)
        res.max_distance = std::max(res.max_distance, torus_dist(res.chain.points[i], w[i]));

    res.L = std::max(res.max_distance, maxT) / po.epsilon;
    res.chain.epsilon = std::max(maxT * (1 + 1e-9) + 1e-15, 1e-14);
    res.chain.validate(sys);

    const double hardBound = (base_lipschitz_bound(sys) + 1.0) * po.epsilon;
    if (res.max_distance >= hardBound)
        throw std::logic_error("center_shadow: shadowing distance " +
                               std::to_string(res.max_distance) + " exceeds (L_b+1)*eps " +
                               std::to_string(hardBound));
    return res;
}

}  // namespace detail

/// Upgrade an eps-pseudo-orbit to an L*eps-center pseudo-orbit: the base is
/// re-trued by base_shadow, the fibers are kept, so every jump runs along the
/// circle fiber through the new base point.
inline CenterShadowResult center_shadow(const SkewProductSystem& sys, const PseudoOrbit& po) {
    if (!(po.epsilon < kEpsilon0))
        throw std::invalid_argument("center_shadow: eps must be below eps_0 = " +
                                    std::to_string(kEpsilon0));
    return detail::assemble_center_chain(sys, po, base_shadow(sys, po));
}

/// Periodic variant of Prop 2.1's "moreover" clause: requires w_a = w_b and
/// returns a chain with x_a = x_b exactly (bitwise after normalization).
inline CenterShadowResult center_shadow_periodic(const SkewProductSystem& sys,
                                                 const PseudoOrbit& po) {
    if (!(po.epsilon < kEpsilon0))
        throw std::invalid_argument("center_shadow_periodic: eps must be below eps_0");
    if (!(po.points.front() == po.points.back()))
        throw std::invalid_argument("center_shadow_periodic: endpoints must coincide exactly");
    PeriodicShadowStats stats;
    CenterShadowResult res =
        detail::assemble_center_chain(sys, po, base_shadow_periodic(sys, po, &stats));
    res.stats = stats;
    res.chain.points.back() = res.chain.points.front();
    if (!res.chain.periodic())
        throw std::logic_error("center_shadow_periodic: closure failed");
    return res;
}

struct LipschitzRow {
    double eps = 0.0;
    int trial = 0;
    double max_distance = 0.0;
    double L = 0.0;
};

/// Empirical shadowing constants over random chains, one row per trial.
inline std::vector<LipschitzRow> measure_lipschitz_L(const SkewProductSystem& sys, int trialCount,
                                                     const std::vector<double>& epsList,
                                                     std::uint64_t seed = 20260810,
                                                     int chainLength = 40) {
    std::vector<LipschitzRow> rows;
    Rng rng(seed);
    for (double eps : epsList) {
        for (int t = 0; t < trialCount; ++t) {
            PseudoOrbit po;
            po.epsilon = eps;
            TorusPoint p(rng.unit(), rng.unit(), rng.unit());
            po.points.push_back(p);
            for (int i = 0; i < chainLength; ++i) {
                TorusPoint q = sys.apply(po.points.back());
                const double mag = rng.range(0.0, 0.9 * eps);
                const double azim = rng.range(0.0, kTwoPi);
                const double cosPolar = rng.range(-1.0, 1.0);
                const double sinPolar = std::sqrt(1.0 - cosPolar * cosPolar);
                q.base.x() += mag * sinPolar * std::cos(azim);
                q.base.y() += mag * sinPolar * std::sin(azim);
                q.fiber += mag * cosPolar;
                po.points.push_back(q.normalized());
            }
            const CenterShadowResult res = center_shadow(sys, po);
            rows.push_back({eps, t, res.max_distance, res.L});
        }
    }
    return rows;
}

inline void write_lipschitz_csv(std::ostream& os, const std::vector<LipschitzRow>& rows) {
    os << "eps,trial,max_distance,L_estimate\n";
    for (const auto& r : rows)
        os << r.eps << ',' << r.trial << ',' << r.max_distance << ',' << r.L << '\n';
}

}  // namespace chainlab

#endif  // CHAINLAB_CENTER_SHADOWING_HPP
