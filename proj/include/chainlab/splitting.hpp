// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_SPLITTING_HPP
#define CHAINLAB_SPLITTING_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainlab/rng.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

/// Unit frame (e_s, e_c, e_u) of the invariant splitting at one point.
/// For this model class e_c is the fiber direction (0,0,1) exactly.
struct SplittingFrame {
    TorusPoint point;
    Eigen::Vector3d e_s;
    Eigen::Vector3d e_c;
    Eigen::Vector3d e_u;
};

inline double direction_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double c = std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0);
    return std::acos(c);
}

/// Invariant splitting by power iteration: e_u from pushing a generic vector
/// forward along the backward orbit ending at p, e_s from pulling back along
/// the forward orbit. Converges at the domination rate; the last-step
/// direction change must drop below 1e-10 within `depth` steps.
inline SplittingFrame compute_splitting(const SkewProductSystem& sys, const TorusPoint& p,
                                        int depth) {
    if (depth < 1) throw std::invalid_argument("compute_splitting: depth must be >= 1");

    SplittingFrame fr;
    fr.point = p.normalized();
    fr.e_c = Eigen::Vector3d(0, 0, 1);

    if (sys.is_product()) {
        fr.e_u = Eigen::Vector3d(sys.eig_u().x(), sys.eig_u().y(), 0.0);
        fr.e_s = Eigen::Vector3d(sys.eig_s().x(), sys.eig_s().y(), 0.0);
        return fr;
    }

    // Backward orbit q_depth, ..., q_1, q_0 = p.
    std::vector<TorusPoint> back(depth + 1);
    back[0] = fr.point;
    for (int j = 1; j <= depth; ++j) back[j] = sys.apply_inverse(back[j - 1]);

    auto push_forward = [&](int startDepth) {
        Eigen::Vector3d v(sys.eig_u().x(), sys.eig_u().y(), 0.0);
        for (int j = startDepth; j >= 1; --j) {
            v = sys.differential(back[j]) * v;
            v.normalize();
        }
        return v;
    };
    Eigen::Vector3d u_full = push_forward(depth);
    Eigen::Vector3d u_prev = push_forward(depth - 1);
    if ((u_full - u_prev).norm() > 1e-10 && (u_full + u_prev).norm() > 1e-10)
        throw std::runtime_error("compute_splitting: unstable direction did not converge "
                                 "within depth (domination margin too small?)");

    std::vector<TorusPoint> fwd(depth + 1);
    fwd[0] = fr.point;
    for (int j = 1; j <= depth; ++j) fwd[j] = sys.apply(fwd[j - 1]);

    auto pull_back = [&](int startDepth) {
        Eigen::Vector3d v(sys.eig_s().x(), sys.eig_s().y(), 0.0);
        for (int j = startDepth - 1; j >= 0; --j) {
            v = sys.differential(fwd[j]).inverse() * v;
            v.normalize();
        }
        return v;
    };
    Eigen::Vector3d s_full = pull_back(depth);
    Eigen::Vector3d s_prev = pull_back(depth - 1);
    if ((s_full - s_prev).norm() > 1e-10 && (s_full + s_prev).norm() > 1e-10)
        throw std::runtime_error("compute_splitting: stable direction did not converge "
                                 "within depth (domination margin too small?)");

    // Orient the base components along the base eigendirections.
    if (u_full.head<2>().dot(sys.eig_u()) < 0) u_full = -u_full;
    if (s_full.head<2>().dot(sys.eig_s()) < 0) s_full = -s_full;
    fr.e_u = u_full;
    fr.e_s = s_full;
    return fr;
}

struct HyperbolicityReport {
    bool pass = false;
    /// Worst log-scale margin of the inequality chain
    /// |Df^k e_s| < min(1,|Df^k e_c|) <= max(1,|Df^k e_c|) < |Df^k e_u|.
    double margin = 0.0;
    /// Geometric mean of |Df^k e_u|^(1/k) over the samples.
    double lambda_estimate = 0.0;
    double min_pairwise_angle = 0.0;
    TorusPoint worst_point;
    int samples = 0;
};

/// Sample-based check of the partial hyperbolicity inequalities in the
/// computed frames; reports the worst margin instead of throwing.
inline HyperbolicityReport verify_partial_hyperbolicity(const SkewProductSystem& sys,
                                                        int sampleCount, int k,
                                                        std::uint64_t seed = 20260810,
                                                        int depth = 80) {
    if (sampleCount < 1)
        throw std::invalid_argument("verify_partial_hyperbolicity: sampleCount must be >= 1");
    Rng rng(seed);
    HyperbolicityReport rep;
    rep.margin = std::numeric_limits<double>::infinity();
    rep.min_pairwise_angle = std::numeric_limits<double>::infinity();
    double logAcc = 0.0;

    for (int s = 0; s < sampleCount; ++s) {
        const TorusPoint p(rng.unit(), rng.unit(), rng.unit());
        const SplittingFrame fr = compute_splitting(sys, p, depth);

        Eigen::Vector3d vs = fr.e_s, vc = fr.e_c, vu = fr.e_u;
        TorusPoint q = p;
        for (int j = 0; j < k; ++j) {
            const Eigen::Matrix3d d = sys.differential(q);
            vs = d * vs;
            vc = d * vc;
            vu = d * vu;
            q = sys.apply(q);
        }
        const double ns = vs.norm(), nc = vc.norm(), nu = vu.norm();
        const double mS = std::log(std::min(1.0, nc)) - std::log(ns);
        const double mU = std::log(nu) - std::log(std::max(1.0, nc));
        const double m = std::min(mS, mU);
        if (m < rep.margin) {
            rep.margin = m;
            rep.worst_point = p;
        }
        logAcc += std::log(nu) / k;

        const double ang = std::min({direction_angle(fr.e_s, fr.e_c),
                                     direction_angle(fr.e_s, fr.e_u),
                                     direction_angle(fr.e_c, fr.e_u)});
        rep.min_pairwise_angle = std::min(rep.min_pairwise_angle, ang);
    }
    rep.samples = sampleCount;
    rep.lambda_estimate = std::exp(logAcc / sampleCount);
    rep.pass = rep.margin > 0.0;
    return rep;
}

/// True iff all chord directions of the sampled curve lie in the a-cone
/// around E^c at their base points. Consecutive samples must be closer
/// than 1e-2.
inline bool cone_check(const SkewProductSystem& sys, const std::vector<TorusPoint>& curve,
                       double aCone, int depth = 60) {
    if (curve.size() < 2) throw std::invalid_argument("cone_check: need at least two samples");
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        if (torus_dist(curve[i], curve[i + 1]) >= 1e-2)
            throw std::invalid_argument("cone_check: curve samples too sparse");

    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const SplittingFrame fr = compute_splitting(sys, curve[i], depth);
        Eigen::Matrix3d frame;
        frame.col(0) = fr.e_s;
        frame.col(1) = fr.e_c;
        frame.col(2) = fr.e_u;
        const Eigen::Vector3d chord = torus_diff(curve[i + 1], curve[i]);
        const Eigen::Vector3d c = frame.colPivHouseholderQr().solve(chord);
        const double suNorm = (c(0) * fr.e_s + c(2) * fr.e_u).norm();
        if (suNorm > aCone * std::abs(c(1))) return false;
    }
    return true;
}

/// Vector field positively transverse to E^s + E^u. The default is the
/// positive unit center field X = e_c, whose time-tau map is fiber rotation
/// by tau. An optional e_u tilt exercises the section machinery; its flow is
/// integrated with RK4.
class CenterVectorField {
public:
    explicit CenterVectorField(const SkewProductSystem& sys, double uTilt = 0.0, int depth = 45)
        : sys_(&sys), tilt_(uTilt), depth_(depth) {}

    double tilt() const { return tilt_; }
    bool pure() const { return tilt_ == 0.0; }

    Eigen::Vector3d operator()(const TorusPoint& z) const {
        Eigen::Vector3d x(0, 0, 1);
        if (tilt_ != 0.0) x += tilt_ * compute_splitting(*sys_, z, depth_).e_u;
        return x;
    }

    /// Time-tau map of the field.
    TorusPoint flow(const TorusPoint& z, double tau) const {
        if (pure()) return {z.base, wrap01(z.fiber + tau)};
        const int steps = std::max(1, int(std::ceil(std::abs(tau) / 0.01)));
        const double h = tau / steps;
        TorusPoint q = z;
        for (int i = 0; i < steps; ++i) {
            const Eigen::Vector3d k1 = (*this)(q);
            const Eigen::Vector3d k2 = (*this)(offset(q, 0.5 * h * k1));
            const Eigen::Vector3d k3 = (*this)(offset(q, 0.5 * h * k2));
            const Eigen::Vector3d k4 = (*this)(offset(q, h * k3));
            q = offset(q, (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4));
        }
        return q;
    }

private:
    static TorusPoint offset(const TorusPoint& p, const Eigen::Vector3d& v) {
        return TorusPoint(p.base.x() + v.x(), p.base.y() + v.y(), p.fiber + v.z()).normalized();
    }

    const SkewProductSystem* sys_;
    double tilt_;
    int depth_;
};

}  // namespace chainlab

#endif  // CHAINLAB_SPLITTING_HPP
