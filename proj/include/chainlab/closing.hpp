// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_CLOSING_HPP
#define CHAINLAB_CLOSING_HPP

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainlab/center_lift.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/splitting.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

/// Perturbation family f_tau = X_tau o f. For the pure center field the flow
/// is fiber rotation, so f_tau rotates the fiber by tau after applying f.
class PerturbationFamily {
public:
    explicit PerturbationFamily(const SkewProductSystem& sys, double fieldTilt = 0.0)
        : system_(sys), tilt_(fieldTilt) {}

    const SkewProductSystem& system() const { return system_; }
    CenterVectorField field() const { return CenterVectorField(system_, tilt_); }
    bool pure_field() const { return tilt_ == 0.0; }
    double tube_radius() const { return tubeRadius_; }
    double tau_max() const { return tauMax_; }

    TorusPoint map(double tau, const TorusPoint& p) const {
        if (pure_field()) {
            const TorusPoint q = system_.apply(p);
            return {q.base, wrap01(q.fiber + tau)};
        }
        return field().flow(system_.apply(p), tau);
    }

    TorusPoint map_inverse(double tau, const TorusPoint& p) const {
        return system_.apply_inverse(field().flow(p, -tau));
    }

    TorusPoint iterate(double tau, const TorusPoint& p, int n) const {
        TorusPoint q = p;
        for (int i = 0; i < n; ++i) q = map(tau, q);
        for (int i = 0; i > n; --i) q = map_inverse(tau, q);
        return q;
    }

private:
    SkewProductSystem system_;
    double tilt_;
    double tubeRadius_ = 0.2;
    double tauMax_ = 0.05;
};

namespace detail {

/// Charts of the bi-infinite extension Gamma_infty: true-orbit tails glued to
/// the chain anchors, with the same lift normalization (tail jump times are
/// exactly zero).
class ExtendedCharts {
public:
    ExtendedCharts(const SkewProductSystem& sys, const LiftedChain& lc, int tail)
        : sys_(&sys), lo_(-tail), hi_(lc.steps() + tail) {
        anchors_.resize(hi_ - lo_ + 1);
        const int n = lc.steps();
        for (int i = 0; i <= n; ++i) at(i) = lc.anchors()[i];
        for (int i = -1; i >= lo_; --i) at(i) = sys.apply_inverse(at(i + 1));
        for (int i = n + 1; i <= hi_; ++i) at(i) = sys.apply(at(i - 1));
        offsets_.resize(hi_ - lo_);
        for (int i = lo_; i < hi_; ++i) {
            const double lifted = sys.fiber_lift(at(i).base, at(i).fiber);
            offsets_[std::size_t(i - lo_)] = int(std::round(lifted - at(i + 1).fiber));
        }
    }

    int lo() const { return lo_; }
    int hi() const { return hi_; }
    const TorusPoint& anchor(int i) const { return anchors_[std::size_t(i - lo_)]; }

    double map(int i, double t) const {
        const TorusPoint& a = anchor(i);
        return sys_->fiber_lift(a.base, a.fiber + t) - anchor(i + 1).fiber -
               offsets_[std::size_t(i - lo_)];
    }

    double map_inverse(int i, double s) const {
        double t = s - map(i, 0.0);
        double lb = t - 0.75, ub = t + 0.75;
        while (map(i, lb) > s) lb -= 0.5;
        while (map(i, ub) < s) ub += 0.5;
        for (int it = 0; it < 100; ++it) {
            const double g = map(i, t) - s;
            if (std::abs(g) < 1e-15) return t;
            if (g > 0) ub = t; else lb = t;
            t -= g / sys_->fiber_derivative(anchor(i).fiber + t);
            if (t <= lb || t >= ub) t = 0.5 * (lb + ub);
        }
        return t;
    }

private:
    TorusPoint& at(int i) { return anchors_[std::size_t(i - lo_)]; }

    const SkewProductSystem* sys_;
    int lo_, hi_;
    std::vector<TorusPoint> anchors_;
    std::vector<int> offsets_;
};

struct EigenFrame {
    Eigen::Vector2d es, eu;
    Eigen::Matrix2d inv;

    explicit EigenFrame(const SkewProductSystem& sys) : es(sys.eig_s()), eu(sys.eig_u()) {
        Eigen::Matrix2d frame;
        frame.col(0) = es;
        frame.col(1) = eu;
        inv = frame.inverse();
    }

    std::array<double, 2> decompose(const Eigen::Vector2d& v) const {
        const Eigen::Vector2d c = inv * v;
        return {c(0), c(1)};
    }
};

}  // namespace detail

/// f_tau-orbit segment continuing the chain's center orbit inside the tube:
/// su-coordinates solved by forward-stable / backward-unstable contraction,
/// center coordinate free (pinned to chart zero at the chain start).
struct ContinuedSection {
    double tau = 0.0;
    std::vector<TorusPoint> points;             // p_0..p_n, p_{i+1} = f_tau(p_i)
    std::vector<double> su_s, su_u, center;     // chart-relative coordinates
    std::vector<std::array<double, 2>> conjugacyOffsets;  // h_tau(0_i) su-parts
    double su_sup = 0.0;
    int sweeps = 0;

    double lipschitz_ratio() const { return tau == 0.0 ? 0.0 : su_sup / std::abs(tau); }
};

namespace detail {

struct SectionSolve {
    std::vector<double> s, u, c;  // indices shifted by -lo
    int lo = 0, hi = 0;
    int sweeps = 0;
};

/// Solve the invariant-section orbit through center coordinate 0 on line
/// `pinLine`. For the pure field the su-components vanish identically and the
/// center coordinates compose from the perturbed lifts.
inline SectionSolve solve_section(const PerturbationFamily& fam, const ExtendedCharts& ext,
                                  double tau, int pinLine) {
    SectionSolve out;
    out.lo = ext.lo();
    out.hi = ext.hi();
    const std::size_t len = std::size_t(out.hi - out.lo + 1);
    out.s.assign(len, 0.0);
    out.u.assign(len, 0.0);
    out.c.assign(len, 0.0);
    auto ix = [&](int i) { return std::size_t(i - out.lo); };

    if (fam.pure_field()) {
        for (int i = pinLine; i < out.hi; ++i) out.c[ix(i + 1)] = ext.map(i, out.c[ix(i)]) + tau;
        for (int i = pinLine; i > out.lo; --i) out.c[ix(i - 1)] = ext.map_inverse(i - 1, out.c[ix(i)] - tau);
        out.sweeps = 1;
        return out;
    }

    if (std::abs(tau) > fam.tau_max())
        throw std::invalid_argument("section solve: |tau| exceeds tau_max for a tilted field");

    const detail::EigenFrame frame(fam.system());
    const double lu = fam.system().lambda_u();
    auto point = [&](int i) {
        const TorusPoint& a = ext.anchor(i);
        const Eigen::Vector2d b =
            a.base + out.s[ix(i)] * frame.es + out.u[ix(i)] * frame.eu;
        return TorusPoint(b, a.fiber + out.c[ix(i)]).normalized();
    };

    for (int sweep = 0; sweep < 400; ++sweep) {
        double change = 0.0;
        // Forward pass: stable components and (for i >= pinLine) centers.
        for (int i = out.lo + 1; i <= out.hi; ++i) {
            const TorusPoint q = fam.map(tau, point(i - 1));
            const auto su = frame.decompose(base_diff(q.base, ext.anchor(i).base));
            change = std::max(change, std::abs(su[0] - out.s[ix(i)]));
            out.s[ix(i)] = su[0];
            if (i > pinLine) {
                const double cp = ext.map(i - 1, out.c[ix(i - 1)]);
                const double cn =
                    cp + circle_signed_dist(wrap01(ext.anchor(i).fiber + cp), q.fiber);
                change = std::max(change, std::abs(cn - out.c[ix(i)]));
                out.c[ix(i)] = cn;
            }
        }
        // Backward pass: tail centers and unstable components.
        for (int i = pinLine - 1; i >= out.lo; --i) {
            const TorusPoint q = fam.map_inverse(tau, point(i + 1));
            const double cp = ext.map_inverse(i, out.c[ix(i + 1)]);
            const double cn = cp + circle_signed_dist(wrap01(ext.anchor(i).fiber + cp), q.fiber);
            change = std::max(change, std::abs(cn - out.c[ix(i)]));
            out.c[ix(i)] = cn;
        }
        for (int i = out.hi - 1; i >= out.lo; --i) {
            const TorusPoint q = fam.map(tau, point(i));
            const auto su = frame.decompose(base_diff(q.base, ext.anchor(i + 1).base));
            const double du = (out.u[ix(i + 1)] - su[1]) / lu;
            change = std::max(change, std::abs(du));
            out.u[ix(i)] += du;
        }
        out.sweeps = sweep + 1;
        if (change < 1e-13) return out;
    }
    throw std::runtime_error("section solve: contraction did not converge");
}

inline int section_tail(const PerturbationFamily& fam) { return fam.pure_field() ? 0 : 45; }

}  // namespace detail

/// Continue the chain as an f_tau-orbit through h_tau(0_0). su-norms are
/// reported against the L*|tau| bound; conjugacy offsets are the su-parts of
/// h_tau(0_i) (identically zero for the pure center field, where the leaf
/// conjugacy is the identity in su).
inline ContinuedSection continue_section(const PerturbationFamily& fam, const LiftedChain& lc,
                                         double tau, bool withConjugacy = true) {
    const int n = lc.steps();
    const detail::ExtendedCharts ext(fam.system(), lc, detail::section_tail(fam));
    const detail::SectionSolve sol = detail::solve_section(fam, ext, tau, 0);
    const detail::EigenFrame frame(fam.system());

    ContinuedSection cs;
    cs.tau = tau;
    cs.sweeps = sol.sweeps;
    auto ix = [&](int i) { return std::size_t(i - sol.lo); };
    for (int i = 0; i <= n; ++i) {
        const double s = sol.s[ix(i)], u = sol.u[ix(i)], c = sol.c[ix(i)];
        const TorusPoint& a = ext.anchor(i);
        cs.points.push_back(
            TorusPoint(a.base + s * frame.es + u * frame.eu, a.fiber + c).normalized());
        cs.su_s.push_back(s);
        cs.su_u.push_back(u);
        cs.center.push_back(c);
        cs.su_sup = std::max(cs.su_sup, (s * frame.es + u * frame.eu).norm());
        if (std::max(std::abs(s), std::abs(u)) > fam.tube_radius())
            throw std::runtime_error("continue_section: orbit left the tube");
    }
    if (withConjugacy) {
        cs.conjugacyOffsets.assign(std::size_t(n) + 1, {0.0, 0.0});
        if (!fam.pure_field()) {
            for (int i = 0; i <= n; ++i) {
                const detail::SectionSolve si = detail::solve_section(fam, ext, tau, i);
                cs.conjugacyOffsets[std::size_t(i)] = {si.s[ix(i)], si.u[ix(i)]};
            }
        }
    }
    return cs;
}

/// Lifted displacement D(tau): the center coordinate (in the chart of x_n) of
/// the f_tau-continuation of the section start h_tau(0_0), minus the chart
/// coordinate of h_tau(0_n), which is zero. For chains ordered with t_i <= 0,
/// D(0) = fhat^n(0_0) <= 0, and D is strictly increasing in tau.
inline double displacement(const PerturbationFamily& fam, const LiftedChain& lc, double tau) {
    if (fam.pure_field()) {
        if (!(std::abs(tau) <= 0.45))
            throw std::invalid_argument("displacement: |tau| too large for the lift bookkeeping");
        double c = 0.0;
        for (int i = 0; i < lc.steps(); ++i) c = lc.map(i, c) + tau;
        return c;
    }
    const detail::ExtendedCharts ext(fam.system(), lc, detail::section_tail(fam));
    const detail::SectionSolve sol = detail::solve_section(fam, ext, tau, 0);
    return sol.c[std::size_t(lc.steps() - sol.lo)];
}

struct CenterPushEstimate {
    double delta = 0.0;
    TorusPoint argmin;
};

/// Minimum one-step lifted center gain of the perturbation over sampled
/// points: for the pure center field the gain is exactly tau at every point;
/// a tilted field contributes its fiber component along the flow (su-coupling
/// enters only at second order and is not modeled here).
inline CenterPushEstimate min_center_push(const PerturbationFamily& fam, double tau,
                                          int sampleCount, std::uint64_t seed = 20260810) {
    const double cap = fam.pure_field() ? 0.45 : fam.tau_max();
    if (!(tau > 0.0 && tau <= cap))
        throw std::invalid_argument("min_center_push: need 0 < tau <= " + std::to_string(cap));
    CenterPushEstimate est;
    est.delta = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    const CenterVectorField field = fam.field();
    for (int i = 0; i < sampleCount; ++i) {
        const TorusPoint z(rng.unit(), rng.unit(), rng.unit());
        const TorusPoint q = fam.system().apply(z);
        const TorusPoint w = field.flow(q, tau);
        const double gain = circle_signed_dist(q.fiber, w.fiber);
        if (gain < est.delta) {
            est.delta = gain;
            est.argmin = z;
        }
    }
    if (!(est.delta > 0.0))
        throw std::runtime_error("min_center_push: non-positive estimate (tau beyond valid range "
                                 "or broken transversality)");
    return est;
}

struct ClosingResult {
    double tau_k = 0.0;
    TorusPoint p_k;
    int n_k = 0;
    /// d(x_0, p_k) and d(x_n, f_tau^n(p_k)) against the chain endpoints.
    double startDistance = 0.0;
    double endDistance = 0.0;
    double displacementResidual = 0.0;
    bool degenerate = false;  // D(0) = 0: the chain is already a true orbit
    bool periodic = false;
    double periodicResidual = 0.0;
    int branch = +1;  // +1: t_i <= 0 and tau_k > 0; -1: mirrored
    std::vector<TorusPoint> orbit;  // p_0..p_n under f_{tau_k}
};

/// Root of the displacement function by bisection on [0, 1/k] (mirrored for
/// chains with t_i >= 0). Requires the chain eps below min(1/k, Delta_{1/k}).
inline ClosingResult find_closing_tau(const PerturbationFamily& fam, const LiftedChain& lc, int k,
                                      double tol = 1e-12) {
    if (k < 1) throw std::invalid_argument("find_closing_tau: k must be >= 1");
    const JumpSign sign = classify_jumps(lc.jump_times());
    if (sign == JumpSign::mixed)
        throw std::invalid_argument("find_closing_tau: chain jumps must have uniform sign "
                                    "(run reorder_chain first)");
    const int branch = (sign == JumpSign::positive) ? -1 : +1;
    const double tauProbe = fam.pure_field() ? 1.0 / k : std::min(1.0 / k, fam.tau_max());
    const double delta = min_center_push(fam, tauProbe, 64).delta * ((1.0 / k) / tauProbe);
    if (!(lc.epsilon() < std::min(1.0 / k, delta)))
        throw std::invalid_argument(
            "find_closing_tau: chain eps " + std::to_string(lc.epsilon()) +
            " must be below min(1/k, Delta_{1/k}) = " +
            std::to_string(std::min(1.0 / k, delta)) + "; use a finer chain");

    const int n = lc.steps();
    ClosingResult res;
    res.n_k = n;
    res.branch = branch;
    res.periodic = lc.periodic();

    const double D0 = displacement(fam, lc, 0.0);
    if (branch > 0 && D0 > kTieTol)
        throw std::invalid_argument("find_closing_tau: D(0) > 0 on a nonpositive-jump chain");
    if (branch < 0 && D0 < -kTieTol)
        throw std::invalid_argument("find_closing_tau: D(0) < 0 on a nonnegative-jump chain");

    auto finish = [&](double tau, double resid) {
        res.tau_k = tau;
        res.displacementResidual = std::abs(resid);
        if (fam.pure_field()) {
            res.p_k = lc.anchors().front();
        } else {
            const ContinuedSection cs = continue_section(fam, lc, tau, false);
            res.p_k = cs.points.front();
        }
        res.orbit.resize(std::size_t(n) + 1);
        res.orbit[0] = res.p_k;
        for (int i = 0; i < n; ++i) res.orbit[std::size_t(i) + 1] = fam.map(tau, res.orbit[std::size_t(i)]);
        res.startDistance = torus_dist(lc.anchors().front(), res.p_k);
        res.endDistance = torus_dist(lc.anchors().back(), res.orbit.back());
        if (res.periodic) {
            res.periodicResidual = torus_dist(res.orbit.back(), res.orbit.front());
            if (res.periodicResidual > 1e-10)
                throw std::logic_error("find_closing_tau: periodic chain did not close (residual " +
                                       std::to_string(res.periodicResidual) + ")");
        }
        return res;
    };

    if (std::abs(D0) <= 1e-14) {
        res.degenerate = true;
        return finish(0.0, D0);
    }

    const double tauEnd = branch * (1.0 / k);
    const double Dend = displacement(fam, lc, tauEnd);
    if (branch > 0 ? !(Dend > 0.0) : !(Dend < 0.0))
        throw std::invalid_argument("find_closing_tau: D(1/k) does not bracket a root; "
                                    "the chain eps must be reduced below Delta_{1/k}");

    double lo = 0.0, hi = tauEnd;  // D(lo) on the D0 side, D(hi) on the Dend side
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double Dm = displacement(fam, lc, mid);
        if (std::abs(Dm) < tol) return finish(mid, Dm);
        const bool sameSideAsD0 = (branch > 0) ? (Dm < 0.0) : (Dm > 0.0);
        if (sameSideAsD0) lo = mid; else hi = mid;
    }
    throw std::runtime_error("find_closing_tau: bisection stagnation");
}

struct ConnectionReport {
    double dxp = 0.0;
    double dyq = 0.0;
    double bound = 0.0;
    double marginX = 0.0;
    double marginY = 0.0;
    bool pass = false;
    std::string text;
};

/// Theorem A bound check: d(x, p_k) and d(y, f_tau^{n_k}(p_k)) against
/// (L+1)/k, with the full measured inequality chain. A violation is a hard
/// failure and throws.
inline ConnectionReport verify_connection(const PerturbationFamily& fam, const ClosingResult& res,
                                          const TorusPoint& x, const TorusPoint& y, int k,
                                          double L_meas) {
    (void)fam;
    ConnectionReport rep;
    rep.dxp = torus_dist(x, res.p_k);
    rep.dyq = torus_dist(y, res.orbit.back());
    rep.bound = (L_meas + 1.0) / k;
    rep.marginX = rep.bound - rep.dxp;
    rep.marginY = rep.bound - rep.dyq;
    rep.pass = rep.dxp < rep.bound && rep.dyq < rep.bound;
    std::ostringstream os;
    os << "d(x,p_k) = " << rep.dxp << " [d(x_0,p_k) = " << res.startDistance
       << "] vs (L+1)/k = " << rep.bound << "; d(y,f^n(p_k)) = " << rep.dyq
       << " [d(x_n,f^n(p_k)) = " << res.endDistance << "] vs " << rep.bound
       << "; tau_k = " << res.tau_k << ", n_k = " << res.n_k;
    rep.text = os.str();
    if (!rep.pass)
        throw std::logic_error("verify_connection: Theorem A bound violated: " + rep.text);
    return rep;
}

}  // namespace chainlab

#endif  // CHAINLAB_CLOSING_HPP
