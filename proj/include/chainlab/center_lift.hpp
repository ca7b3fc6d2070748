// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_CENTER_LIFT_HPP
#define CHAINLAB_CENTER_LIFT_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chainlab/pseudo_orbit.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

/// Arc-length chart of the center leaf through `anchor`: t -> (base, fiber + t),
/// the universal cover of the circle fiber, orientation positive, theta(0) = anchor.
struct CenterLeafChart {
    TorusPoint anchor;

    TorusPoint point_at(double t) const {
        return {anchor.base, wrap01(anchor.fiber + t)};
    }
};

/// Comparisons against exact zeros accumulate ~1e-14 of float dust through
/// the inverse lift maps; jumps within this tolerance count as ties (a tie
/// at t_i = 0 belongs to both signs).
inline constexpr double kTieTol = 1e-13;

enum class JumpSign { negative, zero, positive, mixed };

inline int jump_sign_value(JumpSign s) {
    switch (s) {
        case JumpSign::negative: return -1;
        case JumpSign::zero: return 0;
        case JumpSign::positive: return 1;
        default: return 2;
    }
}

/// A center pseudo-orbit lifted to the disjoint lines R_0, ..., R_n via the
/// arc-length charts of its anchors. The lifted maps
///   fhat_i : R_i -> R_{i+1},  t -> lift(fiber map)(theta_i + t) - theta_{i+1} - m_i
/// are strictly increasing, deck-equivariant (fhat(t+1) = fhat(t)+1), and
/// normalized by |fhat_i(0)| < eps through the integer offsets m_i.
class LiftedChain {
public:
    LiftedChain(const SkewProductSystem& sys, const CenterPseudoOrbit& chain)
        : system_(sys), anchors_(chain.points), epsilon_(chain.epsilon) {
        if (!(epsilon_ < kEpsilon0))
            throw std::invalid_argument("lift_chain: eps must be below eps_0 = " +
                                        std::to_string(kEpsilon0));
        chain.validate(sys);
        const int n = steps();
        offsets_.resize(n);
        jumpTimes_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double lifted = system_.fiber_lift(anchors_[i].base, anchors_[i].fiber);
            const double m = std::round(lifted - anchors_[i + 1].fiber);
            offsets_[i] = int(m);
            jumpTimes_[i] = lifted - anchors_[i + 1].fiber - m;
            if (!(std::abs(jumpTimes_[i]) < epsilon_))
                throw std::invalid_argument("lift_chain: no lift with |fhat(0_i)| < eps at step " +
                                            std::to_string(i));
            if (std::abs(jumpTimes_[i] - chain.jumpTimes[i]) > 1e-12)
                throw std::logic_error("lift_chain: lifted jump time disagrees with chain at step " +
                                       std::to_string(i));
        }
        powers_.resize(n + 1);
        powers_[0] = 0.0;
        for (int i = 0; i < n; ++i) powers_[i + 1] = map(i, powers_[i]);
    }

    const SkewProductSystem& system() const { return system_; }
    int steps() const { return int(anchors_.size()) - 1; }
    const std::vector<TorusPoint>& anchors() const { return anchors_; }
    double epsilon() const { return epsilon_; }
    /// t_1, ..., t_n with t_{i+1} = fhat_i(0).
    const std::vector<double>& jump_times() const { return jumpTimes_; }
    /// fhat^i(0_0) for i = 0..n.
    const std::vector<double>& zero_powers() const { return powers_; }
    int lift_offset(int i) const { return offsets_[std::size_t(i)]; }
    CenterLeafChart chart(int i) const { return {anchors_[std::size_t(i)]}; }
    bool periodic() const { return anchors_.front() == anchors_.back(); }

    double map(int i, double t) const {
        const TorusPoint& a = anchors_[std::size_t(i)];
        return system_.fiber_lift(a.base, a.fiber + t) - anchors_[std::size_t(i) + 1].fiber -
               offsets_[std::size_t(i)];
    }

    double map_derivative(int i, double t) const {
        return system_.fiber_derivative(anchors_[std::size_t(i)].fiber + t);
    }

    /// Inverse of the strictly increasing lifted map, safeguarded Newton.
    double map_inverse(int i, double s) const {
        double t = s - map(i, 0.0);
        double lo = t - 0.75, hi = t + 0.75;
        while (map(i, lo) > s) lo -= 0.5;
        while (map(i, hi) < s) hi += 0.5;
        for (int it = 0; it < 100; ++it) {
            const double g = map(i, t) - s;
            if (std::abs(g) < 1e-15) return t;
            if (g > 0) hi = t; else lo = t;
            t -= g / map_derivative(i, t);
            if (t <= lo || t >= hi) t = 0.5 * (lo + hi);
        }
        return t;
    }

    /// Rebuild a CenterPseudoOrbit from coordinates s_i on the fixed lines
    /// (s_0 = s_n = 0 preserves the endpoints exactly).
    CenterPseudoOrbit materialize(const std::vector<double>& s) const {
        const int n = steps();
        CenterPseudoOrbit out;
        out.epsilon = epsilon_;
        out.points.resize(n + 1);
        out.jumpTimes.resize(n);
        out.points[0] = anchors_[0];
        out.points[n] = anchors_[n];
        for (int i = 1; i < n; ++i)
            out.points[i] = s[i] == 0.0 ? anchors_[i] : chart(i).point_at(s[i]);
        for (int i = 0; i < n; ++i) out.jumpTimes[i] = map(i, s[i]) - s[i + 1];
        return out;
    }

private:
    SkewProductSystem system_;
    std::vector<TorusPoint> anchors_;
    double epsilon_;
    std::vector<int> offsets_;
    std::vector<double> jumpTimes_;
    std::vector<double> powers_;
};

inline LiftedChain lift_chain(const SkewProductSystem& sys, const CenterPseudoOrbit& chain) {
    return LiftedChain(sys, chain);
}

struct ChainOrderReport {
    JumpSign sign = JumpSign::mixed;
    /// (fhat^i(0_0), 0_i) for i = 1..n, the verification witness.
    std::vector<std::pair<double, double>> comparisons;
    /// Ordered chains satisfy fhat^i(0_0) <= 0_i (resp. >=) for all i.
    bool remark_holds = false;
};

inline JumpSign classify_jumps(const std::vector<double>& t) {
    bool neg = false, pos = false;
    for (double x : t) {
        if (x < -kTieTol) neg = true;
        if (x > kTieTol) pos = true;
    }
    if (neg && pos) return JumpSign::mixed;
    if (neg) return JumpSign::negative;
    if (pos) return JumpSign::positive;
    return JumpSign::zero;
}

inline ChainOrderReport chain_order_report(const LiftedChain& lc) {
    ChainOrderReport rep;
    rep.sign = classify_jumps(lc.jump_times());
    const auto& P = lc.zero_powers();
    for (int i = 1; i <= lc.steps(); ++i) rep.comparisons.emplace_back(P[i], 0.0);
    switch (rep.sign) {
        case JumpSign::negative:
        case JumpSign::zero: {
            rep.remark_holds = true;
            for (int i = 1; i <= lc.steps(); ++i)
                if (P[i] > kTieTol) rep.remark_holds = false;
            break;
        }
        case JumpSign::positive: {
            rep.remark_holds = true;
            for (int i = 1; i <= lc.steps(); ++i)
                if (P[i] < -kTieTol) rep.remark_holds = false;
            break;
        }
        default:
            rep.remark_holds = false;
    }
    return rep;
}

namespace detail {

/// One rewriting pass of the ordered-chain lemma, on the fixed lines of the
/// input chain. State s_i = coordinate of the i-th chain point on R_i
/// (s_0 = s_n = 0 throughout). `negativeBranch` selects the target sign.
/// Returns the final coordinates with all jumps of uniform sign.
inline std::vector<double> rewrite_ordered(const LiftedChain& lc, bool negativeBranch) {
    const int n = lc.steps();
    const auto& P = lc.zero_powers();
    std::vector<double> s(n + 1, 0.0);
    const double sgn = negativeBranch ? 1.0 : -1.0;
    // All comparisons below are written for the negative branch
    // (-eps < t_i <= 0); the positive branch runs through the same code with
    // coordinates multiplied by `sgn`.
    auto flip = [&](double x) { return sgn * x; };

    int prevK = n + 1;
    for (int pass = 0; pass <= n * n + 2; ++pass) {
        // k(Gamma): smallest k with f^{i+1}(x_0) <= f(x_i) <= x_{i+1} for all
        // i in [k, n-1]; k = n when the condition already fails at i = n-1.
        auto cond = [&](int i) {
            const double fxi = flip(lc.map(i, s[i]));  // f(x_i) in R_{i+1}
            return flip(P[i + 1]) <= fxi + kTieTol && fxi <= flip(s[i + 1]) + kTieTol;
        };
        int k;
        if (!cond(n - 1)) {
            k = n;
        } else {
            k = n - 1;
            while (k >= 1 && cond(k - 1)) --k;
        }
        if (k == 0) return s;
        if (k >= prevK && pass > 0)
            throw std::logic_error("reorder_chain: k(Gamma) failed to decrease (pass " +
                                   std::to_string(pass) + ")");
        prevK = (k < prevK) ? k : prevK;

        const double tauK = flip(lc.map(k - 1, s[k - 1]) - s[k]);
        if (tauK > kTieTol) {
            // Sub-case (b): f^k(x_0) <= x_k < f(x_{k-1}). Splice the backward
            // orbit of x_k over positions j..k-1, where j is minimal with
            // f^{-k+j}(x_k) < x_j.
            std::vector<double> b(k + 1);
            b[k] = s[k];
            for (int i = k - 1; i >= 0; --i) b[i] = lc.map_inverse(i, b[i + 1]);
            int j = 1;
            while (j <= k - 1 && flip(b[j]) >= flip(s[j])) ++j;
            if (j > k - 1)
                throw std::logic_error("reorder_chain: no splice index in sub-case (b)");
            // Forward recomputation keeps the interior splice jumps exactly zero.
            s[j] = b[j];
            for (int i = j; i < k - 1; ++i) s[i + 1] = lc.map(i, s[i]);
        } else {
            // Sub-case (a): f(x_{k-1}) < f^k(x_0) <= x_k. Replace the head by
            // the true orbit of x_0; the chain is ordered afterwards.
            for (int i = 1; i <= k - 1; ++i) s[i] = P[i];
        }
    }
    throw std::logic_error("reorder_chain: iteration cap exceeded");
}

}  // namespace detail

/// Ordered-chain rewriting: same endpoints, all jump times of one sign. The
/// branch is forced by the sign of fhat^n(0_0) (all-nonpositive jumps imply
/// fhat^n(0_0) <= 0_n and symmetrically); fhat^n(0_0) = 0_n is the trivial
/// case rewritten to the true orbit of x_0.
inline LiftedChain reorder_chain(const LiftedChain& lc) {
    const int n = lc.steps();
    const double D0 = lc.zero_powers()[n];

    std::vector<double> s;
    if (D0 == 0.0) {
        s.assign(lc.zero_powers().begin(), lc.zero_powers().end());
        s[0] = 0.0;
        s[n] = 0.0;
    } else {
        s = detail::rewrite_ordered(lc, D0 < 0.0);
    }

    const CenterPseudoOrbit chain = lc.materialize(s);
    LiftedChain out(lc.system(), chain);

    if (out.anchors().front() != lc.anchors().front() ||
        out.anchors().back() != lc.anchors().back())
        throw std::logic_error("reorder_chain: endpoints not preserved");
    const JumpSign sign = classify_jumps(out.jump_times());
    if (sign == JumpSign::mixed) throw std::logic_error("reorder_chain: output sign not uniform");
    if (D0 < 0.0 && sign == JumpSign::positive)
        throw std::logic_error("reorder_chain: wrong output branch");
    if (D0 > 0.0 && sign == JumpSign::negative)
        throw std::logic_error("reorder_chain: wrong output branch");
    for (double t : out.jump_times())
        if (!(std::abs(t) < lc.epsilon()))
            throw std::logic_error("reorder_chain: jump bound not preserved");
    return out;
}

}  // namespace chainlab

#endif  // CHAINLAB_CENTER_LIFT_HPP
