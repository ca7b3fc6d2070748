// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_SCENARIO_HPP
#define CHAINLAB_SCENARIO_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainlab/center_lift.hpp"
#include "chainlab/center_shadowing.hpp"
#include "chainlab/chain_graph.hpp"
#include "chainlab/closing.hpp"
#include "chainlab/preset_io.hpp"
#include "chainlab/pseudo_orbit.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

/// Batch description: connect x to y (or close x periodically) on a preset
/// system for every k in the list, with eps(k) from the rule. All randomness
/// derives from the seed.
struct Scenario {
    std::string id = "scenario";
    std::string preset = "product";
    TorusPoint x, y;
    bool periodic = false;
    std::vector<int> ks = {10, 20, 40};
    /// 0 means the default rule eps = 1/(2k), shrunk below Delta_{1/k} when
    /// the push estimate is smaller.
    double epsExplicit = 0.0;
    int resolution = 32;
    /// Box-graph eps for the reachability stage; 0 picks max(0.06, 1.3*diam).
    double graphEps = 0.0;
    std::uint64_t seed = 1;
};

namespace recipe {

inline Eigen::Vector2d forward_image(const SkewProductSystem& sys, const Eigen::Vector2d& v) {
    const Eigen::Vector2d w = detail::base_image(sys, v);
    return {wrap01(w.x()), wrap01(w.y())};
}

inline Eigen::Vector2d back_image(const SkewProductSystem& sys, const Eigen::Vector2d& v) {
    const Eigen::Matrix2d& inv = sys.base_inverse();
    return {wrap01(inv(0, 0) * v.x() + inv(0, 1) * v.y()),
            wrap01(inv(1, 0) * v.x() + inv(1, 1) * v.y())};
}

/// eps-pseudo-orbit from ~x to ~y: a single-seam base pseudo-orbit is
/// re-trued by the linear shadowing solve (the seam correction decays at the
/// hyperbolic rate, so the endpoints move by ~lambda_u^{-15}); the fibers are
/// built backward from fiber(y) with a constant steering jump solved by
/// shooting, and small base jitter makes the result a generic pseudo-orbit
/// for the center-shadowing stage.
inline PseudoOrbit connecting_pseudo_orbit(const SkewProductSystem& sys, const TorusPoint& x,
                                           const TorusPoint& y, double eps, Rng& rng) {
    const int nTail = 15;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const int nSteer = int(std::ceil(1.2 / eps)) << attempt;
        const int n1 = std::max(nTail, nSteer);
        const int n = n1 + nTail;

        std::vector<Eigen::Vector2d> raw(std::size_t(n) + 1);
        for (int i = 0; i <= n1; ++i)
            raw[std::size_t(i)] = i == 0 ? x.base : forward_image(sys, raw[std::size_t(i) - 1]);
        raw[std::size_t(n)] = y.base;
        for (int i = n - 1; i > n1; --i)
            raw[std::size_t(i)] = back_image(sys, raw[std::size_t(i) + 1]);
        const std::vector<Eigen::Vector2d> v = detail::linear_shadow(sys, raw);

        // Backward fiber steering: theta_n pinned at fiber(y), constant jump
        // delta chosen so that theta_0 lands on fiber(x).
        auto trace_back = [&](double delta) {
            std::vector<double> theta(std::size_t(n) + 1);
            theta[std::size_t(n)] = y.fiber;
            for (int i = n - 1; i >= 0; --i)
                theta[std::size_t(i)] =
                    sys.fiber_inverse(v[std::size_t(i)], wrap01(theta[std::size_t(i) + 1] - delta));
            return theta;
        };
        auto miss = [&](double delta) {
            return circle_signed_dist(x.fiber, trace_back(delta)[0]);
        };

        const double dmax = 0.55 * eps;
        const int grid = 48;
        double lo = 0, hi = 0;
        bool bracketed = false;
        double prevD = -dmax, prevE = miss(-dmax);
        for (int g = 1; g <= grid && !bracketed; ++g) {
            const double d = -dmax + 2.0 * dmax * g / grid;
            const double e = miss(d);
            if (prevE == 0.0 ||
                (prevE * e < 0 && std::abs(prevE) < 0.45 && std::abs(e) < 0.45)) {
                lo = prevD;
                hi = d;
                bracketed = true;
            }
            prevD = d;
            prevE = e;
        }
        if (!bracketed) continue;  // lengthen the chain and retry

        double elo = miss(lo);
        for (int it = 0; it < 90; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double em = miss(mid);
            if (std::abs(em) < 1e-11) {
                lo = hi = mid;
                break;
            }
            if ((em > 0) == (elo > 0)) {
                lo = mid;
                elo = em;
            } else {
                hi = mid;
            }
        }
        const double delta = 0.5 * (lo + hi);
        const std::vector<double> theta = trace_back(delta);

        PseudoOrbit po;
        po.points.resize(std::size_t(n) + 1);
        for (int i = 0; i <= n; ++i) {
            Eigen::Vector2d b = v[std::size_t(i)];
            if (i > 0 && i < n) {
                const double r = rng.range(0.0, 0.04 * eps);
                const double phi = rng.range(0.0, kTwoPi);
                b.x() = wrap01(b.x() + r * std::cos(phi));
                b.y() = wrap01(b.y() + r * std::sin(phi));
            }
            po.points[std::size_t(i)] = TorusPoint(b, theta[std::size_t(i)]).normalized();
        }
        po.epsilon = po.max_jump(sys) * (1 + 1e-9) + 1e-15;
        if (po.epsilon < eps) return po;
    }
    throw std::runtime_error("connecting_pseudo_orbit: fiber steering failed to bracket");
}

/// Periodic eps-pseudo-orbit through ~x: the base runs along an exactly
/// periodic rational orbit (denominator a power of two, so the doubles close
/// bitwise), repeated until the fiber steering has enough capacity; the
/// fibers close exactly at fiber(x).
inline PseudoOrbit periodic_pseudo_orbit(const SkewProductSystem& sys, const TorusPoint& x,
                                         double eps, Rng& rng) {
    int q = 256;
    while (q < 4.0 / eps && q < (1 << 14)) q <<= 1;

    // Exact period of the rounded rational point under the integer base map.
    long ix = long(std::llround(x.base.x() * q)) % q, iy = long(std::llround(x.base.y() * q)) % q;
    if (ix < 0) ix += q;
    if (iy < 0) iy += q;
    const long a11 = sys.base_matrix()(0, 0), a12 = sys.base_matrix()(0, 1);
    const long a21 = sys.base_matrix()(1, 0), a22 = sys.base_matrix()(1, 1);
    std::vector<Eigen::Vector2d> loop;
    long cx = ix, cy = iy;
    for (int steps = 0;; ++steps) {
        if (steps > 200000)
            throw std::runtime_error("periodic_pseudo_orbit: rational orbit period too long");
        loop.emplace_back(double(cx) / q, double(cy) / q);
        const long nx = ((a11 * cx + a12 * cy) % q + q) % q;
        const long ny = ((a21 * cx + a22 * cy) % q + q) % q;
        cx = nx;
        cy = ny;
        if (cx == ix && cy == iy) break;
    }
    const int period = int(loop.size());
    const int nSteer = int(std::ceil(1.2 / eps));
    const int reps = std::max(1, (nSteer + period - 1) / period);
    const int n = reps * period;

    std::vector<Eigen::Vector2d> v(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i) v[std::size_t(i)] = loop[std::size_t(i % period)];

    auto trace_back = [&](double delta) {
        std::vector<double> theta(std::size_t(n) + 1);
        theta[std::size_t(n)] = x.fiber;
        for (int i = n - 1; i >= 0; --i)
            theta[std::size_t(i)] =
                sys.fiber_inverse(v[std::size_t(i)], wrap01(theta[std::size_t(i) + 1] - delta));
        return theta;
    };
    auto miss = [&](double delta) { return circle_signed_dist(x.fiber, trace_back(delta)[0]); };

    const double dmax = 0.55 * eps;
    const int grid = 48;
    double lo = 0, hi = 0;
    bool bracketed = false;
    double prevD = -dmax, prevE = miss(-dmax);
    for (int g = 1; g <= grid && !bracketed; ++g) {
        const double d = -dmax + 2.0 * dmax * g / grid;
        const double e = miss(d);
        if (prevE == 0.0 || (prevE * e < 0 && std::abs(prevE) < 0.45 && std::abs(e) < 0.45)) {
            lo = prevD;
            hi = d;
            bracketed = true;
        }
        prevD = d;
        prevE = e;
    }
    if (!bracketed) throw std::runtime_error("periodic_pseudo_orbit: fiber steering failed");

    double elo = miss(lo);
    for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double em = miss(mid);
        if (std::abs(em) < 1e-11) {
            lo = hi = mid;
            break;
        }
        if ((em > 0) == (elo > 0)) {
            lo = mid;
            elo = em;
        } else {
            hi = mid;
        }
    }
    std::vector<double> theta = trace_back(0.5 * (lo + hi));
    theta[0] = x.fiber;  // exact closure; the shooting residual joins t_1

    PseudoOrbit po;
    po.points.resize(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i) {
        Eigen::Vector2d b = v[std::size_t(i)];
        if (i > 0 && i < n) {
            const double r = rng.range(0.0, 0.04 * eps);
            const double phi = rng.range(0.0, kTwoPi);
            b.x() = wrap01(b.x() + r * std::cos(phi));
            b.y() = wrap01(b.y() + r * std::sin(phi));
        }
        po.points[std::size_t(i)] = TorusPoint(b, theta[std::size_t(i)]).normalized();
    }
    po.points.back() = po.points.front();
    po.epsilon = po.max_jump(sys) * (1 + 1e-9) + 1e-15;
    if (!(po.epsilon < eps))
        throw std::runtime_error("periodic_pseudo_orbit: jump budget exceeded");
    return po;
}

}  // namespace recipe

struct KRunRow {
    int k = 0;
    double eps = 0.0;
    int n = 0;
    double tau_k = 0.0;
    double d_x0_pk = 0.0, d_xn_end = 0.0;
    double d_x_pk = 0.0, d_y_end = 0.0;
    double bound = 0.0, margin = 0.0;
    double shadowL = 0.0, sectionL = 0.0;
    double dispResidual = 0.0;
    bool degenerate = false;
    bool periodic = false;
    double periodicResidual = 0.0;
    bool pass = false;
    std::string error;  // "<stage>: <violated inequality or message>"
};

struct RunRecord {
    Scenario scenario;
    bool attainable = true;
    std::string attainNote;
    int coarseChainLength = 0;
    double coarseEps = 0.0;
    std::vector<KRunRow> rows;
    double elapsedSeconds = 0.0;

    bool all_pass() const {
        if (!attainable) return false;
        for (const auto& r : rows)
            if (!r.pass) return false;
        return !rows.empty();
    }
};

/// Full pipeline for one scenario: box graph reachability, then per k the
/// eps(k)-chain recipe, center shadowing, ordered rewriting, lift, closing
/// parameter search, and the Theorem A bound check.
inline RunRecord run_scenario(const Scenario& sc) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.scenario = sc;
    const SkewProductSystem sys = load_preset(sc.preset);
    const PerturbationFamily fam(sys);
    const TorusPoint target = sc.periodic ? sc.x : sc.y;

    // Reachability through the box graph (coarse stage).
    {
        const double epsGraph = sc.graphEps > 0
                                    ? sc.graphEps
                                    : std::max(0.06, 1.3 * BoxGrid(sc.resolution).diameter());
        const ChainGraph graph(sys, sc.resolution, epsGraph);
        const auto po = graph.chain_attainable(sc.x, target);
        if (!po) {
            rec.attainable = false;
            rec.attainNote = "not chain attainable: no box path at resolution " +
                             std::to_string(sc.resolution) + ", eps " + std::to_string(epsGraph);
            rec.elapsedSeconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return rec;
        }
        po->validate(sys);
        rec.coarseChainLength = po->steps();
        rec.coarseEps = po->epsilon;
        if (po->epsilon < kEpsilon0 * 0.99) {
            center_shadow(sys, *po);  // Prop 2.1 smoke pass on the coarse chain
        } else {
            rec.attainNote = "coarse chain jumps " + std::to_string(po->epsilon) +
                             " >= eps_0; the Prop 2.1 stage runs on the per-k chains";
        }
    }

    for (int k : sc.ks) {
        KRunRow row;
        row.k = k;
        row.periodic = sc.periodic;
        std::string stage = "setup";
        try {
            double eps = sc.epsExplicit > 0 ? sc.epsExplicit : 1.0 / (2.0 * k);
            stage = "push_estimate";
            const double tauProbe = fam.pure_field() ? 1.0 / k : std::min(1.0 / k, fam.tau_max());
            const double delta =
                min_center_push(fam, tauProbe, 64, sc.seed).delta * ((1.0 / k) / tauProbe);
            if (eps >= delta) eps = delta / 2;
            if (!(eps < kEpsilon0))
                throw std::invalid_argument("eps rule produced eps >= eps_0");
            row.eps = eps;

            stage = "chain_recipe";
            Rng rng(sc.seed ^ (std::uint64_t(k) * 0x9e3779b97f4a7c15ull));
            const PseudoOrbit w = sc.periodic
                                      ? recipe::periodic_pseudo_orbit(sys, sc.x, eps, rng)
                                      : recipe::connecting_pseudo_orbit(sys, sc.x, sc.y, eps, rng);

            stage = "center_shadow";
            const CenterShadowResult shadow =
                sc.periodic ? center_shadow_periodic(sys, w) : center_shadow(sys, w);
            row.shadowL = shadow.L;
            const CenterPseudoOrbit& chain = shadow.chain;
            if (!(torus_dist(chain.points.front(), sc.x) < eps))
                throw std::logic_error("d(x_0, x) = " +
                                       std::to_string(torus_dist(chain.points.front(), sc.x)) +
                                       " >= eps " + std::to_string(eps));
            if (!(torus_dist(chain.points.back(), target) < eps))
                throw std::logic_error("d(x_n, y) = " +
                                       std::to_string(torus_dist(chain.points.back(), target)) +
                                       " >= eps " + std::to_string(eps));

            stage = "lift";
            const LiftedChain lifted = lift_chain(sys, chain);
            stage = "reorder";
            const LiftedChain ordered = reorder_chain(lifted);
            const ChainOrderReport order = chain_order_report(ordered);
            if (order.sign == JumpSign::mixed || !order.remark_holds)
                throw std::logic_error("ordered chain failed the order report");
            row.n = ordered.steps();

            stage = "closing";
            const ClosingResult closing = find_closing_tau(fam, ordered, k);
            row.tau_k = closing.tau_k;
            row.degenerate = closing.degenerate;
            row.d_x0_pk = closing.startDistance;
            row.d_xn_end = closing.endDistance;
            row.dispResidual = closing.displacementResidual;
            row.periodicResidual = closing.periodicResidual;

            stage = "section";
            const ContinuedSection section =
                continue_section(fam, ordered, closing.tau_k, false);
            row.sectionL = section.lipschitz_ratio();

            stage = "verify";
            const ConnectionReport rep =
                verify_connection(fam, closing, sc.x, target, k, row.sectionL);
            row.d_x_pk = rep.dxp;
            row.d_y_end = rep.dyq;
            row.bound = rep.bound;
            row.margin = std::min(rep.marginX, rep.marginY);
            row.pass = rep.pass;
        } catch (const std::exception& e) {
            row.error = stage + ": " + e.what();
            row.pass = false;
        }
        rec.rows.push_back(std::move(row));
    }
    rec.elapsedSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// CSV convergence table, rows sorted by k.
inline std::string convergence_study(const Scenario& sc) {
    if (sc.ks.size() < 3)
        throw std::invalid_argument("convergence_study: need at least 3 values of k");
    RunRecord rec = run_scenario(sc);
    std::vector<KRunRow> rows = rec.rows;
    std::sort(rows.begin(), rows.end(), [](const KRunRow& a, const KRunRow& b) { return a.k < b.k; });
    std::ostringstream os;
    os << "k,eps,n_k,tau_k,d_x_pk,d_y_fnpk,bound,margin\n";
    os.setf(std::ios::scientific);
    os.precision(12);
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            os << r.k << ",error: " << r.error << "\n";
            continue;
        }
        os << r.k << ',' << r.eps << ',' << r.n << ',' << r.tau_k << ',' << r.d_x_pk << ','
           << r.d_y_end << ',' << r.bound << ',' << r.margin << "\n";
    }
    return os.str();
}

/// Plain-text plot points: (log10 k, log10 tau_k) and (log10 k, log10 distances).
/// Returns the written file paths.
inline std::vector<std::string> emit_plot_data(const RunRecord& rec,
                                               const std::filesystem::path& outDir) {
    std::filesystem::create_directories(outDir);
    std::vector<std::string> files;
    {
        const auto p = outDir / (rec.scenario.id + "_logk_logtau.dat");
        std::ofstream os(p);
        os << "# log10_k log10_tau_k\n";
        for (const auto& r : rec.rows)
            if (r.error.empty() && !r.degenerate && r.tau_k > 0)
                os << std::log10(double(r.k)) << ' ' << std::log10(r.tau_k) << '\n';
        files.push_back(p.string());
    }
    {
        const auto p = outDir / (rec.scenario.id + "_logk_dist.dat");
        std::ofstream os(p);
        os << "# log10_k log10_d_x_pk log10_d_y_end\n";
        for (const auto& r : rec.rows)
            if (r.error.empty())
                os << std::log10(double(r.k)) << ' '
                   << std::log10(std::max(r.d_x_pk, 1e-300)) << ' '
                   << std::log10(std::max(r.d_y_end, 1e-300)) << '\n';
        files.push_back(p.string());
    }
    return files;
}

}  // namespace chainlab

#endif  // CHAINLAB_SCENARIO_HPP
