// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: each criterion runs at its stated tolerance and prints
// one pass/fail line. The process exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chainlab/chainlab.hpp"
#include "oracle_reorder.hpp"

using namespace chainlab;

namespace {

struct Check {
    int id;
    std::string label;
    double timeLimit;
    std::function<void()> run;
};

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

CenterPseudoOrbit fiber_chain(const SkewProductSystem& sys, const TorusPoint& x0,
                              const std::vector<double>& jumps, double eps) {
    CenterPseudoOrbit c;
    c.epsilon = eps;
    c.jumpTimes = jumps;
    c.points.push_back(x0.normalized());
    for (double t : jumps) {
        TorusPoint q = sys.apply(c.points.back());
        q.fiber = wrap01(q.fiber + t);
        c.points.push_back(q);
    }
    return c;
}

// --- criterion 1 --------------------------------------------------------

void closed_form_closing() {
    const SkewProductSystem sys = preset_by_name("product");
    const PerturbationFamily fam(sys);
    const LiftedChain lc =
        lift_chain(sys, fiber_chain(sys, {0.0, 0.0, 0.0}, std::vector<double>(10, -0.05), 0.0501));
    const ClosingResult res = find_closing_tau(fam, lc, 10);
    require(std::abs(res.tau_k - 0.05) < 1e-10,
            "tau_k = " + std::to_string(res.tau_k) + ", expected 0.05");
    require(torus_dist(res.orbit.back(), {0.0, 0.0, 0.5}) < 1e-10,
            "endpoint off (0,0,0.5) by " +
                std::to_string(torus_dist(res.orbit.back(), {0.0, 0.0, 0.5})));
    require(res.startDistance == 0.0, "p_k must coincide with x_0");
}

// --- criterion 2 --------------------------------------------------------

void periodic_closing() {
    const SkewProductSystem sys = preset_by_name("product");
    const PerturbationFamily fam(sys);
    CenterPseudoOrbit chain =
        fiber_chain(sys, {0.0, 0.0, 0.0}, std::vector<double>(20, -0.05), 0.0501);
    chain.points.back() = chain.points.front();
    require(chain.periodic(), "construction must close the 20-step fiber loop");
    const ClosingResult res = find_closing_tau(fam, lift_chain(sys, chain), 10);
    require(std::abs(res.tau_k - 0.05) < 1e-10,
            "tau_k = " + std::to_string(res.tau_k) + ", expected 0.05");
    const TorusPoint back = fam.iterate(res.tau_k, res.p_k, 20);
    require(torus_dist(back, res.p_k) < 1e-10,
            "periodic closure residual " + std::to_string(torus_dist(back, res.p_k)));
}

// --- criterion 3 --------------------------------------------------------

void theorem_a_bound() {
    const std::vector<int> ks{10, 20, 40, 80};
    std::map<int, double> maxTau;
    for (int seed = 1; seed <= 20; ++seed) {
        Rng pick(std::uint64_t(seed) * 7919);
        Scenario sc;
        sc.id = "campaign_" + std::to_string(seed);
        sc.preset = "a02";
        sc.x = TorusPoint(pick.unit(), pick.unit(), pick.unit());
        sc.y = TorusPoint(pick.unit(), pick.unit(), pick.unit());
        sc.ks = ks;
        sc.resolution = 32;
        sc.seed = std::uint64_t(seed);
        const RunRecord rec = run_scenario(sc);
        require(rec.attainable, sc.id + ": unexpectedly not attainable");
        for (const auto& r : rec.rows) {
            require(r.error.empty(), sc.id + " k=" + std::to_string(r.k) + ": " + r.error);
            require(r.pass, sc.id + " k=" + std::to_string(r.k) + ": bound check failed");
            require(r.d_x_pk < r.bound && r.d_y_end < r.bound,
                    sc.id + " k=" + std::to_string(r.k) + ": distances exceed (L+1)/k");
            maxTau[r.k] = std::max(maxTau[r.k], std::abs(r.tau_k));
        }
    }
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
        require(maxTau[ks[i + 1]] < maxTau[ks[i]],
                "max tau_k not decreasing: tau(" + std::to_string(ks[i]) + ") = " +
                    std::to_string(maxTau[ks[i]]) + " vs tau(" + std::to_string(ks[i + 1]) +
                    ") = " + std::to_string(maxTau[ks[i + 1]]));
}

// --- criterion 4 --------------------------------------------------------

void lemma_rewriting() {
    Rng rng(20260810);
    int mixed = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const SkewProductSystem sys = preset_by_name(trial % 2 ? "a02" : "product");
        const double eps = 0.04;
        const int n = 3 + int(rng.index(48));
        std::vector<double> jumps(std::size_t(n));
        for (auto& t : jumps) t = rng.range(-0.9 * eps, 0.9 * eps);
        const CenterPseudoOrbit chain =
            fiber_chain(sys, {rng.unit(), rng.unit(), rng.unit()}, jumps, eps);
        const LiftedChain lc = lift_chain(sys, chain);
        if (chain_order_report(lc).sign == JumpSign::mixed) ++mixed;

        const LiftedChain out = reorder_chain(lc);
        require(classify_jumps(out.jump_times()) != JumpSign::mixed, "output sign not uniform");
        require(out.anchors().front() == lc.anchors().front() &&
                    out.anchors().back() == lc.anchors().back(),
                "endpoints not preserved");
        for (double t : out.jump_times())
            require(std::abs(t) < eps, "jump bound violated after rewriting");

        const oracle::Chain ref = oracle::reorder(sys, {lc.anchors(), lc.epsilon(), {}});
        require(ref.anchors.size() == out.anchors().size(), "oracle length mismatch");
        for (std::size_t i = 0; i < ref.anchors.size(); ++i)
            require(out.anchors()[i] == ref.anchors[i],
                    "anchor " + std::to_string(i) + " differs from the proof oracle");
        for (std::size_t i = 0; i < ref.jumpTimes.size(); ++i)
            require(out.jump_times()[i] == ref.jumpTimes[i],
                    "jump time " + std::to_string(i) + " differs from the proof oracle");
    }
    require(mixed >= 400, "campaign generated too few mixed-sign chains");
}

// --- criterion 5 --------------------------------------------------------

void shadowing_lipschitz() {
    const SkewProductSystem sys = preset_by_name("product");
    const double cap = base_lipschitz_bound(sys) + 1.0;
    const auto rows = measure_lipschitz_L(sys, 100, {0.1, 0.05, 0.025}, 101);
    require(rows.size() == 300, "row count");
    for (const auto& r : rows)
        require(r.L <= cap, "L estimate " + std::to_string(r.L) + " exceeds L_b + 1 = " +
                                std::to_string(cap) + " at eps " + std::to_string(r.eps));

    for (int seed = 1; seed <= 10; ++seed) {
        Rng rng(std::uint64_t(seed) * 31337);
        const TorusPoint x(rng.unit(), rng.unit(), rng.unit());
        const PseudoOrbit w = recipe::periodic_pseudo_orbit(sys, x, 0.04, rng);
        const CenterShadowResult res = center_shadow_periodic(sys, w);
        require(res.chain.points.front() == res.chain.points.back(),
                "periodic variant must return x_a = x_b exactly");
        require(res.L <= cap, "periodic L estimate exceeds L_b + 1");
    }
}

// --- criterion 6 --------------------------------------------------------

void monotone_displacement() {
    const std::vector<std::string> presets{"product", "a02", "two_classes"};
    int chainCount = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const SkewProductSystem sys = preset_by_name(presets[std::size_t(trial) % 3]);
        const PerturbationFamily fam(sys);
        Rng rng(std::uint64_t(trial) * 1301 + 7);
        const TorusPoint x(rng.unit(), rng.unit(), rng.unit());
        const TorusPoint y(rng.unit(), rng.unit(), rng.unit());
        const PseudoOrbit w = recipe::connecting_pseudo_orbit(sys, x, y, 0.02, rng);
        const CenterShadowResult shadow = center_shadow(sys, w);
        const LiftedChain lc = reorder_chain(lift_chain(sys, shadow.chain));
        double prev = displacement(fam, lc, 0.0);
        for (int g = 1; g < 50; ++g) {
            const double cur = displacement(fam, lc, 0.05 * g / 49);
            require(cur > prev, "D not strictly increasing on the tau grid (" +
                                    presets[std::size_t(trial) % 3] + ")");
            prev = cur;
        }
        ++chainCount;
    }
    require(chainCount == 50, "campaign size");

    const PerturbationFamily fam(preset_by_name("a02"));
    const double delta = min_center_push(fam, 0.01, 200).delta;
    require(delta >= 0.01 * (1 - 0.2) - 1e-4,
            "min_center_push = " + std::to_string(delta) + " below tau(1-a) with 1e-4 slack");
}

// --- criterion 7 --------------------------------------------------------

void chain_engine_soundness() {
    const SkewProductSystem product = preset_by_name("product");

    // Every returned pseudo-orbit satisfies its own jump bound (validate
    // throws otherwise).
    {
        const ChainGraph g(product, 32, 0.06);
        Rng rng(55);
        for (int t = 0; t < 12; ++t) {
            const TorusPoint x(rng.unit(), rng.unit(), rng.unit());
            const TorusPoint y(rng.unit(), rng.unit(), rng.unit());
            const auto po = g.chain_attainable(x, y);
            require(po.has_value(), "product system query must be attainable");
            po->validate(product);
        }
        const TorusPoint x(0.37, 0.58, 0.12);
        const auto direct = g.chain_attainable(x, product.apply(x));
        require(direct.has_value() && direct->points.size() == 2, "direct edge expected");
        direct->validate(product);
    }
    {
        const ChainGraph g(product, 64, 0.05);
        const auto po = g.chain_attainable({0, 0, 0}, {0, 0, 0.5});
        require(po.has_value(), "fiber climb must be attainable");
        po->validate(product);
        require(g.strongly_connected(), "product graph at resolution 64, eps 0.05 "
                                        "must be a single SCC");
    }
    {
        const ChainGraph g(preset_by_name("two_classes"), 128, 0.015);
        const auto classes = g.chain_recurrent_classes();
        require(classes.size() == 2, "two-fixed-circle preset produced " +
                                         std::to_string(classes.size()) + " classes");
        // The covers separate around the two invariant circles.
        int nearHalf = 0, nearZero = 0;
        for (const auto& cls : classes) {
            bool allHalf = true, allZero = true;
            for (BoxIndex b : cls) {
                const double f = g.grid().center(b).fiber;
                if (std::abs(f - 0.5) > 0.25) allHalf = false;
                if (circle_dist(f, 0.0) > 0.25) allZero = false;
            }
            nearHalf += allHalf;
            nearZero += allZero;
        }
        require(nearHalf == 1 && nearZero == 1,
                "class covers do not separate around theta = 1/2 and theta = 0");
    }
}

}  // namespace

int main() {
    const std::vector<Check> checks{
        {1, "closed-form closing: tau_k = 0.05, endpoint (0,0,0.5), 1e-10", 1.0,
         closed_form_closing},
        {2, "periodic closing: tau_k = 0.05 and exact orbit closure, 1e-10", 1.0,
         periodic_closing},
        {3, "Theorem A bound over 20 seeded scenarios, k in {10,20,40,80}", 300.0,
         theorem_a_bound},
        {4, "ordered rewriting: 500 chains byte-identical to the proof oracle", 30.0,
         lemma_rewriting},
        {5, "shadowing Lipschitz constant below L_b + 1, periodic exactness", 60.0,
         shadowing_lipschitz},
        {6, "displacement strictly increasing; center push above tau(1-a)", 60.0,
         monotone_displacement},
        {7, "chain engine: jump bounds, single SCC, two classes", 120.0,
         chain_engine_soundness},
    };

    int failures = 0;
    for (const auto& c : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (error.empty() && dt > c.timeLimit)
            error = "runtime " + std::to_string(dt) + " s exceeds " +
                    std::to_string(c.timeLimit) + " s";
        std::cout << (error.empty() ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
                  << c.label << " (" << std::fixed << std::setprecision(2) << dt << " s)";
        if (!error.empty()) {
            std::cout << "\n       " << error;
            ++failures;
        }
        std::cout << "\n" << std::defaultfloat;
    }
    return failures;
}
