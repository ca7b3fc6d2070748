// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chainlab/preset_io.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/splitting.hpp"

using namespace chainlab;

namespace {

Eigen::Matrix2i cat_matrix() {
    Eigen::Matrix2i a;
    a << 2, 1, 1, 1;
    return a;
}

// Jacobian of f^n by central finite differences, with wrapped coordinate
// differences. Independent of the analytic differential.
Eigen::Matrix3d fd_jacobian(const SkewProductSystem& sys, const TorusPoint& p, int n, double h) {
    Eigen::Matrix3d j;
    for (int col = 0; col < 3; ++col) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e(col) = h;
        const TorusPoint pp =
            TorusPoint(p.base.x() + e(0), p.base.y() + e(1), p.fiber + e(2)).normalized();
        const TorusPoint pm =
            TorusPoint(p.base.x() - e(0), p.base.y() - e(1), p.fiber - e(2)).normalized();
        const Eigen::Vector3d d = torus_diff(sys.iterate(pp, n), sys.iterate(pm, n));
        j.col(col) = d / (2 * h);
    }
    return j;
}

}  // namespace

TEST_CASE("constructor rejects degenerate inputs") {
    Eigen::Matrix2i shear;
    shear << 1, 1, 0, 1;  // |trace| = 2
    CHECK_THROWS_AS(SkewProductSystem(shear, TrigPolynomial{}, 0.0), std::invalid_argument);

    Eigen::Matrix2i det2;
    det2 << 2, 0, 0, 1;
    CHECK_THROWS_AS(SkewProductSystem(det2, TrigPolynomial{}, 0.0), std::invalid_argument);

    CHECK_THROWS_AS(SkewProductSystem(cat_matrix(), TrigPolynomial{}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SkewProductSystem(cat_matrix(), TrigPolynomial{}, -1.2), std::invalid_argument);
}

TEST_CASE("apply on the product system") {
    const SkewProductSystem sys = preset_by_name("product");
    SECTION("fixed base point, identity fiber map") {
        const TorusPoint q = sys.apply({0.0, 0.0, 0.3});
        CHECK(q.base.x() == 0.0);
        CHECK(q.base.y() == 0.0);
        CHECK(q.fiber == 0.3);
    }
    SECTION("integer arithmetic mod 1") {
        const TorusPoint q = sys.apply({0.5, 0.5, 0.0});
        CHECK(q.base.x() == 0.5);
        CHECK(q.base.y() == 0.0);
        CHECK(q.fiber == 0.0);
    }
}

TEST_CASE("apply with translation and nonlinearity") {
    // phi(v) = 0.1 sin(2 pi v1), a = 0.2, p = (0.25, 0, 0):
    // base -> (0.5, 0.25), fiber -> 0.1 sin(pi/2) = 0.1.
    const SkewProductSystem sys = preset_by_name("a02");
    const TorusPoint q = sys.apply({0.25, 0.0, 0.0});
    CHECK(q.base.x() == Catch::Approx(0.5).margin(1e-15));
    CHECK(q.base.y() == Catch::Approx(0.25).margin(1e-15));
    CHECK(q.fiber == Catch::Approx(0.1).margin(1e-15));
}

TEST_CASE("apply_inverse round trips") {
    SECTION("identity test on the product system") {
        const SkewProductSystem sys = preset_by_name("product");
        const TorusPoint p(0.1, 0.2, 0.3);
        CHECK(torus_dist(sys.apply(sys.apply_inverse(p)), p) < 1e-14);
        CHECK(torus_dist(sys.apply_inverse(sys.apply(p)), p) < 1e-14);
    }
    SECTION("nonlinear fiber inverse on 10^4 random points") {
        const SkewProductSystem sys = preset_by_name("a02");
        Rng rng(7);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const TorusPoint p(rng.unit(), rng.unit(), rng.unit());
            worst = std::max(worst, torus_dist(sys.apply(sys.apply_inverse(p)), p));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("differential structure") {
    SECTION("product system: block diag(A, 1) everywhere") {
        const SkewProductSystem sys = preset_by_name("product");
        const Eigen::Matrix3d d = sys.differential({0.37, 0.81, 0.12});
        CHECK(d(0, 0) == 2.0);
        CHECK(d(0, 1) == 1.0);
        CHECK(d(1, 0) == 1.0);
        CHECK(d(1, 1) == 1.0);
        CHECK(d(2, 2) == 1.0);
        CHECK(d(0, 2) == 0.0);
        CHECK(d(1, 2) == 0.0);
        CHECK(d(2, 0) == 0.0);
    }
    SECTION("fiber-derivative entry 1 + a cos(0) = 1.2") {
        const SkewProductSystem sys = preset_by_name("a02");
        CHECK(sys.differential({0.3, 0.4, 0.0})(2, 2) == Catch::Approx(1.2).margin(1e-15));
    }
    SECTION("orientation preservation: fiber derivative strictly positive") {
        const SkewProductSystem sys = preset_by_name("two_classes");
        Rng rng(3);
        for (int i = 0; i < 200; ++i)
            CHECK(sys.differential({rng.unit(), rng.unit(), rng.unit()})(2, 2) > 0.0);
    }
}

TEST_CASE("chain rule against the finite-difference oracle") {
    SECTION("product system (linear: FD is exact to roundoff)") {
        const SkewProductSystem sys = preset_by_name("product");
        const TorusPoint p(0.21, 0.68, 0.4);
        Eigen::Matrix3d prod = Eigen::Matrix3d::Identity();
        TorusPoint q = p;
        for (int i = 0; i < 3; ++i) {
            prod = sys.differential(q) * prod;
            q = sys.apply(q);
        }
        CHECK((prod - fd_jacobian(sys, p, 3, 1e-5)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("perturbed system (FD truncation limits the tolerance)") {
        const SkewProductSystem sys = preset_by_name("a02");
        const TorusPoint p(0.17, 0.52, 0.33);
        Eigen::Matrix3d prod = Eigen::Matrix3d::Identity();
        TorusPoint q = p;
        for (int i = 0; i < 2; ++i) {
            prod = sys.differential(q) * prod;
            q = sys.apply(q);
        }
        CHECK((prod - fd_jacobian(sys, p, 2, 1e-6)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("splitting of the product system is exact") {
    const SkewProductSystem sys = preset_by_name("product");
    const SplittingFrame fr = compute_splitting(sys, {0.3, 0.9, 0.1}, 10);

    // Unstable eigenvalue (3+sqrt(5))/2, eigenvector direction (1, (sqrt(5)-1)/2).
    CHECK(sys.lambda_u() == Catch::Approx(2.618033988749895).epsilon(1e-14));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    const Eigen::Vector3d expectU = Eigen::Vector3d(1.0, g, 0.0).normalized();
    CHECK((fr.e_u - expectU).norm() < 1e-14);
    CHECK(fr.e_c == Eigen::Vector3d(0, 0, 1));
    CHECK(std::abs(fr.e_s.dot(fr.e_u)) < 1e-14);  // symmetric base: orthogonal
    CHECK(fr.e_s.z() == 0.0);
}

TEST_CASE("splitting is Df-equivariant") {
    auto equivariance = [](const SkewProductSystem& sys, int depth, std::uint64_t seed) {
        Rng rng(seed);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const TorusPoint p(rng.unit(), rng.unit(), rng.unit());
            const SplittingFrame a = compute_splitting(sys, p, depth);
            const SplittingFrame b = compute_splitting(sys, sys.apply(p), depth);
            for (auto pick : {&SplittingFrame::e_s, &SplittingFrame::e_c, &SplittingFrame::e_u}) {
                const Eigen::Vector3d img = (sys.differential(p) * (a.*pick)).normalized();
                worst = std::max(worst, std::min((img - (b.*pick)).norm(), (img + (b.*pick)).norm()));
            }
        }
        return worst;
    };
    CHECK(equivariance(preset_by_name("product"), 10, 11) < 1e-8);
    CHECK(equivariance(preset_by_name("a02"), 80, 12) < 1e-5);
}

TEST_CASE("splitting converges at the domination rate") {
    const SkewProductSystem sys = preset_by_name("a02");
    const TorusPoint p(0.42, 0.13, 0.77);
    const SplittingFrame deep = compute_splitting(sys, p, 200);
    const SplittingFrame mid = compute_splitting(sys, p, 60);
    // Depth 60 already sits well inside the eta_0 = 1e-3 cone of the limit.
    CHECK((mid.e_u - deep.e_u).norm() < 1e-3);
    CHECK((mid.e_s - deep.e_s).norm() < 1e-3);
    // The limit does not depend on history length (cone contraction).
    const SplittingFrame deeper = compute_splitting(sys, p, 240);
    CHECK((deep.e_u - deeper.e_u).norm() < 1e-12);
    CHECK_THROWS_AS(compute_splitting(sys, p, 0), std::invalid_argument);
}

TEST_CASE("verify_partial_hyperbolicity on the product system") {
    const SkewProductSystem sys = preset_by_name("product");
    const HyperbolicityReport rep = verify_partial_hyperbolicity(sys, 50, 1);
    CHECK(rep.pass);
    // Center derivative is identically 1, so the margin is log(lambda_u).
    CHECK(rep.margin == Catch::Approx(std::log(sys.lambda_u())).margin(1e-12));
    CHECK(rep.lambda_estimate == Catch::Approx(sys.lambda_u()).epsilon(1e-12));
    CHECK(rep.min_pairwise_angle == Catch::Approx(std::numbers::pi / 2).margin(1e-12));
}

TEST_CASE("shipped presets pass with margin above 0.1") {
    for (const char* name : {"product", "a02", "two_classes"}) {
        const HyperbolicityReport rep = verify_partial_hyperbolicity(preset_by_name(name), 200, 1);
        INFO(name);
        CHECK(rep.pass);
        CHECK(rep.margin > 0.1);
    }
}

TEST_CASE("extreme nonlinearity keeps the center-unstable inequality only") {
    // At a = 0.999 the fiber derivative still clears lambda_u
    // (1.999 < 2.618), but it dips to 1e-3 near theta = 1/2, far below
    // |Df e_s| = lambda_s: the stable-center inequality fails there, so the
    // full report cannot pass.
    const SkewProductSystem sys(cat_matrix(), TrigPolynomial{}, 0.999);
    CHECK(1.0 + 0.999 < sys.lambda_u());
    const HyperbolicityReport rep = verify_partial_hyperbolicity(sys, 400, 1);
    CHECK_FALSE(rep.pass);
    CHECK(rep.margin < 0.0);
}

TEST_CASE("cone_check") {
    const SkewProductSystem sys = preset_by_name("product");

    SECTION("fiber segments are exact center curves") {
        std::vector<TorusPoint> arc;
        for (int i = 0; i <= 10; ++i) arc.emplace_back(0.3, 0.7, 0.2 + 0.005 * i);
        CHECK(cone_check(sys, arc, 0.01));
    }
    SECTION("base segments never enter the cone") {
        std::vector<TorusPoint> seg;
        for (int i = 0; i <= 10; ++i) seg.emplace_back(0.3 + 0.005 * i, 0.7, 0.2);
        CHECK_FALSE(cone_check(sys, seg, 0.5));
    }
    SECTION("Lipschitz-0.1 graph over a fiber arc") {
        std::vector<TorusPoint> graph;
        for (int i = 0; i <= 20; ++i) {
            const double t = 0.004 * i;
            graph.emplace_back(0.3 + 0.1 * t, 0.7, 0.2 + t);
        }
        CHECK(cone_check(sys, graph, 0.2));
        CHECK_FALSE(cone_check(sys, graph, 0.05));
    }
    SECTION("sparse samples are rejected") {
        std::vector<TorusPoint> sparse{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.3}};
        CHECK_THROWS_AS(cone_check(sys, sparse, 0.2), std::invalid_argument);
    }
}

TEST_CASE("center vector field flow") {
    const SkewProductSystem sys = preset_by_name("a02");
    SECTION("pure field is fiber rotation") {
        const CenterVectorField x(sys);
        const TorusPoint q = x.flow({0.3, 0.4, 0.9}, 0.2);
        CHECK(q.base.x() == 0.3);
        CHECK(q.fiber == Catch::Approx(wrap01(1.1)).margin(1e-15));
    }
    SECTION("tilted field keeps positive center component") {
        const CenterVectorField x(sys, 0.1);
        const TorusPoint p(0.3, 0.4, 0.9);
        const Eigen::Vector3d v = x(p);
        CHECK(v.z() > 0.9);
        const TorusPoint q = x.flow(p, 0.05);
        CHECK(torus_dist(p, q) > 0.045);
        CHECK(torus_dist(p, q) < 0.06);
    }
}
