// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_SKEW_PRODUCT_HPP
#define CHAINLAB_SKEW_PRODUCT_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "chainlab/torus.hpp"

namespace chainlab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Jumps of center pseudo-orbits must stay below this bound so that fiber
/// arcs of length 10*eps0 are still isometric under the arc-length charts
/// (fibers have length 1).
inline constexpr double kEpsilon0 = 0.1;

/// One term of a trigonometric polynomial on T^2:
/// amplitude * sin(2*pi*(k1*v1 + k2*v2)).
struct FourierTerm {
    int k1 = 0;
    int k2 = 0;
    double amplitude = 0.0;
};

/// Finite trigonometric polynomial phi : T^2 -> R.
class TrigPolynomial {
public:
    TrigPolynomial() = default;
    explicit TrigPolynomial(std::vector<FourierTerm> terms) : terms_(std::move(terms)) {}

    double operator()(const Eigen::Vector2d& v) const {
        double s = 0.0;
        for (const auto& t : terms_)
            s += t.amplitude * std::sin(kTwoPi * (t.k1 * v.x() + t.k2 * v.y()));
        return s;
    }

    Eigen::Vector2d gradient(const Eigen::Vector2d& v) const {
        Eigen::Vector2d g(0.0, 0.0);
        for (const auto& t : terms_) {
            const double c = t.amplitude * kTwoPi * std::cos(kTwoPi * (t.k1 * v.x() + t.k2 * v.y()));
            g.x() += c * t.k1;
            g.y() += c * t.k2;
        }
        return g;
    }

    /// sup_v |grad phi| <= 2*pi * sum |c_j| * |k_j|.
    double gradient_bound() const {
        double b = 0.0;
        for (const auto& t : terms_)
            b += std::abs(t.amplitude) * kTwoPi * std::hypot(double(t.k1), double(t.k2));
        return b;
    }

    bool empty() const { return terms_.empty(); }
    const std::vector<FourierTerm>& terms() const { return terms_; }

private:
    std::vector<FourierTerm> terms_;
};

/// Skew product f(v, theta) = (A v, theta + phi(v) + (a/2pi) sin(2pi theta))
/// over a hyperbolic toral automorphism A. The fiber map is an orientation
/// preserving circle diffeomorphism for |a| < 1; its derivative is
/// 1 + a cos(2pi theta).
class SkewProductSystem {
public:
    SkewProductSystem(const Eigen::Matrix2i& baseMatrix, TrigPolynomial fiberTranslation,
                      double fiberNonlinearity)
        : A_(baseMatrix), phi_(std::move(fiberTranslation)), a_(fiberNonlinearity) {
        const long det = long(A_(0, 0)) * A_(1, 1) - long(A_(0, 1)) * A_(1, 0);
        const long tr = long(A_(0, 0)) + A_(1, 1);
        if (det != 1)
            throw std::invalid_argument("base matrix must have determinant 1, got " +
                                        std::to_string(det));
        if (std::abs(tr) <= 2)
            throw std::invalid_argument("base matrix must be hyperbolic (|trace| > 2), got trace " +
                                        std::to_string(tr));
        if (!(std::abs(a_) < 1.0))
            throw std::invalid_argument("fiber nonlinearity amplitude must satisfy |a| < 1");

        Ad_ = A_.cast<double>();
        // det = 1, so the inverse is the integer adjugate.
        AdInv_ << Ad_(1, 1), -Ad_(0, 1), -Ad_(1, 0), Ad_(0, 0);

        const double t = double(tr);
        const double disc = std::sqrt(t * t - 4.0);
        // Eigenvalue of larger modulus goes to lambdaU (same sign as trace).
        lambdaU_ = (t > 0) ? (t + disc) / 2.0 : (t - disc) / 2.0;
        lambdaS_ = 1.0 / lambdaU_;
        eigU_ = eigenvector(lambdaU_);
        eigS_ = eigenvector(lambdaS_);
    }

    const Eigen::Matrix2i& base_matrix() const { return A_; }
    const Eigen::Matrix2d& base() const { return Ad_; }
    const Eigen::Matrix2d& base_inverse() const { return AdInv_; }
    const TrigPolynomial& phi() const { return phi_; }
    double nonlinearity() const { return a_; }

    double lambda_u() const { return lambdaU_; }
    double lambda_s() const { return lambdaS_; }
    /// Unit eigenvectors of the base matrix.
    const Eigen::Vector2d& eig_u() const { return eigU_; }
    const Eigen::Vector2d& eig_s() const { return eigS_; }

    bool is_product() const { return phi_.empty() && a_ == 0.0; }

    /// Real lift of the fiber circle map at base point v.
    double fiber_lift(const Eigen::Vector2d& v, double theta) const {
        return theta + phi_(v) + (a_ / kTwoPi) * std::sin(kTwoPi * theta);
    }

    double fiber_derivative(double theta) const {
        return 1.0 + a_ * std::cos(kTwoPi * theta);
    }

    TorusPoint apply(const TorusPoint& p) const {
        Eigen::Vector2d b(wrap01(Ad_(0, 0) * p.base.x() + Ad_(0, 1) * p.base.y()),
                          wrap01(Ad_(1, 0) * p.base.x() + Ad_(1, 1) * p.base.y()));
        return {b, wrap01(fiber_lift(p.base, p.fiber))};
    }

    /// Inverse of the fiber map: the unique theta with
    /// theta + (a/2pi) sin(2pi theta) = w (mod 1), by safeguarded Newton on
    /// the strictly increasing lift. Closed form when a = 0.
    double fiber_inverse(const Eigen::Vector2d& preBase, double fiberImage) const {
        const double w = fiberImage - phi_(preBase);
        if (a_ == 0.0) return wrap01(w);
        double lo = w - 0.2, hi = w + 0.2;
        double th = w;
        for (int it = 0; it < 80; ++it) {
            const double g = th + (a_ / kTwoPi) * std::sin(kTwoPi * th) - w;
            if (std::abs(g) < 1e-15) return wrap01(th);
            if (g > 0) hi = th; else lo = th;
            const double step = g / (1.0 + a_ * std::cos(kTwoPi * th));
            th -= step;
            if (th <= lo || th >= hi) th = 0.5 * (lo + hi);
        }
        throw std::runtime_error("fiber inverse: root finder failed to converge "
                                 "(invalid nonlinearity amplitude?)");
    }

    TorusPoint apply_inverse(const TorusPoint& p) const {
        Eigen::Vector2d b(wrap01(AdInv_(0, 0) * p.base.x() + AdInv_(0, 1) * p.base.y()),
                          wrap01(AdInv_(1, 0) * p.base.x() + AdInv_(1, 1) * p.base.y()));
        return {b, fiber_inverse(b, p.fiber)};
    }

    TorusPoint iterate(const TorusPoint& p, int n) const {
        TorusPoint q = p;
        for (int i = 0; i < n; ++i) q = apply(q);
        for (int i = 0; i > n; --i) q = apply_inverse(q);
        return q;
    }

    /// Block lower-triangular differential: base block A, fiber row
    /// (grad phi, 1 + a cos(2pi theta)).
    Eigen::Matrix3d differential(const TorusPoint& p) const {
        Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
        d.topLeftCorner<2, 2>() = Ad_;
        const Eigen::Vector2d g = phi_.gradient(p.base);
        d(2, 0) = g.x();
        d(2, 1) = g.y();
        d(2, 2) = fiber_derivative(p.fiber);
        return d;
    }

    /// Global operator-norm bound for Df, used as the rigorous inflation
    /// factor of the chain graph.
    double df_norm_bound() const {
        const double na = spectral_norm(Ad_);
        const double g = phi_.gradient_bound();
        const double c = 1.0 + std::abs(a_);
        Eigen::Matrix2d m;
        m << na, 0.0, g, c;
        return spectral_norm(m);
    }

private:
    static double spectral_norm(const Eigen::Matrix2d& m) {
        // Largest singular value of a 2x2 matrix, closed form.
        const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
        const double q = a * a + b * b + c * c + d * d;
        const double det = a * d - b * c;
        const double s = std::sqrt(std::max(0.0, q * q - 4.0 * det * det));
        return std::sqrt(0.5 * (q + s));
    }

    Eigen::Vector2d eigenvector(double lambda) const {
        Eigen::Vector2d v;
        if (A_(0, 1) != 0)
            v = Eigen::Vector2d(double(A_(0, 1)), lambda - double(A_(0, 0)));
        else
            v = Eigen::Vector2d(lambda - double(A_(1, 1)), double(A_(1, 0)));
        return v.normalized();
    }

    Eigen::Matrix2i A_;
    TrigPolynomial phi_;
    double a_;
    Eigen::Matrix2d Ad_, AdInv_;
    double lambdaU_ = 0.0, lambdaS_ = 0.0;
    Eigen::Vector2d eigU_, eigS_;
};

}  // namespace chainlab

#endif  // CHAINLAB_SKEW_PRODUCT_HPP
