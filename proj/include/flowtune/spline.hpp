#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "flowtune/types.hpp"

namespace flowtune {

// Relaxed (natural-boundary) cubic spline interpolant: piecewise cubics with
// value/first/second-derivative continuity at interior knots and zero second
// derivative at both endpoints. Fitting solves the tridiagonal system for the
// knot second derivatives; pieces are stored in shifted monomial form
//   s(x) = c0 + c1*t + c2*t^2 + c3*t^3,  t = x - x_i  on [x_i, x_{i+1}].
template <typename T>
class CubicSplineT {
public:
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    CubicSplineT() = default;

    static CubicSplineT fit(const Vec& xs, const Vec& ys) {
        const Eigen::Index n = xs.size();
        if (n < 2) throw std::invalid_argument("spline needs at least 2 knots");
        if (ys.size() != n) throw std::invalid_argument("spline knot size mismatch");
        for (Eigen::Index i = 0; i + 1 < n; ++i)
            if (!(xs[i] < xs[i + 1]))
                throw std::invalid_argument("spline abscissae must be strictly increasing");

        Vec m = Vec::Zero(n); // knot second derivatives, endpoints pinned to 0
        if (n > 2) {
            const Eigen::Index k = n - 2;
            Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> A =
                Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(k, k);
            Vec rhs(k);
            for (Eigen::Index i = 1; i + 1 < n; ++i) {
                const T h0 = xs[i] - xs[i - 1];
                const T h1 = xs[i + 1] - xs[i];
                const Eigen::Index r = i - 1;
                if (r > 0) A(r, r - 1) = h0 / T(6);
                A(r, r) = (h0 + h1) / T(3);
                if (r + 1 < k) A(r, r + 1) = h1 / T(6);
                rhs[r] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            }
            m.segment(1, k) = A.partialPivLu().solve(rhs);
        }

        CubicSplineT s;
        s.xs_ = xs;
        s.ys_ = ys;
        s.coef_.resize(n - 1, 4);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const T h = xs[i + 1] - xs[i];
            s.coef_(i, 0) = ys[i];
            s.coef_(i, 1) = (ys[i + 1] - ys[i]) / h - h * (T(2) * m[i] + m[i + 1]) / T(6);
            s.coef_(i, 2) = m[i] / T(2);
            s.coef_(i, 3) = (m[i + 1] - m[i]) / (T(6) * h);
        }
        return s;
    }

    static CubicSplineT fit(const std::vector<T>& xs, const std::vector<T>& ys) {
        return fit(Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                   Eigen::Map<const Vec>(ys.data(), static_cast<Eigen::Index>(ys.size())));
    }

    T operator()(T x) const { return eval(x); }

    T eval(T x) const {
        const auto [i, t] = locate(x);
        return coef_(i, 0) + t * (coef_(i, 1) + t * (coef_(i, 2) + t * coef_(i, 3)));
    }

    T deriv1(T x) const {
        const auto [i, t] = locate(x);
        return coef_(i, 1) + t * (T(2) * coef_(i, 2) + t * T(3) * coef_(i, 3));
    }

    T deriv2(T x) const {
        const auto [i, t] = locate(x);
        return T(2) * coef_(i, 2) + T(6) * coef_(i, 3) * t;
    }

    Eigen::Index num_knots() const { return xs_.size(); }
    const Vec& knots_x() const { return xs_; }
    const Vec& knots_y() const { return ys_; }
    T x_min() const { return xs_[0]; }
    T x_max() const { return xs_[xs_.size() - 1]; }
    // row i: (c0, c1, c2, c3) of the piece on [x_i, x_{i+1}]
    const Eigen::Matrix<T, Eigen::Dynamic, 4>& pieces() const { return coef_; }

private:
    // Piece index and local offset for x; x outside [x_0, x_{n-1}] is an error.
    std::pair<Eigen::Index, T> locate(T x) const {
        const Eigen::Index n = xs_.size();
        if (n == 0) throw std::logic_error("spline not fitted");
        if (x < xs_[0] || x > xs_[n - 1])
            throw std::domain_error("spline evaluation outside knot range");
        Eigen::Index lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const Eigen::Index mid = (lo + hi) / 2;
            if (x < xs_[mid]) hi = mid;
            else lo = mid;
        }
        return {lo, x - xs_[lo]};
    }

    Vec xs_, ys_;
    Eigen::Matrix<T, Eigen::Dynamic, 4> coef_;
};

using CubicSpline = CubicSplineT<Scalar>;

} // namespace flowtune
