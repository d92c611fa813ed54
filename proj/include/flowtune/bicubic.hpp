#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "flowtune/spline.hpp"

namespace flowtune {

// Bicubic interpolation over a rectangular grid. Each cell carries a full
// cubic in two variables pinned by the value, both first derivatives, and the
// cross derivative at its four corners, so neighbouring cells agree on value
// and gradient along shared edges. Corner derivatives are estimated with
// relaxed cubic splines along grid rows and columns (and the cross term by
// splining the row derivatives along columns), keeping the whole construction
// on one interpolation scheme.
template <typename T>
class BicubicGridT {
public:
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Mat4 = Eigen::Matrix<T, 4, 4>;

    BicubicGridT() = default;

    // xs: grid abscissae along the first axis (size N >= 2, strictly
    // increasing); ys: second axis (size M >= 2); z(i,j) = value at (xs_i, ys_j).
    static BicubicGridT fit(const Vec& xs, const Vec& ys, const Mat& z) {
        const Eigen::Index n = xs.size(), m = ys.size();
        if (n < 2 || m < 2) throw std::invalid_argument("bicubic grid needs at least 2x2 nodes");
        if (z.rows() != n || z.cols() != m)
            throw std::invalid_argument("bicubic value matrix shape mismatch");

        BicubicGridT g;
        g.xs_ = xs;
        g.ys_ = ys;
        g.z_ = z;
        g.dx_.resize(n, m);
        g.dy_.resize(n, m);
        g.dxy_.resize(n, m);

        for (Eigen::Index j = 0; j < m; ++j) {
            const auto s = CubicSplineT<T>::fit(xs, Vec(z.col(j)));
            for (Eigen::Index i = 0; i < n; ++i) g.dx_(i, j) = s.deriv1(xs[i]);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto s = CubicSplineT<T>::fit(ys, Vec(z.row(i).transpose()));
            for (Eigen::Index j = 0; j < m; ++j) g.dy_(i, j) = s.deriv1(ys[j]);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto s = CubicSplineT<T>::fit(ys, Vec(g.dx_.row(i).transpose()));
            for (Eigen::Index j = 0; j < m; ++j) g.dxy_(i, j) = s.deriv1(ys[j]);
        }
        g.build_cells();
        return g;
    }

    // Variant with externally supplied corner derivatives (used when loading
    // a persisted surface so the rebuilt cells match the stored data exactly).
    static BicubicGridT from_derivatives(const Vec& xs, const Vec& ys, const Mat& z,
                                         const Mat& dx, const Mat& dy, const Mat& dxy) {
        const Eigen::Index n = xs.size(), m = ys.size();
        if (n < 2 || m < 2) throw std::invalid_argument("bicubic grid needs at least 2x2 nodes");
        if (z.rows() != n || z.cols() != m || dx.rows() != n || dx.cols() != m ||
            dy.rows() != n || dy.cols() != m || dxy.rows() != n || dxy.cols() != m)
            throw std::invalid_argument("bicubic matrix shape mismatch");
        BicubicGridT g;
        g.xs_ = xs;
        g.ys_ = ys;
        g.z_ = z;
        g.dx_ = dx;
        g.dy_ = dy;
        g.dxy_ = dxy;
        g.build_cells();
        return g;
    }

    T eval(T x, T y) const { return term(x, y, 0, 0); }
    T deriv_x(T x, T y) const { return term(x, y, 1, 0); }
    T deriv_y(T x, T y) const { return term(x, y, 0, 1); }
    T deriv_xx(T x, T y) const { return term(x, y, 2, 0); }
    T deriv_yy(T x, T y) const { return term(x, y, 0, 2); }
    T deriv_xy(T x, T y) const { return term(x, y, 1, 1); }

    // Evaluates a specific cell's polynomial (optionally a partial
    // derivative) at (x, y) even outside that cell; lets callers compare the
    // two polynomials meeting at a shared edge.
    T eval_in_cell(Eigen::Index ci, Eigen::Index cj, T x, T y, int ox = 0, int oy = 0) const {
        return cell_term(ci, cj, x, y, ox, oy);
    }

    const Vec& grid_x() const { return xs_; }
    const Vec& grid_y() const { return ys_; }
    const Mat& values() const { return z_; }
    const Mat& deriv_x_nodes() const { return dx_; }
    const Mat& deriv_y_nodes() const { return dy_; }
    const Mat& deriv_xy_nodes() const { return dxy_; }

    bool in_domain(T x, T y) const {
        return x >= xs_[0] && x <= xs_[xs_.size() - 1] && y >= ys_[0] && y <= ys_[ys_.size() - 1];
    }

private:
    // Hermite basis-to-monomial matrix: coefficients of the cubic with value
    // and slope pinned at t=0 and t=1.
    static Mat4 hermite() {
        Mat4 h;
        h << T(1), T(0), T(0), T(0),
             T(0), T(0), T(1), T(0),
             T(-3), T(3), T(-2), T(-1),
             T(2), T(-2), T(1), T(1);
        return h;
    }

    void build_cells() {
        const Eigen::Index n = xs_.size(), m = ys_.size();
        const Mat4 h = hermite();
        cells_.assign(static_cast<std::size_t>((n - 1) * (m - 1)), Mat4());
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const T hx = xs_[i + 1] - xs_[i];
            for (Eigen::Index j = 0; j + 1 < m; ++j) {
                const T hy = ys_[j + 1] - ys_[j];
                Mat4 g;
                g << z_(i, j), z_(i, j + 1), hy * dy_(i, j), hy * dy_(i, j + 1),
                     z_(i + 1, j), z_(i + 1, j + 1), hy * dy_(i + 1, j), hy * dy_(i + 1, j + 1),
                     hx * dx_(i, j), hx * dx_(i, j + 1), hx * hy * dxy_(i, j), hx * hy * dxy_(i, j + 1),
                     hx * dx_(i + 1, j), hx * dx_(i + 1, j + 1), hx * hy * dxy_(i + 1, j), hx * hy * dxy_(i + 1, j + 1);
                cells_[cell_index(i, j)] = h * g * h.transpose();
            }
        }
    }

    std::size_t cell_index(Eigen::Index i, Eigen::Index j) const {
        return static_cast<std::size_t>(i * (ys_.size() - 1) + j);
    }

    static Eigen::Index locate(const Vec& v, T x) {
        const Eigen::Index n = v.size();
        if (x < v[0] || x > v[n - 1])
            throw std::domain_error("bicubic evaluation outside grid");
        Eigen::Index lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const Eigen::Index mid = (lo + hi) / 2;
            if (x < v[mid]) hi = mid;
            else lo = mid;
        }
        return lo;
    }

    // d/dx^ox d/dy^oy of the owning cell's polynomial at (x, y).
    T term(T x, T y, int ox, int oy) const {
        return cell_term(locate(xs_, x), locate(ys_, y), x, y, ox, oy);
    }

    T cell_term(Eigen::Index i, Eigen::Index j, T x, T y, int ox, int oy) const {
        const T hx = xs_[i + 1] - xs_[i];
        const T hy = ys_[j + 1] - ys_[j];
        const T u = (x - xs_[i]) / hx;
        const T v = (y - ys_[j]) / hy;
        const Mat4& a = cells_[cell_index(i, j)];

        auto powers = [](T t, int order) {
            Eigen::Matrix<T, 4, 1> w = Eigen::Matrix<T, 4, 1>::Zero();
            for (int k = order; k < 4; ++k) {
                T c = T(1);
                for (int d = 0; d < order; ++d) c *= T(k - d);
                w[k] = c * std::pow(t, T(k - order));
            }
            return w;
        };
        const T value = powers(u, ox).transpose() * a * powers(v, oy);
        return value / (std::pow(hx, T(ox)) * std::pow(hy, T(oy)));
    }

    Vec xs_, ys_;
    Mat z_, dx_, dy_, dxy_;
    std::vector<Mat4> cells_;
};

using BicubicGrid = BicubicGridT<Scalar>;

} // namespace flowtune
