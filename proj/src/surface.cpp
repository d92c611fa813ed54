#include "flowtune/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowtune {

namespace {

bool is_integral(double x) { return x == std::floor(x); }

} // namespace

SurfaceFamily::SurfaceFamily(std::vector<SurfaceSlice> slices) : slices_(std::move(slices)) {
    if (slices_.empty()) throw std::invalid_argument("surface family needs at least one slice");
    std::sort(slices_.begin(), slices_.end(),
              [](const SurfaceSlice& a, const SurfaceSlice& b) { return a.pp_value < b.pp_value; });
    for (std::size_t k = 0; k + 1 < slices_.size(); ++k)
        if (slices_[k].pp_value == slices_[k + 1].pp_value)
            throw std::invalid_argument("duplicate pp slice");

    p_axis_ = slices_.front().patch.grid_x();
    cc_axis_ = slices_.front().patch.grid_y();
    for (const auto& s : slices_)
        if (s.patch.grid_x() != p_axis_ || s.patch.grid_y() != cc_axis_)
            throw std::invalid_argument("slices must share one (p, cc) grid");

    pp_values_.resize(static_cast<Eigen::Index>(slices_.size()));
    for (std::size_t k = 0; k < slices_.size(); ++k)
        pp_values_[static_cast<Eigen::Index>(k)] = slices_[k].pp_value;

    if (slices_.size() >= 2) {
        const int p_lo = static_cast<int>(std::ceil(p_axis_[0]));
        const int p_hi = static_cast<int>(std::floor(p_axis_[p_axis_.size() - 1]));
        const int c_lo = static_cast<int>(std::ceil(cc_axis_[0]));
        const int c_hi = static_cast<int>(std::floor(cc_axis_[cc_axis_.size() - 1]));
        for (int p = p_lo; p <= p_hi; ++p)
            for (int c = c_lo; c <= c_hi; ++c)
                lattice_cache_.emplace(
                    std::make_pair(p, c),
                    cross_spline([&](const SurfaceSlice& s) { return s.patch.eval(p, c); }));
    }
}

bool SurfaceFamily::in_domain(double p, double cc, double pp) const {
    if (slices_.empty()) return false;
    return slices_.front().patch.in_domain(p, cc) && pp >= pp_min() && pp <= pp_max();
}

double SurfaceFamily::eval(double p, double cc, double pp) const {
    if (!in_domain(p, cc, pp)) throw std::domain_error("evaluation outside surface hull");
    for (const auto& s : slices_)
        if (s.pp_value == pp) return s.patch.eval(p, cc);
    if (is_integral(p) && is_integral(cc)) {
        auto it = lattice_cache_.find({static_cast<int>(p), static_cast<int>(cc)});
        if (it != lattice_cache_.end()) return it->second.eval(pp);
    }
    return cross_spline([&](const SurfaceSlice& s) { return s.patch.eval(p, cc); }).eval(pp);
}

Eigen::Vector3d SurfaceFamily::gradient(double p, double cc, double pp) const {
    if (!in_domain(p, cc, pp)) throw std::domain_error("evaluation outside surface hull");
    Eigen::Vector3d g;
    if (slices_.size() == 1) {
        const auto& b = slices_.front().patch;
        g << b.deriv_x(p, cc), b.deriv_y(p, cc), 0.0;
        return g;
    }
    g[0] = cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_x(p, cc); }).eval(pp);
    g[1] = cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_y(p, cc); }).eval(pp);
    g[2] = cross_spline([&](const SurfaceSlice& s) { return s.patch.eval(p, cc); }).deriv1(pp);
    return g;
}

Eigen::Matrix3d SurfaceFamily::hessian(double p, double cc, double pp) const {
    if (!in_domain(p, cc, pp)) throw std::domain_error("evaluation outside surface hull");
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    if (slices_.size() == 1) {
        const auto& b = slices_.front().patch;
        h(0, 0) = b.deriv_xx(p, cc);
        h(1, 1) = b.deriv_yy(p, cc);
        h(0, 1) = h(1, 0) = b.deriv_xy(p, cc);
        return h;
    }
    h(0, 0) = cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_xx(p, cc); }).eval(pp);
    h(1, 1) = cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_yy(p, cc); }).eval(pp);
    h(0, 1) = h(1, 0) =
        cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_xy(p, cc); }).eval(pp);
    h(0, 2) = h(2, 0) =
        cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_x(p, cc); }).deriv1(pp);
    h(1, 2) = h(2, 1) =
        cross_spline([&](const SurfaceSlice& s) { return s.patch.deriv_y(p, cc); }).deriv1(pp);
    h(2, 2) = cross_spline([&](const SurfaceSlice& s) { return s.patch.eval(p, cc); }).deriv2(pp);
    return h;
}

void fill_missing_nodes(const Eigen::VectorXd& p_axis, const Eigen::VectorXd& cc_axis,
                        Eigen::MatrixXd& z,
                        const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& observed) {
    const Eigen::Index n = p_axis.size(), m = cc_axis.size();
    if (z.rows() != n || z.cols() != m || observed.rows() != n || observed.cols() != m)
        throw std::invalid_argument("fill_missing_nodes shape mismatch");
    if (observed.sum() == 0) throw std::invalid_argument("no observed nodes to fill from");
    if (observed.sum() == n * m) return;

    const Eigen::MatrixXd src = z;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (observed(i, j)) continue;
            double best = std::numeric_limits<double>::infinity();
            double acc = 0;
            int count = 0;
            for (Eigen::Index a = 0; a < n; ++a) {
                for (Eigen::Index b = 0; b < m; ++b) {
                    if (!observed(a, b)) continue;
                    const double dp = p_axis[i] - p_axis[a];
                    const double dc = cc_axis[j] - cc_axis[b];
                    const double d2 = dp * dp + dc * dc;
                    if (d2 < best) {
                        best = d2;
                        acc = src(a, b);
                        count = 1;
                    } else if (d2 == best) {
                        acc += src(a, b);
                        ++count;
                    }
                }
            }
            z(i, j) = acc / count;
        }
    }
}

ConfidenceModel fit_confidence(LatticeStats stats, double z) {
    ConfidenceModel m;
    m.stats = std::move(stats);
    m.z = z;
    double m2_sum = 0;
    std::int64_t n_sum = 0;
    for (const auto& [pt, st] : m.stats) {
        (void)pt;
        if (st.n >= 2) {
            m2_sum += st.m2;
            n_sum += st.n;
        }
    }
    m.pooled_sigma = n_sum > 0 ? std::sqrt(m2_sum / static_cast<double>(n_sum)) : 0.0;
    return m;
}

double ConfidenceModel::mu(const ParameterPoint& t) const {
    auto it = stats.find(t);
    if (it == stats.end()) throw std::out_of_range("no observations at lattice point");
    return it->second.mean;
}

double ConfidenceModel::sigma(const ParameterPoint& t) const {
    auto it = stats.find(t);
    if (it == stats.end()) throw std::out_of_range("no observations at lattice point");
    if (it->second.n >= 2) return std::sqrt(it->second.variance());
    return pooled_sigma;
}

namespace {

std::vector<std::array<int, 3>> monomials(int degree) {
    std::vector<std::array<int, 3>> out;
    for (int total = 0; total <= degree; ++total)
        for (int a = total; a >= 0; --a)
            for (int b = total - a; b >= 0; --b)
                out.push_back({a, b, total - a - b});
    return out;
}

} // namespace

double PolySurface::eval(double p, double cc, double pp) const {
    double y = 0;
    for (std::size_t k = 0; k < exponents.size(); ++k) {
        const auto& e = exponents[k];
        y += coeffs[static_cast<Eigen::Index>(k)] * std::pow(p, e[0]) * std::pow(cc, e[1]) *
             std::pow(pp, e[2]);
    }
    return y;
}

PolySurface fit_regression(const std::vector<SurfaceSample>& samples, int degree) {
    if (degree != 2 && degree != 3) throw std::invalid_argument("regression degree must be 2 or 3");
    PolySurface model;
    model.degree = degree;
    model.exponents = monomials(degree);
    const Eigen::Index terms = static_cast<Eigen::Index>(model.exponents.size());
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    if (n < terms) throw std::invalid_argument("fewer samples than regression coefficients");

    Eigen::MatrixXd x(n, terms);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < terms; ++k) {
            const auto& e = model.exponents[static_cast<std::size_t>(k)];
            x(i, k) = std::pow(s.p, e[0]) * std::pow(s.cc, e[1]) * std::pow(s.pp, e[2]);
        }
        y[i] = s.th;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < terms) {
        // Rank-deficient design: fall back to a lightly ridged normal system.
        model.regularized = true;
        Eigen::MatrixXd gram = x.transpose() * x;
        gram.diagonal().array() += 1e-8;
        model.coeffs = gram.ldlt().solve(x.transpose() * y);
    } else {
        model.coeffs = qr.solve(y);
    }
    model.rmse = std::sqrt((x * model.coeffs - y).squaredNorm() / static_cast<double>(n));
    return model;
}

} // namespace flowtune
