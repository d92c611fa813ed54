#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "flowtune/bicubic.hpp"
#include "flowtune/types.hpp"

namespace flowtune {

// One bicubic sheet over (p, cc) at a fixed pipelining value. `observed`
// flags nodes backed by real measurements; the rest were filled from the
// nearest observed node and are excluded from accuracy scoring.
struct SurfaceSlice {
    double pp_value = 0;
    BicubicGrid patch;
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> observed;
};

// Throughput model over the parameter lattice: bicubic in (p, cc) per
// pipelining slice, relaxed cubic spline across slices. Immutable once
// built; safe to share across threads.
class SurfaceFamily {
public:
    SurfaceFamily() = default;
    explicit SurfaceFamily(std::vector<SurfaceSlice> slices);

    double eval(double p, double cc, double pp) const;
    double eval(const ParameterPoint& t) const { return eval(t.p, t.cc, t.pp); }

    // (d/dp, d/dcc, d/dpp). Spline fitting is linear in the ordinates, so
    // derivatives in p and cc commute with the cross-slice spline.
    Eigen::Vector3d gradient(double p, double cc, double pp) const;
    // Symmetric Hessian in (p, cc, pp) order. At grid nodes the second
    // derivatives are one-sided (taken from the cell to the upper-right).
    Eigen::Matrix3d hessian(double p, double cc, double pp) const;

    bool in_domain(double p, double cc, double pp) const;
    bool in_domain(const ParameterPoint& t) const { return in_domain(t.p, t.cc, t.pp); }

    const std::vector<SurfaceSlice>& slices() const { return slices_; }
    const Eigen::VectorXd& p_axis() const { return p_axis_; }
    const Eigen::VectorXd& cc_axis() const { return cc_axis_; }
    double pp_min() const { return slices_.front().pp_value; }
    double pp_max() const { return slices_.back().pp_value; }

private:
    // Spline across slices through q(slice) for fixed (p, cc); degenerate
    // (single-slice) families short-circuit before calling this.
    template <typename PerSlice>
    CubicSpline cross_spline(PerSlice&& q) const {
        Eigen::VectorXd ys(static_cast<Eigen::Index>(slices_.size()));
        for (std::size_t k = 0; k < slices_.size(); ++k)
            ys[static_cast<Eigen::Index>(k)] = q(slices_[k]);
        return CubicSpline::fit(pp_values_, ys);
    }

    std::vector<SurfaceSlice> slices_; // ascending pp_value
    Eigen::VectorXd p_axis_, cc_axis_, pp_values_;
    // Precomputed value splines across pp for every integer (p, cc) in the
    // hull; keyed by (p, cc). Built eagerly so the object stays immutable.
    std::map<std::pair<int, int>, CubicSpline> lattice_cache_;
};

// Builds a slice value matrix from per-node means, filling unobserved nodes
// with the mean of the nearest observed node(s) by (p, cc) distance
// (equidistant nodes are averaged). `observed` is 1 where z holds a real
// sample mean. Throws if nothing is observed.
void fill_missing_nodes(const Eigen::VectorXd& p_axis, const Eigen::VectorXd& cc_axis,
                        Eigen::MatrixXd& z,
                        const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& observed);

// Running statistics for repeat observations at one lattice point.
struct PointStats {
    std::int64_t n = 0;
    double mean = 0;
    double m2 = 0; // sum of squared deviations from the mean

    void add(double x) {
        n += 1;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    // Population variance, as used for the per-point deviation model.
    double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }

    static PointStats merged(const PointStats& a, const PointStats& b) {
        if (a.n == 0) return b;
        if (b.n == 0) return a;
        PointStats r;
        r.n = a.n + b.n;
        const double d = b.mean - a.mean;
        r.mean = a.mean + d * static_cast<double>(b.n) / static_cast<double>(r.n);
        r.m2 = a.m2 + b.m2 +
               d * d * static_cast<double>(a.n) * static_cast<double>(b.n) / static_cast<double>(r.n);
        return r;
    }
};

using LatticeStats = std::map<ParameterPoint, PointStats>;

// Gaussian envelope around a surface: per-point mean and standard deviation,
// with points seen only once falling back to the pooled sigma of the surface.
struct ConfidenceModel {
    LatticeStats stats;
    double z = 1.96;
    double pooled_sigma = 0;

    bool covers(const ParameterPoint& t) const { return stats.count(t) != 0; }
    double mu(const ParameterPoint& t) const;
    double sigma(const ParameterPoint& t) const;
    double band_lo(const ParameterPoint& t) const { return mu(t) - z * sigma(t); }
    double band_hi(const ParameterPoint& t) const { return mu(t) + z * sigma(t); }
    bool in_band(double value, const ParameterPoint& t) const {
        return value >= band_lo(t) && value <= band_hi(t);
    }
};

ConfidenceModel fit_confidence(LatticeStats stats, double z);

// One (parameters, throughput) sample for regression fitting and accuracy
// scoring.
struct SurfaceSample {
    double p = 0, cc = 0, pp = 0;
    double th = 0;
};

// Least-squares full polynomial surface in (p, cc, pp); the quadratic and
// cubic comparison baselines.
struct PolySurface {
    int degree = 2;
    std::vector<std::array<int, 3>> exponents; // (p, cc, pp) powers per term
    Eigen::VectorXd coeffs;
    double rmse = 0;
    bool regularized = false; // rank-deficient design matrix, ridge fallback

    double eval(double p, double cc, double pp) const;
    double eval(const ParameterPoint& t) const { return eval(t.p, t.cc, t.pp); }
};

PolySurface fit_regression(const std::vector<SurfaceSample>& samples, int degree);

struct AccuracyScore {
    double accuracy_pct = 0;     // 100 * (1 - mean relative error), floored at 0
    double mean_rel_err = 0;
    std::size_t used = 0;
    std::size_t skipped = 0;     // holdout entries with zero true throughput
};

// `model` is any callable (p, cc, pp) -> predicted throughput.
template <typename Model>
AccuracyScore surface_accuracy(Model&& model, const std::vector<SurfaceSample>& holdout) {
    if (holdout.empty()) throw std::invalid_argument("empty holdout");
    AccuracyScore r;
    double sum = 0;
    for (const auto& s : holdout) {
        if (s.th == 0) {
            ++r.skipped;
            continue;
        }
        sum += std::abs(model(s.p, s.cc, s.pp) - s.th) / std::abs(s.th);
        ++r.used;
    }
    r.mean_rel_err = r.used > 0 ? sum / static_cast<double>(r.used) : 0.0;
    r.accuracy_pct = std::max(0.0, 100.0 * (1.0 - r.mean_rel_err));
    return r;
}

} // namespace flowtune
