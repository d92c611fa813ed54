#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowtune/rng.hpp"
#include "flowtune/spline.hpp"
#include "oracles.hpp"

using namespace flowtune;

TEST_CASE("two knots degenerate to the straight line") {
    const auto s = CubicSpline::fit(std::vector<double>{0, 2}, std::vector<double>{1, 5});
    CHECK(s.eval(0) == doctest::Approx(1).epsilon(1e-12));
    CHECK(s.eval(2) == doctest::Approx(5).epsilon(1e-12));
    CHECK(s.eval(1) == doctest::Approx(3).epsilon(1e-12));
    CHECK(s.deriv2(1) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("collinear points reproduce the line everywhere") {
    const auto s = CubicSpline::fit(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 2});
    for (double x : {0.0, 0.25, 0.5, 1.3, 1.99, 2.0})
        CHECK(std::abs(s.eval(x) - x) <= 1e-9);
}

TEST_CASE("hand-derived tent knots") {
    // knots (0,0),(1,1),(2,0): interior second derivative -3, midpoint 0.6875
    const auto s = CubicSpline::fit(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 0});
    CHECK(std::abs(s.eval(0.5) - 0.6875) <= 1e-9);
    CHECK(std::abs(s.eval(1.5) - 0.6875) <= 1e-9); // symmetry of the data
    CHECK(std::abs(s.deriv2(0.0)) <= 1e-9);
    CHECK(std::abs(s.deriv2(1.0) + 3.0) <= 1e-9);
    CHECK(std::abs(s.deriv2(2.0)) <= 1e-9);
}

TEST_CASE("knot interpolation is exact at stored ordinates") {
    const std::vector<double> xs{1, 2, 4, 8};
    const std::vector<double> ys{5, -1, 2, 7};
    const auto s = CubicSpline::fit(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(std::abs(s.eval(xs[i]) - ys[i]) <= 1e-9);
}

TEST_CASE("constant data stays constant") {
    const auto s =
        CubicSpline::fit(std::vector<double>{0, 1, 2, 3}, std::vector<double>{4, 4, 4, 4});
    for (double x : {0.1, 0.9, 1.5, 2.7}) CHECK(s.eval(x) == doctest::Approx(4).epsilon(1e-12));
}

TEST_CASE("matches the direct coefficient-system oracle on random knot sets") {
    Rng rng(20240601);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(11));
        std::vector<double> xs, ys;
        double x = rng.uniform(-5, 5);
        for (int i = 0; i < n; ++i) {
            xs.push_back(x);
            ys.push_back(rng.uniform(-100, 100));
            x += rng.uniform(0.1, 3.0);
        }
        const auto s = CubicSpline::fit(xs, ys);
        const oracles::DirectSpline direct(xs, ys);

        // interpolation and natural boundary
        for (int i = 0; i < n; ++i) CHECK(std::abs(s.eval(xs[i]) - ys[i]) <= 1e-9);
        CHECK(std::abs(s.deriv2(xs.front())) <= 1e-9);
        CHECK(std::abs(s.deriv2(xs.back())) <= 1e-9);

        for (int k = 0; k < 10; ++k) {
            const double q = rng.uniform(xs.front(), xs.back());
            CHECK(s.eval(q) == doctest::Approx(direct(q)).epsilon(1e-7));
        }
    }
}

TEST_CASE("C2 continuity at interior knots by finite differences") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_index(8));
        std::vector<double> xs, ys;
        double x = 0;
        for (int i = 0; i < n; ++i) {
            xs.push_back(x);
            ys.push_back(rng.uniform(-10, 10));
            x += rng.uniform(0.5, 2.0);
        }
        const auto s = CubicSpline::fit(xs, ys);
        const double h = 1e-5;
        for (int i = 1; i + 1 < n; ++i) {
            const double left = (s.eval(xs[i]) - s.eval(xs[i] - h)) / h;
            const double right = (s.eval(xs[i] + h) - s.eval(xs[i])) / h;
            const double scale = std::max(1.0, std::abs(left));
            CHECK(std::abs(left - right) / scale <= 1e-3);
            CHECK(std::abs(s.deriv2(xs[i] - 1e-12) - s.deriv2(xs[i])) <= 1e-6);
        }
    }
}

TEST_CASE("rejects bad inputs") {
    CHECK_THROWS_AS(CubicSpline::fit(std::vector<double>{0}, std::vector<double>{1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CubicSpline::fit(std::vector<double>{0, 0}, std::vector<double>{1, 2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CubicSpline::fit(std::vector<double>{1, 0}, std::vector<double>{1, 2}),
                    std::invalid_argument);
    const auto s = CubicSpline::fit(std::vector<double>{0, 1}, std::vector<double>{0, 1});
    CHECK_THROWS_AS(s.eval(-0.1), std::domain_error);
    CHECK_THROWS_AS(s.eval(1.1), std::domain_error);
}
