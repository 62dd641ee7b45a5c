#include <doctest.h>

#include <cmath>

#include "purcell/lineshape.hpp"
#include "test_support.hpp"

using namespace purcell;
using testsupport::linspace;
using testsupport::trapezoid;

TEST_CASE("Lorentzian peak value is 2 area / (pi fwhm)") {
    const LineShape l(LineKind::Lorentzian, 459.11, 2.87, 1.7);
    CHECK(l(l.center) == doctest::Approx(2.0 * l.area / (M_PI * l.fwhm)).epsilon(1e-14));
}

TEST_CASE("Gaussian half maximum at center +/- fwhm/2") {
    const LineShape g(LineKind::Gaussian, 470.6, 0.25, 3.0);
    const double peak = g(g.center);
    CHECK(g(g.center + 0.5 * g.fwhm) == doctest::Approx(0.5 * peak).epsilon(1e-12));
    CHECK(g(g.center - 0.5 * g.fwhm) == doctest::Approx(0.5 * peak).epsilon(1e-12));
}

TEST_CASE("profiles integrate to area over +/-20 fwhm") {
    // The +/-20 fwhm window carries all of a Gaussian but only
    // (2/pi) atan(40) of a Lorentzian; the quadrature itself must be
    // accurate to 0.1% against the captured mass.
    const double lorentz_capture = 2.0 / M_PI * std::atan(40.0);
    for (double fwhm : {1e-3, 1.0, 250e-3, 1e3}) {
        const double center = std::max(10.0, 40.0 * fwhm);
        for (auto kind : {LineKind::Lorentzian, LineKind::Gaussian}) {
            const LineShape l(kind, center, fwhm, 2.5);
            auto grid = linspace(center - 20.0 * fwhm, center + 20.0 * fwhm, 40001);
            const auto vals = evaluate_lineshape(l, grid);
            const double integral = trapezoid(grid, vals);
            const double expected =
                l.area * (kind == LineKind::Lorentzian ? lorentz_capture : 1.0);
            CHECK(integral == doctest::Approx(expected).epsilon(1e-3));
        }
    }
}

TEST_CASE("invalid parameters rejected") {
    CHECK_THROWS_AS(LineShape(LineKind::Lorentzian, 470.0, 0.0, 1.0), precondition_error);
    CHECK_THROWS_AS(LineShape(LineKind::Lorentzian, 470.0, -1.0, 1.0), precondition_error);
    CHECK_THROWS_AS(LineShape(LineKind::Lorentzian, 0.0, 1.0, 1.0), precondition_error);
    CHECK_THROWS_AS(LineShape(LineKind::Gaussian, 470.0, 1.0, -0.1), precondition_error);
}

TEST_CASE("evaluate_lineshape rejects bad grids") {
    const LineShape l(LineKind::Lorentzian, 470.0, 1.0, 1.0);
    CHECK_THROWS_AS(evaluate_lineshape(l, {}), precondition_error);
    CHECK_THROWS_AS(evaluate_lineshape(l, {470.0, std::nan("")}), precondition_error);
}
