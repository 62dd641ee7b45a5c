#include <doctest.h>

#include <cmath>
#include <random>

#include "purcell/coupling.hpp"
#include "test_support.hpp"

using namespace purcell;
using testsupport::linspace;

namespace {

EmitterModel reference_model() {
    return load_emitter_model(testsupport::reference_model_path());
}

const CavityMode c1{653.0, 160.0, 1.1, 2.4, "c1"};

}  // namespace

TEST_CASE("ideal Purcell factor") {
    CHECK(ideal_purcell(c1) == doctest::Approx(11.06).epsilon(1e-3));
    const CavityMode unit(653.0, 4.0 * M_PI * M_PI / 3.0, 1.0);
    CHECK(ideal_purcell(unit) == doctest::Approx(1.0).epsilon(1e-14));
    const CavityMode doubled(653.0, 320.0, 1.1);
    CHECK(ideal_purcell(doubled) == doctest::Approx(2.0 * ideal_purcell(c1)).epsilon(1e-14));
    // Scale invariance: Q -> 2Q, V -> 2V.
    const CavityMode scaled(653.0, 320.0, 2.2);
    CHECK(ideal_purcell(scaled) == doctest::Approx(ideal_purcell(c1)).epsilon(1e-14));
}

TEST_CASE("line coupling rate limits") {
    SUBCASE("far-detuned line decouples") {
        auto sys = testsupport::single_line_system(0.05, 2.0, 0.01, 0.0, 5000.0);
        CHECK(line_coupling_rate(sys.emitter.transitions[0], sys.emitter, sys.cavity) <
              1e-8);
    }
    SUBCASE("resonant dephasing-free line reproduces the ideal Purcell factor") {
        const double kappa = 2.0, gamma = 1e-4;
        auto sys = testsupport::single_line_system(0.05, kappa, gamma, 0.0, 0.0);
        const double r = line_coupling_rate(sys.emitter.transitions[0], sys.emitter,
                                            sys.cavity);
        const double f_p = ideal_purcell(sys.cavity);
        CHECK(std::abs(r / gamma - f_p) / f_p <= 1.1 * gamma / kappa);
    }
    SUBCASE("dipole overlap enters quadratically") {
        auto sys = testsupport::single_line_system(0.05, 2.0, 0.01, 0.5, 0.3);
        const double full = line_coupling_rate(sys.emitter.transitions[0], sys.emitter,
                                               sys.cavity);
        sys.emitter.dipole_overlap = 0.5;
        const double half = line_coupling_rate(sys.emitter.transitions[0], sys.emitter,
                                               sys.cavity);
        CHECK(half == doctest::Approx(0.25 * full).epsilon(1e-12));
    }
}

TEST_CASE("generalized Purcell factor") {
    auto model = reference_model();

    SUBCASE("zero dipole overlap decouples everything") {
        model.dipole_overlap = 0.0;
        const auto r = generalized_purcell(model, c1);
        CHECK(r.f_star == 0.0);
        CHECK(r.beta == 0.0);
    }
    SUBCASE("paper operating point") {
        const auto r = generalized_purcell(model, c1);
        CHECK(1.0 + r.f_star == doctest::Approx(1.7).epsilon(0.15 / 1.7));
        CHECK(r.beta == doctest::Approx(0.42).epsilon(0.04 / 0.42));
        // Consistency of the quoted numbers themselves.
        CHECK(0.7 / 1.7 == doctest::Approx(0.42).epsilon(0.01 / 0.42));
    }
    SUBCASE("beta and per-line identities hold to 1e-12") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> lam(620.0, 720.0);
        for (int i = 0; i < 50; ++i) {
            const auto r = generalized_purcell(model, c1.tuned_to(lam(rng)));
            CHECK(std::abs(r.beta - r.f_star / (1.0 + r.f_star)) <= 1e-12);
            double sum = 0.0;
            for (const auto& [idx, c] : r.per_line) {
                CHECK(c >= 0.0);
                sum += c;
            }
            CHECK(std::abs(sum - r.f_star) <= 1e-12 * std::max(1.0, r.f_star));
        }
    }
}

TEST_CASE("sweep over cavity wavelength") {
    const auto model = reference_model();
    auto grid = linspace(620.0, 700.0, 161);
    const auto sweep = sweep_purcell(model, c1, grid);
    REQUIRE(sweep.size() == grid.size());

    SUBCASE("peaks at the ZPL") {
        std::size_t best = 0;
        for (std::size_t i = 1; i < sweep.size(); ++i)
            if (sweep[i].f_star > sweep[best].f_star) best = i;
        CHECK(std::abs(grid[best] - 637.0) <= 0.5 + 1e-9);
    }
    SUBCASE("non-negative, decomposition exact, decreasing past the last line") {
        for (const auto& r : sweep) {
            CHECK(r.f_star >= 0.0);
            double sum = 0.0;
            for (const auto& [idx, c] : r.per_line) sum += c;
            CHECK(std::abs(sum - r.f_star) <= 1e-12 * std::max(1.0, r.f_star));
        }
        auto red = linspace(840.0, 1000.0, 17);
        const auto tail = sweep_purcell(model, c1, red);
        for (std::size_t i = 1; i < tail.size(); ++i)
            CHECK(tail[i].f_star < tail[i - 1].f_star);
    }
    SUBCASE("far red tail is negligible") {
        const auto far = generalized_purcell(model, c1.tuned_to(900.0));
        CHECK(far.f_star < 0.01);
    }
    SUBCASE("one-point grid equals the single call") {
        const auto one = sweep_purcell(model, c1, {653.0});
        const auto direct = generalized_purcell(model, c1);
        CHECK(one[0].f_star == direct.f_star);
        CHECK(one[0].beta == direct.beta);
    }
    SUBCASE("grid must be increasing") {
        CHECK_THROWS_AS(sweep_purcell(model, c1, {700.0, 650.0}), precondition_error);
    }
}

TEST_CASE("intensity enhancement") {
    CHECK(intensity_enhancement(0.7, 0.29) == doctest::Approx(1.203).epsilon(1e-3));
    CHECK(intensity_enhancement(0.0, 0.5) == 1.0);
    CHECK(intensity_enhancement(1.0, 1.0) == 2.0);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> f(0.0, 10.0), e(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double fs = f(rng), ov = e(rng);
        const double v = intensity_enhancement(fs, ov);
        CHECK(v >= 1.0);
        CHECK((v == 1.0) == (fs * ov == 0.0));
    }
    CHECK_THROWS_AS(intensity_enhancement(-0.1, 0.5), precondition_error);
    CHECK_THROWS_AS(intensity_enhancement(0.5, 1.5), precondition_error);
}

TEST_CASE("overlap fraction") {
    const auto model = reference_model();
    CHECK(overlap_fraction(model, {0, 1, 2, 3, 4, 5, 6, 7}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(overlap_fraction(model, {}) == 0.0);
    CHECK(overlap_fraction(model, {1, 2}) == doctest::Approx(0.29).epsilon(0.03 / 0.29));
    CHECK_THROWS_AS(overlap_fraction(model, {99}), precondition_error);
}

TEST_CASE("measured enhancement from spectra") {
    auto grid = linspace(600.0, 700.0, 2001);
    std::vector<double> flat(grid.size(), 1.0);
    const Spectrum bare(grid, flat, "bare");

    SUBCASE("identity and scaling") {
        CHECK(measured_enhancement(bare, bare, 640.0, 660.0) == doctest::Approx(1.0));
        std::vector<double> scaled(grid.size(), 1.24);
        const Spectrum coupled(grid, scaled);
        CHECK(measured_enhancement(coupled, bare, 640.0, 660.0) ==
              doctest::Approx(1.24).epsilon(1e-12));
    }
    SUBCASE("mode carrying 24% of the window intensity") {
        auto fine = linspace(600.0, 700.0, 8001);
        std::vector<double> base(fine.size(), 1.0);
        const Spectrum bare_fine(fine, base, "bare");
        const double window_integral = integrate_window_thz(bare_fine, 645.0, 661.0);
        const LineShape mode(LineKind::Lorentzian, wavelength_to_frequency(653.0), 0.2,
                             0.24 * window_integral);
        std::vector<double> in(fine.size());
        std::vector<double> mode_only(fine.size());
        for (std::size_t i = 0; i < fine.size(); ++i) {
            mode_only[i] = mode(wavelength_to_frequency(fine[i]));
            in[i] = 1.0 + mode_only[i];
        }
        const Spectrum coupled(fine, in, "coupled");
        const Spectrum mode_spec(fine, mode_only, "mode");
        // Exact linearity against the sampled mode mass in the window.
        const double expected =
            1.0 + integrate_window_thz(mode_spec, 645.0, 661.0) / window_integral;
        const double got = measured_enhancement(coupled, bare_fine, 645.0, 661.0);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
        // And close to the nominal 24% figure up to the Lorentzian tails.
        CHECK(got == doctest::Approx(1.24).epsilon(0.02 / 1.24));
    }
    SUBCASE("zero bare integral is an error") {
        std::vector<double> zeros(grid.size(), 0.0);
        const Spectrum dark(grid, zeros);
        CHECK_THROWS_AS(measured_enhancement(bare, dark, 640.0, 660.0), numerical_error);
    }
}

TEST_CASE("measured efficiency from the mode area") {
    auto grid = linspace(600.0, 706.0, 4001);
    const CavityMode narrow(653.0, 10000.0, 1.1, 2.4, "hiQ");

    SUBCASE("zero amplitude") {
        std::vector<double> flat(grid.size(), 1.0);
        const Spectrum s(grid, flat);
        CHECK(measured_efficiency(s, narrow, 0.0) == 0.0);
    }
    SUBCASE("31% of total area in the mode") {
        std::vector<double> flat(grid.size(), 1.0);
        const Spectrum bare(grid, flat);
        const double bare_total = integrate_thz(bare);
        const double mode_area = bare_total * 0.31 / 0.69;
        const LineShape mode(LineKind::Lorentzian, narrow.nu_c(), narrow.kappa(), mode_area);
        std::vector<double> in(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            in[i] = 1.0 + mode(wavelength_to_frequency(grid[i]));
        const Spectrum coupled(grid, in);
        CHECK(measured_efficiency(coupled, narrow, mode_area) ==
              doctest::Approx(0.31).epsilon(1e-3 / 0.31));
    }
    SUBCASE("mode carrying everything") {
        const LineShape mode(LineKind::Lorentzian, narrow.nu_c(), narrow.kappa(), 5.0);
        std::vector<double> in(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            in[i] = mode(wavelength_to_frequency(grid[i]));
        const Spectrum coupled(grid, in);
        CHECK(measured_efficiency(coupled, narrow, 5.0) == doctest::Approx(1.0).epsilon(3e-3));
    }
    SUBCASE("zero total intensity is an error") {
        std::vector<double> zeros(grid.size(), 0.0);
        const Spectrum dark(grid, zeros);
        CHECK_THROWS_AS(measured_efficiency(dark, narrow, 1.0), numerical_error);
    }
}

TEST_CASE("emitter model validation") {
    auto model = reference_model();
    CHECK(model.transitions.size() == 8);
    SUBCASE("branching sum enforced") {
        model.transitions[0].branching += 1e-6;
        CHECK_THROWS_AS(model.validate(), precondition_error);
    }
    SUBCASE("descending centers enforced") {
        std::swap(model.transitions[0], model.transitions[1]);
        CHECK_THROWS_AS(model.validate(), precondition_error);
    }
    SUBCASE("ground relaxation zero iff ZPL") {
        model.transitions[0].ground_relaxation = 0.1;
        CHECK_THROWS_AS(model.validate(), precondition_error);
    }
    SUBCASE("shared dephasing constructor") {
        auto ts = model.transitions;
        const auto shared = EmitterModel::with_shared_dephasing(ts, model.gamma_total, 2.5);
        for (const auto& t : shared.transitions) CHECK(t.dephasing == 2.5);
    }
}
