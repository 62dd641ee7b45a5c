#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "purcell/cavity.hpp"
#include "purcell/emitter.hpp"
#include "purcell/errors.hpp"
#include "purcell/lineshape.hpp"
#include "purcell/spectrum.hpp"

namespace purcell {

/// Generalized Purcell factor and emission efficiency at one cavity
/// wavelength, with the per-line decomposition F* = sum of contributions.
struct CouplingResult {
    double f_star = 0.0;
    double beta = 0.0;
    std::vector<std::pair<int, double>> per_line;
    double lambda_c = 0.0;  // nm
};

/// Bad-cavity emission rate of line i into the mode (THz):
///   R_i = xi^2 * 4 g_i^2 / (kappa + Gamma_i) * 1 / (1 + (2 delta_i / (kappa + Gamma_i))^2)
/// with Gamma_i the total homogeneous FWHM of the line and
/// g_i^2 = branching_i * F_P * kappa * gamma / 4, so that a resonant
/// dephasing-free line reproduces the ideal Purcell factor.
inline double line_coupling_rate(const Transition& t, const EmitterModel& emitter,
                                 const CavityMode& cavity) {
    const double kappa = cavity.kappa();
    const double gamma_line = emitter.gamma_total + t.dephasing + t.ground_relaxation;
    const double width = kappa + gamma_line;
    const double delta = t.center - cavity.nu_c();
    const double g_max_sq = ideal_purcell(cavity) * kappa * emitter.gamma_total / 4.0;
    const double g_sq = t.branching * g_max_sq;
    const double xi = emitter.dipole_overlap;
    const double x = 2.0 * delta / width;
    return xi * xi * 4.0 * g_sq / width / (1.0 + x * x);
}

/// F* = sum_i R_i / gamma_total; beta = F*/(1+F*).
inline CouplingResult generalized_purcell(const EmitterModel& emitter,
                                          const CavityMode& cavity) {
    emitter.validate();
    CouplingResult r;
    r.lambda_c = cavity.lambda_c;
    r.per_line.reserve(emitter.transitions.size());
    for (const auto& t : emitter.transitions) {
        const double contrib = line_coupling_rate(t, emitter, cavity) / emitter.gamma_total;
        r.per_line.emplace_back(t.index, contrib);
        r.f_star += contrib;
    }
    r.beta = r.f_star / (1.0 + r.f_star);
    return r;
}

/// Sweep the cavity wavelength across a grid, holding Q and the mode volume
/// fixed (kappa = nu_c/Q follows the tuning). Grid points are independent.
inline std::vector<CouplingResult> sweep_purcell(const EmitterModel& emitter,
                                                 const CavityMode& cavity_template,
                                                 const std::vector<double>& lambda_grid_nm) {
    if (lambda_grid_nm.empty()) throw precondition_error("sweep_purcell: empty grid");
    for (std::size_t i = 1; i < lambda_grid_nm.size(); ++i)
        if (lambda_grid_nm[i] <= lambda_grid_nm[i - 1])
            throw precondition_error("sweep_purcell: grid must be strictly increasing");
    std::vector<CouplingResult> out;
    out.reserve(lambda_grid_nm.size());
    for (double lam : lambda_grid_nm)
        out.push_back(generalized_purcell(emitter, cavity_template.tuned_to(lam)));
    return out;
}

/// I_on/I_off = 1 + F* e, where e is the emission fraction overlapping the mode.
inline double intensity_enhancement(double f_star, double e_overlap) {
    if (f_star < 0.0) throw precondition_error("intensity_enhancement: F* must be >= 0");
    if (e_overlap < 0.0 || e_overlap > 1.0)
        throw precondition_error("intensity_enhancement: e must be in [0,1]");
    return 1.0 + f_star * e_overlap;
}

/// Experimental enhancement: ratio of window-integrated intensities
/// (trapezoidal, frequency domain) of the coupled and bare spectra.
inline double measured_enhancement(const Spectrum& coupled, const Spectrum& bare,
                                   double window_lo_nm, double window_hi_nm) {
    const double on = integrate_window_thz(coupled, window_lo_nm, window_hi_nm);
    const double off = integrate_window_thz(bare, window_lo_nm, window_hi_nm);
    if (off == 0.0) throw numerical_error("measured_enhancement: zero bare integral");
    return on / off;
}

/// Experimental emission efficiency: fraction of the total integrated
/// intensity carried by the cavity-mode Lorentzian of the given area.
inline double measured_efficiency(const Spectrum& coupled, const CavityMode& mode,
                                  double mode_amplitude) {
    if (!coupled.covers(mode.lambda_c, mode.lambda_c))
        throw range_error("measured_efficiency: mode outside spectrum range");
    if (mode_amplitude < 0.0)
        throw precondition_error("measured_efficiency: negative mode amplitude");
    const double total = integrate_thz(coupled);
    if (total == 0.0) throw numerical_error("measured_efficiency: zero total intensity");
    return mode_amplitude / total;
}

}  // namespace purcell
