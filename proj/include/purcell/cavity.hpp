#pragma once

#include <cmath>
#include <string>

#include "purcell/errors.hpp"
#include "purcell/units.hpp"

namespace purcell {

/// One optical cavity mode. mode_volume is dimensionless, in units of
/// (lambda/n)^3. The energy-decay FWHM kappa is always derived as nu_c/Q.
struct CavityMode {
    double lambda_c = 0.0;       // nm
    double q_factor = 0.0;       // dimensionless
    double mode_volume = 0.0;    // (lambda/n)^3 units
    double refractive_index = 2.4;
    std::string label;

    CavityMode() = default;
    CavityMode(double lambda_nm, double q, double v_tilde, double n = 2.4,
               std::string lab = {})
        : lambda_c(lambda_nm), q_factor(q), mode_volume(v_tilde),
          refractive_index(n), label(std::move(lab)) {
        if (!(lambda_c > 0.0)) throw precondition_error("CavityMode: lambda_c must be > 0");
        if (!(q_factor > 0.0)) throw precondition_error("CavityMode: Q must be > 0");
        if (!(mode_volume > 0.0)) throw precondition_error("CavityMode: V must be > 0");
        if (!(refractive_index > 1.0))
            throw precondition_error("CavityMode: refractive index must be > 1");
    }

    double nu_c() const { return wavelength_to_frequency(lambda_c); }
    double kappa() const { return nu_c() / q_factor; }

    CavityMode tuned_to(double lambda_nm) const {
        CavityMode m = *this;
        m.lambda_c = lambda_nm;
        if (!(m.lambda_c > 0.0)) throw precondition_error("CavityMode: lambda_c must be > 0");
        return m;
    }
};

/// Ideal (narrow-line, resonant) Purcell factor F_P = (3/4pi^2) Q/V with V in
/// (lambda/n)^3 units.
inline double ideal_purcell(const CavityMode& cavity) {
    return 3.0 / (4.0 * M_PI * M_PI) * cavity.q_factor / cavity.mode_volume;
}

}  // namespace purcell
