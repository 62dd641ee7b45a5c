#pragma once

#include <cmath>

#include "purcell/errors.hpp"

namespace purcell {

// Speed of light in nm*THz (equivalently m/s * 1e-3); exact by SI definition.
inline constexpr double speed_of_light_nm_thz = 299792.458;

/// nu = c / lambda. Input in nanometers, output in terahertz.
inline double wavelength_to_frequency(double lambda_nm) {
    if (!(lambda_nm > 0.0)) {
        throw precondition_error("wavelength_to_frequency: wavelength must be positive");
    }
    return speed_of_light_nm_thz / lambda_nm;
}

/// lambda = c / nu. Input in terahertz, output in nanometers.
inline double frequency_to_wavelength(double nu_thz) {
    if (!(nu_thz > 0.0)) {
        throw precondition_error("frequency_to_wavelength: frequency must be positive");
    }
    return speed_of_light_nm_thz / nu_thz;
}

/// Decay-rate conversion: excited-state lifetime (ns) to a nu-convention
/// rate in THz, i.e. the FWHM contribution 1/(2*pi*tau) of the transition.
inline double lifetime_ns_to_rate_thz(double tau_ns) {
    if (!(tau_ns > 0.0)) {
        throw precondition_error("lifetime_ns_to_rate_thz: lifetime must be positive");
    }
    return 1.0 / (2.0 * M_PI * tau_ns * 1e3);  // ns -> ps
}

}  // namespace purcell
