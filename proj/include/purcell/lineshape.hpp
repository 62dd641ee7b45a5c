#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "purcell/errors.hpp"

namespace purcell {

enum class LineKind { Lorentzian, Gaussian };

inline std::string to_string(LineKind k) {
    return k == LineKind::Lorentzian ? "lorentzian" : "gaussian";
}

inline LineKind line_kind_from_string(const std::string& s) {
    if (s == "lorentzian") return LineKind::Lorentzian;
    if (s == "gaussian") return LineKind::Gaussian;
    throw precondition_error("unknown line kind: " + s);
}

/// One spectral component, area-normalized. center and fwhm in THz, area in
/// arbitrary-units*THz.
struct LineShape {
    LineKind kind = LineKind::Lorentzian;
    double center = 0.0;
    double fwhm = 0.0;
    double area = 0.0;

    LineShape() = default;
    LineShape(LineKind k, double c, double w, double a)
        : kind(k), center(c), fwhm(w), area(a) {
        if (!(fwhm > 0.0)) throw precondition_error("LineShape: fwhm must be > 0");
        if (!(center > 0.0)) throw precondition_error("LineShape: center must be > 0");
        if (area < 0.0) throw precondition_error("LineShape: area must be >= 0");
    }

    double operator()(double nu_thz) const {
        const double d = nu_thz - center;
        if (kind == LineKind::Lorentzian) {
            const double h = 0.5 * fwhm;
            return (area / M_PI) * h / (d * d + h * h);
        }
        static const double ln2 = std::log(2.0);
        return area * std::exp(-4.0 * ln2 * d * d / (fwhm * fwhm)) *
               (2.0 / fwhm) * std::sqrt(ln2 / M_PI);
    }

    double peak_value() const { return (*this)(center); }
};

inline std::vector<double> evaluate_lineshape(const LineShape& line,
                                              const std::vector<double>& grid_thz) {
    if (grid_thz.empty()) throw precondition_error("evaluate_lineshape: empty grid");
    std::vector<double> out;
    out.reserve(grid_thz.size());
    for (double nu : grid_thz) {
        if (!std::isfinite(nu))
            throw precondition_error("evaluate_lineshape: non-finite grid point");
        out.push_back(line(nu));
    }
    return out;
}

}  // namespace purcell
