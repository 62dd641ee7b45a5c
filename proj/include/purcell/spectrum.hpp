#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "purcell/errors.hpp"
#include "purcell/units.hpp"

namespace purcell {

/// Sampled photoluminescence intensity versus wavelength. Wavelengths are
/// strictly increasing; intensities are arbitrary units. Negative samples are
/// rejected on ingest unless allow_negative is set (residual spectra).
class Spectrum {
  public:
    Spectrum(std::vector<double> wavelengths_nm, std::vector<double> intensities,
             std::string label = {}, bool allow_negative = false)
        : wl_(std::move(wavelengths_nm)),
          in_(std::move(intensities)),
          label_(std::move(label)),
          allow_negative_(allow_negative) {
        validate();
    }

    const std::vector<double>& wavelengths() const { return wl_; }
    const std::vector<double>& intensities() const { return in_; }
    const std::string& label() const { return label_; }
    bool allow_negative() const { return allow_negative_; }
    std::size_t size() const { return wl_.size(); }
    double min_wavelength() const { return wl_.front(); }
    double max_wavelength() const { return wl_.back(); }

    bool covers(double lo_nm, double hi_nm) const {
        return lo_nm >= wl_.front() && hi_nm <= wl_.back();
    }

  private:
    void validate() const {
        if (wl_.size() < 2) throw precondition_error("Spectrum: need at least 2 samples");
        if (wl_.size() != in_.size())
            throw precondition_error("Spectrum: wavelength/intensity length mismatch");
        for (std::size_t i = 0; i < wl_.size(); ++i) {
            if (!std::isfinite(wl_[i]) || !std::isfinite(in_[i]))
                throw precondition_error("Spectrum: non-finite sample at index " +
                                         std::to_string(i));
            if (wl_[i] <= 0.0)
                throw precondition_error("Spectrum: non-positive wavelength at index " +
                                         std::to_string(i));
            if (!allow_negative_ && in_[i] < 0.0)
                throw precondition_error("Spectrum: negative intensity at index " +
                                         std::to_string(i));
            if (i > 0 && wl_[i] <= wl_[i - 1])
                throw precondition_error(
                    "Spectrum: wavelengths not strictly increasing at index " +
                    std::to_string(i));
        }
    }

    std::vector<double> wl_;
    std::vector<double> in_;
    std::string label_;
    bool allow_negative_ = false;
};

/// Linear interpolation of one sample; lambda must lie within the grid.
inline double interpolate(const Spectrum& s, double lambda_nm) {
    const auto& wl = s.wavelengths();
    if (lambda_nm < wl.front() || lambda_nm > wl.back())
        throw range_error("interpolate: wavelength outside spectrum range");
    auto it = std::lower_bound(wl.begin(), wl.end(), lambda_nm);
    if (it == wl.begin()) return s.intensities().front();
    const std::size_t hi = static_cast<std::size_t>(it - wl.begin());
    const std::size_t lo = hi - 1;
    const double t = (lambda_nm - wl[lo]) / (wl[hi] - wl[lo]);
    return (1.0 - t) * s.intensities()[lo] + t * s.intensities()[hi];
}

/// Resample onto a new wavelength grid (must be inside the spectrum range).
inline Spectrum resample(const Spectrum& s, const std::vector<double>& grid_nm) {
    if (grid_nm.empty()) throw precondition_error("resample: empty grid");
    std::vector<double> out;
    out.reserve(grid_nm.size());
    for (double l : grid_nm) out.push_back(interpolate(s, l));
    return Spectrum(grid_nm, std::move(out), s.label(), s.allow_negative());
}

/// Trapezoidal integral of intensity over frequency (THz) restricted to the
/// wavelength window [lo_nm, hi_nm]. Window edges are interpolated so the
/// result is exact for piecewise-linear data.
inline double integrate_window_thz(const Spectrum& s, double lo_nm, double hi_nm) {
    if (hi_nm <= lo_nm) throw precondition_error("integrate_window_thz: hi <= lo");
    if (!s.covers(lo_nm, hi_nm))
        throw range_error("integrate_window_thz: window outside spectrum range");
    const auto& wl = s.wavelengths();
    const auto& in = s.intensities();

    std::vector<double> lam{lo_nm}, val{interpolate(s, lo_nm)};
    for (std::size_t i = 0; i < wl.size(); ++i) {
        if (wl[i] > lo_nm && wl[i] < hi_nm) {
            lam.push_back(wl[i]);
            val.push_back(in[i]);
        }
    }
    lam.push_back(hi_nm);
    val.push_back(interpolate(s, hi_nm));

    // Frequency decreases with wavelength; accumulate |d nu| so the result is
    // positive for positive intensity.
    double acc = 0.0;
    for (std::size_t i = 1; i < lam.size(); ++i) {
        const double nu_a = wavelength_to_frequency(lam[i - 1]);
        const double nu_b = wavelength_to_frequency(lam[i]);
        acc += 0.5 * (val[i - 1] + val[i]) * (nu_a - nu_b);
    }
    return acc;
}

/// Trapezoidal integral over the full spectrum, frequency domain.
inline double integrate_thz(const Spectrum& s) {
    return integrate_window_thz(s, s.min_wavelength(), s.max_wavelength());
}

/// Parse the CSV spectrum format: header `wavelength_nm,intensity`, one
/// sample per row. Errors carry 1-based line numbers.
inline Spectrum read_spectrum_csv(std::istream& is, std::string label = {},
                                  bool allow_negative = false) {
    std::string line;
    if (!std::getline(is, line))
        throw precondition_error("spectrum CSV: empty file");
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "wavelength_nm,intensity")
        throw precondition_error("spectrum CSV line 1: expected header "
                                 "'wavelength_nm,intensity', got '" + line + "'");
    std::vector<double> wl, in;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw precondition_error("spectrum CSV line " + std::to_string(lineno) +
                                     ": missing comma");
        try {
            std::size_t used = 0;
            const double l = std::stod(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("trailing");
            const std::string rest = line.substr(comma + 1);
            const double v = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing");
            wl.push_back(l);
            in.push_back(v);
        } catch (const std::exception&) {
            throw precondition_error("spectrum CSV line " + std::to_string(lineno) +
                                     ": malformed number in '" + line + "'");
        }
    }
    try {
        return Spectrum(std::move(wl), std::move(in), std::move(label), allow_negative);
    } catch (const precondition_error& e) {
        throw precondition_error("spectrum CSV: " + std::string(e.what()));
    }
}

inline Spectrum read_spectrum_csv_file(const std::string& path, bool allow_negative = false) {
    std::ifstream f(path);
    if (!f) throw precondition_error("cannot open spectrum file: " + path);
    return read_spectrum_csv(f, path, allow_negative);
}

inline void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
    os << "wavelength_nm,intensity\n";
    os.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s.wavelengths()[i] << ',' << s.intensities()[i] << '\n';
}

}  // namespace purcell
