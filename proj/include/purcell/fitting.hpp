#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "purcell/cavity.hpp"
#include "purcell/errors.hpp"
#include "purcell/lineshape.hpp"
#include "purcell/spectrum.hpp"

namespace purcell {

enum class BackgroundKind { None, Constant, Linear };

inline std::string to_string(BackgroundKind k) {
    switch (k) {
        case BackgroundKind::None: return "none";
        case BackgroundKind::Constant: return "constant";
        default: return "linear";
    }
}

inline BackgroundKind background_kind_from_string(const std::string& s) {
    if (s == "none") return BackgroundKind::None;
    if (s == "constant") return BackgroundKind::Constant;
    if (s == "linear") return BackgroundKind::Linear;
    throw precondition_error("unknown background kind: " + s);
}

/// Background polynomial in frequency, expanded around a reference frequency
/// for conditioning: value = c0 + c1 * (nu - nu_ref).
struct BackgroundModel {
    BackgroundKind kind = BackgroundKind::None;
    std::vector<double> coefficients;
    double nu_ref = 0.0;

    std::size_t parameter_count() const {
        switch (kind) {
            case BackgroundKind::None: return 0;
            case BackgroundKind::Constant: return 1;
            default: return 2;
        }
    }

    double operator()(double nu_thz) const {
        if (kind == BackgroundKind::None) return 0.0;
        if (kind == BackgroundKind::Constant) return coefficients.at(0);
        return coefficients.at(0) + coefficients.at(1) * (nu_thz - nu_ref);
    }
};

struct FitConfig {
    int max_iterations = 200;
    double convergence_tol = 1e-10;   // relative chi^2 change
    double damping_init = 1e-3;
    // Optional per-parameter bounds, in the packed parameter order
    // (center, fwhm, area per line, then background coefficients).
    std::vector<std::optional<std::pair<double, double>>> bounds;

    void validate() const {
        if (max_iterations < 1) throw precondition_error("FitConfig: max_iterations >= 1");
        if (!(convergence_tol > 0.0))
            throw precondition_error("FitConfig: convergence_tol must be > 0");
    }
};

struct FitResult {
    std::vector<LineShape> lines;
    BackgroundModel background;
    double chi2 = 0.0;
    int iterations = 0;
    Eigen::MatrixXd covariance;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Thrown when the damped normal equations stay singular after escalation;
/// carries the last accepted iterate.
struct fit_failure_error : numerical_error {
    fit_failure_error(const std::string& msg, FitResult last_iterate)
        : numerical_error(msg), last(std::move(last_iterate)) {}
    FitResult last;
};

namespace detail {

// Packed parameter layout: 3 per line (center, fwhm, area) + background.
struct PeakModel {
    std::vector<LineKind> kinds;
    BackgroundKind bg_kind;
    double nu_ref;

    std::size_t parameter_count() const {
        return 3 * kinds.size() +
               BackgroundModel{bg_kind, {}, 0.0}.parameter_count();
    }

    void unpack(const Eigen::VectorXd& p, std::vector<LineShape>& lines,
                BackgroundModel& bg) const {
        lines.clear();
        for (std::size_t i = 0; i < kinds.size(); ++i)
            lines.push_back(LineShape(kinds[i], p[3 * i], p[3 * i + 1],
                                      std::max(0.0, p[3 * i + 2])));
        bg.kind = bg_kind;
        bg.nu_ref = nu_ref;
        bg.coefficients.assign(p.data() + 3 * kinds.size(), p.data() + p.size());
    }

    double value(const Eigen::VectorXd& p, double nu) const {
        double v = 0.0;
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            const double c = p[3 * i], w = p[3 * i + 1], a = p[3 * i + 2];
            const double d = nu - c;
            if (kinds[i] == LineKind::Lorentzian) {
                const double h = 0.5 * w;
                v += (a / M_PI) * h / (d * d + h * h);
            } else {
                static const double ln2 = std::log(2.0);
                v += a * std::exp(-4.0 * ln2 * d * d / (w * w)) * (2.0 / w) *
                     std::sqrt(ln2 / M_PI);
            }
        }
        if (bg_kind == BackgroundKind::Constant) v += p[p.size() - 1];
        if (bg_kind == BackgroundKind::Linear)
            v += p[p.size() - 2] + p[p.size() - 1] * (nu - nu_ref);
        return v;
    }

    // Analytic partial derivatives of the model at nu into row.
    void gradient(const Eigen::VectorXd& p, double nu,
                  Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            const double c = p[3 * i], w = p[3 * i + 1], a = p[3 * i + 2];
            const double d = nu - c;
            if (kinds[i] == LineKind::Lorentzian) {
                const double h = 0.5 * w;
                const double den = d * d + h * h;
                row[3 * i] = (a / M_PI) * h * 2.0 * d / (den * den);
                row[3 * i + 1] = (a / (2.0 * M_PI)) * (d * d - h * h) / (den * den);
                row[3 * i + 2] = (1.0 / M_PI) * h / den;
            } else {
                static const double ln2 = std::log(2.0);
                const double u = 4.0 * ln2 * d * d / (w * w);
                const double norm = (2.0 / w) * std::sqrt(ln2 / M_PI);
                const double g = std::exp(-u) * norm;
                row[3 * i] = a * g * 8.0 * ln2 * d / (w * w);
                row[3 * i + 1] = a * g * (-1.0 / w + 8.0 * ln2 * d * d / (w * w * w));
                row[3 * i + 2] = g;
            }
        }
        if (bg_kind == BackgroundKind::Constant) row[p.size() - 1] = 1.0;
        if (bg_kind == BackgroundKind::Linear) {
            row[p.size() - 2] = 1.0;
            row[p.size() - 1] = nu - nu_ref;
        }
    }
};

inline void clamp_parameters(Eigen::VectorXd& p, const FitConfig& config,
                             std::size_t n_lines) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (static_cast<std::size_t>(i) < config.bounds.size() && config.bounds[i]) {
            p[i] = std::clamp(p[i], config.bounds[i]->first, config.bounds[i]->second);
        }
    }
    // Physical floors: widths and areas cannot leave the valid domain.
    for (std::size_t i = 0; i < n_lines; ++i) {
        p[3 * i + 1] = std::max(p[3 * i + 1], 1e-12);
        p[3 * i + 2] = std::max(p[3 * i + 2], 0.0);
    }
}

}  // namespace detail

/// Damped Gauss-Newton (Levenberg-Marquardt) least-squares decomposition of a
/// spectrum into line shapes plus background. Residuals are defined on the
/// frequency grid of the spectrum's samples. Damping is multiplied by 10 on
/// a rejected step and by 0.1 on an accepted one; accepted steps never
/// increase chi^2.
inline FitResult fit_multipeak(const Spectrum& spectrum,
                               const std::vector<LineShape>& initial,
                               BackgroundKind background_kind,
                               const FitConfig& config = {}) {
    config.validate();
    if (initial.empty()) throw precondition_error("fit_multipeak: no initial lines");
    const double nu_min = wavelength_to_frequency(spectrum.max_wavelength());
    const double nu_max = wavelength_to_frequency(spectrum.min_wavelength());
    for (const auto& l : initial)
        if (l.center < nu_min || l.center > nu_max)
            throw precondition_error("fit_multipeak: initial center " +
                                     std::to_string(l.center) +
                                     " THz outside spectrum range");

    const std::size_t n = spectrum.size();
    Eigen::VectorXd nu(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        nu[i] = wavelength_to_frequency(spectrum.wavelengths()[i]);
        y[i] = spectrum.intensities()[i];
    }

    detail::PeakModel model;
    for (const auto& l : initial) model.kinds.push_back(l.kind);
    model.bg_kind = background_kind;
    model.nu_ref = nu.mean();

    const std::size_t np = model.parameter_count();
    Eigen::VectorXd p(np);
    for (std::size_t i = 0; i < initial.size(); ++i) {
        p[3 * i] = initial[i].center;
        p[3 * i + 1] = initial[i].fwhm;
        p[3 * i + 2] = initial[i].area;
    }
    for (std::size_t i = 3 * initial.size(); i < np; ++i) p[i] = 0.0;
    detail::clamp_parameters(p, config, initial.size());

    auto chi2_of = [&](const Eigen::VectorXd& q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = model.value(q, nu[i]) - y[i];
            acc += r * r;
        }
        return acc;
    };

    double lambda = config.damping_init;
    double chi2 = chi2_of(p);
    bool converged = false;
    int iter = 0;

    Eigen::MatrixXd jac(n, np);
    Eigen::VectorXd res(n);

    auto make_result = [&](const Eigen::VectorXd& q, double c2, int it, bool conv) {
        FitResult r;
        model.unpack(q, r.lines, r.background);
        r.chi2 = c2;
        r.iterations = it;
        r.converged = conv;
        // Covariance: sigma^2 (J^T J)^+ with sigma^2 = chi2 / (n - np).
        for (std::size_t i = 0; i < n; ++i) {
            model.gradient(q, nu[i], jac.row(i));
            res[i] = model.value(q, nu[i]) - y[i];
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const double dof = static_cast<double>(n > np ? n - np : 1);
        r.covariance = (c2 / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
        // Flag nearly degenerate peak pairs.
        for (std::size_t a = 0; a < r.lines.size(); ++a)
            for (std::size_t b = a + 1; b < r.lines.size(); ++b) {
                const double sep = std::abs(r.lines[a].center - r.lines[b].center);
                const double wmin = std::min(r.lines[a].fwhm, r.lines[b].fwhm);
                if (sep < 0.5 * wmin)
                    r.warnings.push_back("lines " + std::to_string(a) + " and " +
                                         std::to_string(b) + " overlap (separation " +
                                         std::to_string(sep) + " THz < fwhm/2)");
            }
        return r;
    };

    for (iter = 0; iter < config.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            model.gradient(p, nu[i], jac.row(i));
            res[i] = model.value(p, nu[i]) - y[i];
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = jtj;
            for (std::size_t k = 0; k < np; ++k)
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-30);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            Eigen::VectorXd step = ldlt.solve(-jtr);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                if (lambda > 1e12)
                    throw fit_failure_error(
                        "fit_multipeak: singular normal equations after damping escalation",
                        make_result(p, chi2, iter, false));
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd trial = p + step;
            detail::clamp_parameters(trial, config, initial.size());
            const double trial_chi2 = chi2_of(trial);
            if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
                const double rel = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
                p = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda * 0.1, 1e-14);
                accepted = true;
                if (rel < config.convergence_tol) converged = true;
            } else {
                if (lambda > 1e12)
                    throw fit_failure_error(
                        "fit_multipeak: no acceptable step after damping escalation",
                        make_result(p, chi2, iter, false));
                lambda *= 10.0;
            }
        }
        if (converged) {
            ++iter;
            break;
        }
    }
    return make_result(p, chi2, iter, converged);
}

/// Subtract known cavity-mode Lorentzians (center c/lambda_c, fwhm nu_c/Q)
/// with the given areas. The result may be negative and is flagged as such.
inline Spectrum subtract_cavity_modes(const Spectrum& spectrum,
                                      const std::vector<CavityMode>& modes,
                                      const std::vector<double>& amplitudes) {
    if (modes.size() != amplitudes.size())
        throw precondition_error("subtract_cavity_modes: modes/amplitudes length mismatch");
    for (const auto& m : modes)
        if (!spectrum.covers(m.lambda_c, m.lambda_c))
            throw precondition_error("subtract_cavity_modes: mode " + m.label +
                                     " outside spectrum range");
    std::vector<double> out = spectrum.intensities();
    for (std::size_t k = 0; k < modes.size(); ++k) {
        if (amplitudes[k] == 0.0) continue;
        const LineShape line(LineKind::Lorentzian, modes[k].nu_c(), modes[k].kappa(),
                             std::abs(amplitudes[k]));
        const double sign = amplitudes[k] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] -= sign * line(wavelength_to_frequency(spectrum.wavelengths()[i]));
    }
    return Spectrum(spectrum.wavelengths(), std::move(out), spectrum.label(),
                    /*allow_negative=*/true);
}

struct CountConfig {
    // Relative uncertainty of the single-emitter reference area.
    double reference_rel_sigma = 0.30;
};

struct EmitterCount {
    double count = 0.0;
    double count_sigma = 0.0;
};

/// Background-corrected window integral divided by the single-emitter
/// reference area. The background is estimated from the outer 10% of the
/// window on each side (linear or constant), then the corrected signal is
/// integrated over frequency.
inline EmitterCount count_emitters(const Spectrum& spectrum, double window_lo_nm,
                                   double window_hi_nm, double single_reference_area,
                                   BackgroundKind background_kind = BackgroundKind::Linear,
                                   const CountConfig& config = {}) {
    if (!(window_hi_nm > window_lo_nm))
        throw precondition_error("count_emitters: window hi must exceed lo");
    if (!(single_reference_area > 0.0))
        throw precondition_error("count_emitters: reference area must be > 0");
    if (!spectrum.covers(window_lo_nm, window_hi_nm))
        throw range_error("count_emitters: window outside spectrum range");

    double integral = integrate_window_thz(spectrum, window_lo_nm, window_hi_nm);

    if (background_kind != BackgroundKind::None) {
        const double width = window_hi_nm - window_lo_nm;
        const double edge = 0.1 * width;
        auto region_mean = [&](double lo, double hi) {
            // Mean via the window integral so refinement of the grid changes
            // nothing for piecewise-linear data.
            const double nu_lo = wavelength_to_frequency(hi);
            const double nu_hi = wavelength_to_frequency(lo);
            return std::pair<double, double>{
                0.5 * (lo + hi),
                integrate_window_thz(spectrum, lo, hi) / (nu_hi - nu_lo)};
        };
        const auto [l_lam, l_val] = region_mean(window_lo_nm, window_lo_nm + edge);
        const auto [r_lam, r_val] = region_mean(window_hi_nm - edge, window_hi_nm);
        // Background B(lambda) = p + q lambda estimated from the edges,
        // integrated exactly over frequency with lambda = c/nu:
        //   int B dnu = p (nu_hi - nu_lo) + q c ln(nu_hi / nu_lo).
        double p, q;
        if (background_kind == BackgroundKind::Constant) {
            p = 0.5 * (l_val + r_val);
            q = 0.0;
        } else {
            q = (r_val - l_val) / (r_lam - l_lam);
            p = l_val - q * l_lam;
        }
        const double nu_lo = wavelength_to_frequency(window_hi_nm);
        const double nu_hi = wavelength_to_frequency(window_lo_nm);
        integral -= p * (nu_hi - nu_lo) +
                    q * speed_of_light_nm_thz * std::log(nu_hi / nu_lo);
    }

    EmitterCount result;
    result.count = integral / single_reference_area;
    result.count_sigma = std::abs(result.count) * config.reference_rel_sigma;
    return result;
}

/// Plausible integer emitter counts implied by count +/- sigma (each value
/// whose rounding window intersects the interval).
inline std::pair<int, int> plausible_count_range(const EmitterCount& c) {
    const int lo = static_cast<int>(std::lround(std::max(0.0, c.count - c.count_sigma)));
    const int hi = static_cast<int>(std::lround(c.count + c.count_sigma));
    return {lo, hi};
}

struct ChargeCorrections {
    // Ratios NV0-relative-to-NV- (the NV- product is 1 by convention).
    double detection_ratio = 1.0;
    double absorption_ratio = 1.0;
    double quantum_efficiency_ratio = 1.0;
};

/// Fraction of emitters in the negative charge state:
/// N_- / (N_- + N_0), with N_- = I_- and N_0 = I_0 times the product of the
/// three correction ratios.
inline double charge_state_fraction(double intensity_nv0, double intensity_nvm,
                                    const ChargeCorrections& corrections = {}) {
    if (intensity_nv0 < 0.0 || intensity_nvm < 0.0)
        throw precondition_error("charge_state_fraction: intensities must be >= 0");
    if (!(corrections.detection_ratio > 0.0) || !(corrections.absorption_ratio > 0.0) ||
        !(corrections.quantum_efficiency_ratio > 0.0))
        throw precondition_error("charge_state_fraction: correction ratios must be > 0");
    if (intensity_nv0 == 0.0 && intensity_nvm == 0.0)
        throw numerical_error("charge_state_fraction: both intensities zero");
    const double n0 = intensity_nv0 * corrections.detection_ratio *
                      corrections.absorption_ratio * corrections.quantum_efficiency_ratio;
    return intensity_nvm / (intensity_nvm + n0);
}

// --- FitResult JSON serialization ---

inline nlohmann::json to_json(const FitResult& r) {
    nlohmann::json j;
    auto& lines = j["lines"] = nlohmann::json::array();
    for (const auto& l : r.lines)
        lines.push_back({{"kind", to_string(l.kind)},
                         {"center_thz", l.center},
                         {"fwhm_thz", l.fwhm},
                         {"area", l.area}});
    j["background"] = {{"kind", to_string(r.background.kind)},
                       {"coefficients", r.background.coefficients},
                       {"nu_ref_thz", r.background.nu_ref}};
    j["chi2"] = r.chi2;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    std::vector<double> cov;
    cov.reserve(static_cast<std::size_t>(r.covariance.size()));
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i)
        for (Eigen::Index k = 0; k < r.covariance.cols(); ++k)
            cov.push_back(r.covariance(i, k));
    j["covariance"] = cov;  // row-major
    j["covariance_dim"] = r.covariance.rows();
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace purcell
