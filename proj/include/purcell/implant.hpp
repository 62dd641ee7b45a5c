#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/errors.hpp"

namespace purcell {

// Effective implantation spot area (cm^2) that reconciles the reported dose,
// emitter count, and creation yield; the aperture area itself is not known.
inline constexpr double default_spot_area_cm2 = 1.25e-11;
inline constexpr double default_creation_yield = 0.008;

struct ImplantConfig {
    double dose = 0.0;        // ions/cm^2
    double spot_area = default_spot_area_cm2;  // cm^2
    double ion_energy_kev = 5.0;               // metadata only
    double yield_ = default_creation_yield;    // in [0,1]

    void validate() const {
        if (dose < 0.0) throw precondition_error("ImplantConfig: dose must be >= 0");
        if (!(spot_area > 0.0)) throw precondition_error("ImplantConfig: spot_area must be > 0");
        if (yield_ < 0.0 || yield_ > 1.0)
            throw precondition_error("ImplantConfig: yield must be in [0,1]");
    }
};

/// Expected emitter count mu = dose * spot_area * yield.
inline double expected_count(const ImplantConfig& config) {
    config.validate();
    return config.dose * config.spot_area * config.yield_;
}

/// Poisson pmf P(k) = e^-mu mu^k / k! for k = 0..k_max.
inline std::vector<double> count_distribution(const ImplantConfig& config, int k_max) {
    if (k_max < 0) throw precondition_error("count_distribution: k_max must be >= 0");
    const double mu = expected_count(config);
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1, 0.0);
    p[0] = std::exp(-mu);
    for (int k = 1; k <= k_max; ++k)
        p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k - 1)] * mu / k;
    return p;
}

/// P(k = 1) = mu e^-mu; maximal (= 1/e) at mu = 1.
inline double single_emitter_probability(const ImplantConfig& config) {
    const double mu = expected_count(config);
    return mu * std::exp(-mu);
}

struct DosePoint {
    double dose = 0.0;         // ions/cm^2
    double count = 0.0;        // observed emitters
    double count_sigma = 0.0;  // 1-sigma uncertainty of count
};

struct YieldEstimate {
    double yield_ = 0.0;
    double sigma = 0.0;
    std::vector<DosePoint> points;
};

/// Weighted least-squares fit of count = yield * dose * spot_area through the
/// origin; the uncertainty comes from the fit covariance. Points with zero
/// sigma are treated as exact (weight from the smallest positive sigma, or
/// unit weights when none have one).
inline YieldEstimate estimate_yield(const std::vector<DosePoint>& points, double spot_area) {
    if (points.empty()) throw precondition_error("estimate_yield: no points");
    if (!(spot_area > 0.0)) throw precondition_error("estimate_yield: spot_area must be > 0");
    double min_sigma = 0.0;
    for (const auto& p : points) {
        if (!(p.dose > 0.0)) throw precondition_error("estimate_yield: doses must be > 0");
        if (p.count_sigma < 0.0)
            throw precondition_error("estimate_yield: negative count sigma");
        if (p.count_sigma > 0.0 && (min_sigma == 0.0 || p.count_sigma < min_sigma))
            min_sigma = p.count_sigma;
    }
    const double fallback = min_sigma > 0.0 ? min_sigma : 1.0;
    double swx2 = 0.0, swxy = 0.0;
    for (const auto& p : points) {
        const double s = p.count_sigma > 0.0 ? p.count_sigma : fallback;
        const double w = 1.0 / (s * s);
        const double x = p.dose * spot_area;
        swx2 += w * x * x;
        swxy += w * x * p.count;
    }
    if (!(swx2 > 0.0)) throw precondition_error("estimate_yield: all weights zero");
    YieldEstimate est;
    est.yield_ = swxy / swx2;
    est.sigma = min_sigma > 0.0 ? std::sqrt(1.0 / swx2) : 0.0;
    est.points = points;
    return est;
}

/// Dose giving the requested expected emitter count:
/// dose = target / (spot_area * yield).
inline double optimal_dose(double target_count, double spot_area, double yield_) {
    if (!(target_count > 0.0)) throw precondition_error("optimal_dose: target must be > 0");
    if (!(spot_area > 0.0)) throw precondition_error("optimal_dose: spot_area must be > 0");
    if (!(yield_ > 0.0)) throw precondition_error("optimal_dose: yield must be > 0");
    return target_count / (spot_area * yield_);
}

// --- I/O: dose-series CSV and YieldEstimate JSON ---

inline std::vector<DosePoint> parse_dose_series_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw precondition_error("dose CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "dose_ions_per_cm2,count,count_sigma")
        throw precondition_error("dose CSV line 1: expected header "
                                 "'dose_ions_per_cm2,count,count_sigma'");
    std::vector<DosePoint> pts;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        DosePoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.dose, &p.count, &p.count_sigma) != 3)
            throw precondition_error("dose CSV line " + std::to_string(lineno) +
                                     ": expected 3 comma-separated numbers");
        pts.push_back(p);
    }
    return pts;
}

inline nlohmann::json to_json(const YieldEstimate& est) {
    nlohmann::json j;
    j["yield"] = est.yield_;
    j["sigma"] = est.sigma;
    auto& pts = j["points"] = nlohmann::json::array();
    for (const auto& p : est.points)
        pts.push_back({{"dose_ions_per_cm2", p.dose},
                       {"count", p.count},
                       {"count_sigma", p.count_sigma}});
    return j;
}

}  // namespace purcell
