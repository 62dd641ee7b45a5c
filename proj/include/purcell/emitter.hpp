#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/errors.hpp"

namespace purcell {

/// One vibronic transition |e> -> |g_i>. All rates are FWHM-style frequencies
/// in THz (nu convention). ground_relaxation is the relaxation rate of |g_i>
/// to |g_{i-1}> and must be zero exactly for i = 0.
struct Transition {
    int index = 0;
    double center = 0.0;             // THz
    double branching = 0.0;          // gamma_i / gamma
    double dephasing = 0.0;          // THz (pure dephasing, FWHM contribution)
    double ground_relaxation = 0.0;  // THz

    void validate() const {
        if (index < 0) throw precondition_error("Transition: index must be >= 0");
        if (!(center > 0.0)) throw precondition_error("Transition: center must be > 0");
        if (branching < 0.0 || branching > 1.0)
            throw precondition_error("Transition: branching must be in [0,1]");
        if (dephasing < 0.0) throw precondition_error("Transition: dephasing must be >= 0");
        if (ground_relaxation < 0.0)
            throw precondition_error("Transition: ground_relaxation must be >= 0");
        if ((index == 0) != (ground_relaxation == 0.0))
            throw precondition_error(
                "Transition: ground_relaxation must be zero iff index == 0");
    }
};

/// Multi-level emitter: one excited state decaying into a ladder of vibronic
/// ground states. gamma_total is the total free-space radiative decay rate in
/// THz (nu convention, 1/(2 pi tau)); dipole_overlap is the spatial and
/// orientational overlap xi with the cavity field.
struct EmitterModel {
    std::vector<Transition> transitions;
    double gamma_total = 0.0;   // THz
    double dipole_overlap = 1.0;

    EmitterModel() = default;
    EmitterModel(std::vector<Transition> t, double gamma, double overlap = 1.0)
        : transitions(std::move(t)), gamma_total(gamma), dipole_overlap(overlap) {
        validate();
    }

    /// Convenience: shared dephasing rate applied to every line.
    static EmitterModel with_shared_dephasing(std::vector<Transition> t, double gamma,
                                              double dephasing, double overlap = 1.0) {
        for (auto& tr : t) tr.dephasing = dephasing;
        return EmitterModel(std::move(t), gamma, overlap);
    }

    void validate() const {
        if (transitions.empty())
            throw precondition_error("EmitterModel: needs at least one transition");
        if (!(gamma_total > 0.0))
            throw precondition_error("EmitterModel: gamma_total must be > 0");
        if (dipole_overlap < 0.0 || dipole_overlap > 1.0)
            throw precondition_error("EmitterModel: dipole_overlap must be in [0,1]");
        double sum = 0.0;
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            transitions[i].validate();
            sum += transitions[i].branching;
            if (i > 0 && transitions[i].center >= transitions[i - 1].center)
                throw precondition_error(
                    "EmitterModel: transitions must be ordered by descending center");
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw precondition_error("EmitterModel: branching ratios must sum to 1");
    }
};

/// Sum of branching ratios over a set of transition indices.
inline double overlap_fraction(const EmitterModel& emitter, const std::set<int>& indices) {
    double sum = 0.0;
    for (int idx : indices) {
        bool found = false;
        for (const auto& t : emitter.transitions) {
            if (t.index == idx) {
                sum += t.branching;
                found = true;
                break;
            }
        }
        if (!found)
            throw precondition_error("overlap_fraction: unknown transition index " +
                                     std::to_string(idx));
    }
    return sum;
}

// --- JSON serialization (emitter model file format) ---

inline nlohmann::json to_json(const EmitterModel& m) {
    nlohmann::json j;
    j["gamma_total_thz"] = m.gamma_total;
    j["dipole_overlap"] = m.dipole_overlap;
    auto& arr = j["transitions"] = nlohmann::json::array();
    for (const auto& t : m.transitions) {
        arr.push_back({{"index", t.index},
                       {"center_thz", t.center},
                       {"branching", t.branching},
                       {"dephasing_thz", t.dephasing},
                       {"ground_relaxation_thz", t.ground_relaxation}});
    }
    return j;
}

inline EmitterModel emitter_from_json(const nlohmann::json& j) {
    std::vector<Transition> ts;
    for (const auto& e : j.at("transitions")) {
        Transition t;
        t.index = e.at("index").get<int>();
        t.center = e.at("center_thz").get<double>();
        t.branching = e.at("branching").get<double>();
        t.dephasing = e.at("dephasing_thz").get<double>();
        t.ground_relaxation = e.at("ground_relaxation_thz").get<double>();
        ts.push_back(t);
    }
    return EmitterModel(std::move(ts), j.at("gamma_total_thz").get<double>(),
                        j.value("dipole_overlap", 1.0));
}

inline EmitterModel load_emitter_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw precondition_error("cannot open emitter model file: " + path);
    nlohmann::json j;
    try {
        f >> j;
        return emitter_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw precondition_error("emitter model '" + path + "': " + e.what());
    }
}

}  // namespace purcell
