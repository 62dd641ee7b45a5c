// purcell-lab: command-line front end for the cavity-coupling, spectral
// fitting, emitter counting, and implantation dose planning pipeline.
//
// Exit codes: 0 success, 1 input/validation error, 2 numerical
// non-convergence (partial output still written).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "purcell/coupling.hpp"
#include "purcell/emitter.hpp"
#include "purcell/fitting.hpp"
#include "purcell/implant.hpp"
#include "purcell/spectrum.hpp"

namespace {

using nlohmann::json;

struct GlobalOptions {
    std::string config_path;
    bool no_timestamp = false;
    json config;  // optional overrides loaded from --config
};

void stamp(json& j, const GlobalOptions& g) {
    if (g.no_timestamp) return;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
    j["generated_at"] = buf;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw purcell::precondition_error("cannot open output file: " + path);
    f << j.dump(2) << '\n';
}

double config_or(const GlobalOptions& g, const std::string& key, double fallback) {
    if (g.config.contains(key)) return g.config.at(key).get<double>();
    return fallback;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi > lo))
        throw purcell::precondition_error("grid: need hi > lo and step > 0");
    std::vector<double> g;
    for (double x = lo; x <= hi + 0.5 * step; x += step) g.push_back(std::min(x, hi));
    if (g.back() < hi - 1e-12) g.push_back(hi);
    return g;
}

void check_grid_sane(double lo, double hi) {
    if (lo < 200.0 || hi > 2000.0)
        throw purcell::precondition_error(
            "wavelength grid outside the 200-2000 nm sanity range");
}

json coupling_summary(const purcell::EmitterModel& model, const purcell::CavityMode& cavity,
                      const std::set<int>& overlap_indices) {
    const auto r = purcell::generalized_purcell(model, cavity);
    const double e = purcell::overlap_fraction(model, overlap_indices);
    json j;
    j["lambda_c_nm"] = cavity.lambda_c;
    j["q_factor"] = cavity.q_factor;
    j["mode_volume"] = cavity.mode_volume;
    j["f_star"] = r.f_star;
    j["one_plus_f_star"] = 1.0 + r.f_star;
    j["beta"] = r.beta;
    j["overlap_fraction"] = e;
    j["i_on_i_off"] = purcell::intensity_enhancement(r.f_star, e);
    auto& pl = j["per_line"] = json::array();
    for (const auto& [idx, c] : r.per_line) pl.push_back({{"index", idx}, {"f_star", c}});
    return j;
}

void write_sweep_csv(const std::string& path, const std::vector<purcell::CouplingResult>& sweep) {
    std::ofstream f(path);
    if (!f) throw purcell::precondition_error("cannot open output file: " + path);
    f << "lambda_nm,f_star,beta";
    for (std::size_t i = 0; i < sweep.front().per_line.size(); ++i) f << ",line" << i;
    f << '\n';
    f.precision(12);
    for (const auto& r : sweep) {
        f << r.lambda_c << ',' << r.f_star << ',' << r.beta;
        for (const auto& [idx, c] : r.per_line) f << ',' << c;
        f << '\n';
    }
}

int run_fit(const GlobalOptions& g, const std::string& spectrum_path,
            const std::string& guess_path, const std::string& out_path) {
    const auto spectrum = purcell::read_spectrum_csv_file(spectrum_path);

    std::ifstream gf(guess_path);
    if (!gf) throw purcell::precondition_error("cannot open initial-guess file: " + guess_path);
    json guess;
    try {
        gf >> guess;
    } catch (const json::exception& e) {
        throw purcell::precondition_error("initial-guess JSON: " + std::string(e.what()));
    }

    std::vector<purcell::LineShape> initial;
    for (const auto& l : guess.at("lines"))
        initial.emplace_back(purcell::line_kind_from_string(l.at("kind").get<std::string>()),
                             l.at("center_thz").get<double>(), l.at("fwhm_thz").get<double>(),
                             l.at("area").get<double>());
    const auto bg = purcell::background_kind_from_string(guess.value("background", "none"));

    purcell::FitConfig cfg;
    if (guess.contains("config")) {
        const auto& c = guess["config"];
        cfg.max_iterations = c.value("max_iterations", cfg.max_iterations);
        cfg.convergence_tol = c.value("convergence_tol", cfg.convergence_tol);
        cfg.damping_init = c.value("damping_init", cfg.damping_init);
    }

    const auto result = purcell::fit_multipeak(spectrum, initial, bg, cfg);
    json out = purcell::to_json(result);
    out["input"] = spectrum_path;
    stamp(out, g);
    write_json(out_path, out);
    if (!result.converged) {
        std::cerr << "fit did not converge within " << cfg.max_iterations
                  << " iterations (chi2 = " << result.chi2 << ")\n";
        return 2;
    }
    return 0;
}

int run_sweep(const GlobalOptions& g, const std::string& emitter_path, double q, double v,
              double n, double lo, double hi, double step, double operating_nm,
              const std::string& out_csv, const std::string& summary_path) {
    check_grid_sane(lo, hi);
    const auto model = purcell::load_emitter_model(emitter_path);
    const purcell::CavityMode cavity(operating_nm, q, v, n, "sweep");
    const auto grid = make_grid(lo, hi, step);
    const auto sweep = purcell::sweep_purcell(model, cavity, grid);
    write_sweep_csv(out_csv, sweep);

    json summary = coupling_summary(model, cavity, {1, 2});
    summary["grid"] = {{"lambda_min_nm", lo}, {"lambda_max_nm", hi}, {"step_nm", step}};
    summary["assumptions"] = {"Q and mode volume held fixed while the cavity is tuned"};
    stamp(summary, g);
    write_json(summary_path, summary);
    return 0;
}

int run_count(const GlobalOptions& g, const std::string& spectrum_path, double lo, double hi,
              double reference_area, const std::string& background,
              const std::string& out_path) {
    const auto spectrum = purcell::read_spectrum_csv_file(spectrum_path);
    purcell::CountConfig cc;
    cc.reference_rel_sigma = config_or(g, "reference_rel_sigma", cc.reference_rel_sigma);
    const auto result = purcell::count_emitters(
        spectrum, lo, hi, reference_area,
        purcell::background_kind_from_string(background), cc);
    const auto [klo, khi] = purcell::plausible_count_range(result);
    json out;
    out["count"] = result.count;
    out["count_sigma"] = result.count_sigma;
    out["plausible_counts"] = {{"min", klo}, {"max", khi}};
    out["window_nm"] = {lo, hi};
    out["reference_area"] = reference_area;
    out["reference_rel_sigma"] = cc.reference_rel_sigma;
    stamp(out, g);
    write_json(out_path, out);
    return 0;
}

int run_dose_plan(const GlobalOptions& g, double target, double spot_area, double yield_,
                  bool spot_area_defaulted, const std::string& out_path) {
    const double dose = purcell::optimal_dose(target, spot_area, yield_);
    purcell::ImplantConfig cfg{dose, spot_area, 5.0, yield_};
    const double mu = purcell::expected_count(cfg);
    const int k_max = static_cast<int>(mu + 10.0 * std::sqrt(mu) + 10.0);
    json out;
    out["target_count"] = target;
    out["dose_ions_per_cm2"] = dose;
    out["spot_area_cm2"] = spot_area;
    out["yield"] = yield_;
    out["expected_count"] = mu;
    out["p_single"] = purcell::single_emitter_probability(cfg);
    out["count_distribution"] = purcell::count_distribution(cfg, std::min(k_max, 50));
    if (spot_area_defaulted)
        out["assumptions"] = {"default effective spot area 1.25e-11 cm^2 (reconciled, "
                              "not measured)"};
    stamp(out, g);
    write_json(out_path, out);
    return 0;
}

int run_dose_yield(const GlobalOptions& g, const std::string& points_path, double spot_area,
                   bool spot_area_defaulted, const std::string& out_path) {
    std::ifstream f(points_path);
    if (!f) throw purcell::precondition_error("cannot open dose series: " + points_path);
    const auto pts = purcell::parse_dose_series_csv(f);
    const auto est = purcell::estimate_yield(pts, spot_area);
    json out = purcell::to_json(est);
    out["spot_area_cm2"] = spot_area;
    if (spot_area_defaulted)
        out["assumptions"] = {"default effective spot area 1.25e-11 cm^2 (reconciled, "
                              "not measured)"};
    stamp(out, g);
    write_json(out_path, out);
    return 0;
}

int run_reproduce(const GlobalOptions& g, const std::string& emitter_path,
                  const std::string& out_path, const std::string& sweep_csv) {
    const auto model = purcell::load_emitter_model(emitter_path);
    const purcell::CavityMode c1(653.0, 160.0, 1.1, 2.4, "c1");

    json report;
    report["operating_point"] = coupling_summary(model, c1, {1, 2});

    const auto grid = make_grid(620.0, 700.0, 0.5);
    const auto sweep = purcell::sweep_purcell(model, c1, grid);
    double best_f = -1.0, best_lambda = 0.0;
    for (const auto& r : sweep)
        if (r.f_star > best_f) {
            best_f = r.f_star;
            best_lambda = r.lambda_c;
        }
    report["sweep"] = {{"lambda_min_nm", 620.0},
                       {"lambda_max_nm", 700.0},
                       {"step_nm", 0.5},
                       {"peak_lambda_nm", best_lambda},
                       {"peak_f_star", best_f}};
    if (!sweep_csv.empty()) write_sweep_csv(sweep_csv, sweep);

    const double spot_area = config_or(g, "spot_area_cm2", purcell::default_spot_area_cm2);
    const double yld = config_or(g, "yield", purcell::default_creation_yield);
    const double dose = purcell::optimal_dose(1.0, spot_area, yld);
    purcell::ImplantConfig icfg{dose, spot_area, 5.0, yld};
    report["dose_plan"] = {{"target_count", 1.0},
                           {"dose_ions_per_cm2", dose},
                           {"spot_area_cm2", spot_area},
                           {"yield", yld},
                           {"p_single", purcell::single_emitter_probability(icfg)}};
    report["assumptions"] = {"Q and mode volume held fixed while the cavity is tuned",
                             "default effective spot area 1.25e-11 cm^2 (reconciled, "
                             "not measured)"};
    stamp(report, g);
    write_json(out_path, report);

    const auto& op = report["operating_point"];
    std::cout << "lambda_c = 653 nm: 1+F* = " << op["one_plus_f_star"].get<double>()
              << ", beta = " << op["beta"].get<double>()
              << ", I_on/I_off = " << op["i_on_i_off"].get<double>()
              << "; sweep peak at " << best_lambda << " nm"
              << "; optimal dose = " << dose << " ions/cm^2\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level emitter / cavity coupling and implantation analysis"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON file with default overrides");
    app.add_flag("--no-timestamp", g.no_timestamp, "omit timestamps from outputs");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a spectrum with line shapes");
    std::string spectrum_path, guess_path, out_path = "fit.json";
    fit->add_option("--spectrum", spectrum_path, "spectrum CSV")->required();
    fit->add_option("--initial", guess_path, "initial-guess JSON")->required();
    fit->add_option("--out", out_path, "output JSON path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "sweep the cavity wavelength");
    std::string emitter_path, sweep_csv = "sweep.csv", summary_path = "sweep_summary.json";
    double q = 160.0, v = 1.1, n_index = 2.4;
    double lam_lo = 620.0, lam_hi = 700.0, lam_step = 0.5, operating = 653.0;
    sweep->add_option("--emitter", emitter_path, "emitter model JSON")->required();
    sweep->add_option("--q-factor", q, "cavity quality factor");
    sweep->add_option("--mode-volume", v, "mode volume in (lambda/n)^3");
    sweep->add_option("--refractive-index", n_index, "host refractive index");
    sweep->add_option("--lambda-min-nm", lam_lo, "grid start (nm)");
    sweep->add_option("--lambda-max-nm", lam_hi, "grid end (nm)");
    sweep->add_option("--lambda-step-nm", lam_step, "grid step (nm)");
    sweep->add_option("--operating-lambda-nm", operating, "summary operating point (nm)");
    sweep->add_option("--out", sweep_csv, "sweep CSV path");
    sweep->add_option("--summary", summary_path, "summary JSON path");

    // count
    auto* count = app.add_subcommand("count", "count emitters in a spectral window");
    std::string count_spectrum, count_out = "count.json", count_bg = "linear";
    double win_lo = 629.0, win_hi = 645.0, ref_area = 1.0;
    count->add_option("--spectrum", count_spectrum, "spectrum CSV")->required();
    count->add_option("--window-lo-nm", win_lo, "window start (nm)");
    count->add_option("--window-hi-nm", win_hi, "window end (nm)");
    count->add_option("--reference-area", ref_area, "single-emitter reference area")
        ->required();
    count->add_option("--background", count_bg, "background kind (none|constant|linear)");
    count->add_option("--out", count_out, "output JSON path");

    // dose
    auto* dose = app.add_subcommand("dose", "implantation dose statistics");
    dose->require_subcommand(1);
    auto* plan = dose->add_subcommand("plan", "dose for a target emitter count");
    double target = 1.0, spot_area = purcell::default_spot_area_cm2;
    double yield_ = purcell::default_creation_yield;
    std::string plan_out = "dose_plan.json";
    plan->add_option("--target", target, "target expected emitter count")->required();
    auto* spot_opt = plan->add_option("--spot-area-cm2", spot_area, "implantation spot area");
    plan->add_option("--yield", yield_, "creation yield in [0,1]");
    plan->add_option("--out", plan_out, "output JSON path");
    auto* yld = dose->add_subcommand("yield", "estimate yield from a dose series");
    std::string points_path, yield_out = "yield.json";
    double yld_spot = purcell::default_spot_area_cm2;
    yld->add_option("--points", points_path, "dose series CSV")->required();
    auto* yld_spot_opt = yld->add_option("--spot-area-cm2", yld_spot, "implantation spot area");
    yld->add_option("--out", yield_out, "output JSON path");

    // reproduce-paper
    auto* rp = app.add_subcommand("reproduce-paper",
                                  "reference model -> sweep -> operating point -> dose plan");
    std::string rp_model = "data/nv_reference_model.json", rp_out = "report.json", rp_csv;
    rp->add_option("--model", rp_model, "emitter model JSON");
    rp->add_option("--out", rp_out, "report JSON path");
    rp->add_option("--sweep-out", rp_csv, "optional sweep CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g.config_path.empty()) {
            std::ifstream cf(g.config_path);
            if (!cf) throw purcell::precondition_error("cannot open config: " + g.config_path);
            cf >> g.config;
            if (g.config.contains("spot_area_cm2") && !*spot_opt)
                spot_area = g.config["spot_area_cm2"].get<double>();
            if (g.config.contains("spot_area_cm2") && !*yld_spot_opt)
                yld_spot = g.config["spot_area_cm2"].get<double>();
            if (g.config.contains("yield")) yield_ = g.config["yield"].get<double>();
        }
        if (fit->parsed()) return run_fit(g, spectrum_path, guess_path, out_path);
        if (sweep->parsed())
            return run_sweep(g, emitter_path, q, v, n_index, lam_lo, lam_hi, lam_step,
                             operating, sweep_csv, summary_path);
        if (count->parsed())
            return run_count(g, count_spectrum, win_lo, win_hi, ref_area, count_bg, count_out);
        if (dose->parsed()) {
            if (plan->parsed())
                return run_dose_plan(g, target, spot_area, yield_,
                                     !*spot_opt && !g.config.contains("spot_area_cm2"),
                                     plan_out);
            return run_dose_yield(g, points_path, yld_spot,
                                  !*yld_spot_opt && !g.config.contains("spot_area_cm2"),
                                  yield_out);
        }
        if (rp->parsed()) return run_reproduce(g, rp_model, rp_out, rp_csv);
    } catch (const purcell::fit_failure_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const purcell::numerical_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
