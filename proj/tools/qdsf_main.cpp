// qdsf command-line front end.
//
// Subcommands: spectrum | observables | evolve | thermal | oracle.
// Exit codes: 0 success, 2 sum-rule failure, 3 invalid physics input,
// 4 oracle mismatch, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "qdsf/bath_oracle.hpp"
#include "qdsf/config.hpp"
#include "qdsf/coupling.hpp"
#include "qdsf/io.hpp"
#include "qdsf/observables.hpp"
#include "qdsf/quadrature.hpp"
#include "qdsf/spectral.hpp"

namespace fs = std::filesystem;
using Real = double;
using json = nlohmann::ordered_json;
using namespace qdsf;

namespace {

struct OracleMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    config::RunConfig cfg;
    std::string hash;
    std::string provenance;  // one-line CSV header comment
    CouplingSpec<Real> spec{1.0, 1.0};
    std::vector<Mode<Real>> modes;
    fs::path out;

    spectral::QuadPolicy<Real> quad_policy() const { return {cfg.tol_static, cfg.tol_osc}; }
    spectral::GridPolicy<Real> grid_policy() const {
        spectral::GridPolicy<Real> g;
        g.panel_tol = cfg.panel_tol;
        g.sum_rule_threshold = cfg.sum_rule_threshold;
        g.max_points = cfg.grid_max_points;
        return g;
    }
};

std::string format_k(Real k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", k);
    return buf;
}

std::vector<observables::Variant> variants_of(const std::string& v) {
    using observables::Variant;
    if (v == "first-principles") return {Variant::first_principles};
    if (v == "as-printed") return {Variant::as_printed};
    if (v == "both") return {Variant::first_principles, Variant::as_printed};
    throw std::runtime_error("unknown variant: " + v);
}

json base_record(const Context& ctx) {
    json j;
    j["artifact"] = "qdsf";
    j["version"] = io::artifact_version;
    j["config_hash"] = ctx.hash;
    j["coupling"] = {{"family", ctx.cfg.family},
                     {"gamma", ctx.cfg.gamma},
                     {"lambda", ctx.cfg.lambda},
                     {"s", ctx.cfg.s}};
    return j;
}

json mode_record(const Mode<Real>& mode) {
    return {{"m", mode.mass},
            {"k", mode.k},
            {"omega_k", mode.omega_k},
            {"omega_renorm_sq", mode.omega_renorm_sq}};
}

Context prepare(const config::RunConfig& cfg) {
    Context ctx;
    ctx.cfg = cfg;
    ctx.hash = config::config_hash(cfg);
    ctx.provenance = std::string("qdsf ") + io::artifact_version + " config=" + ctx.hash;
    if (cfg.family != "power-law-exponential")
        throw std::domain_error("unknown coupling family: " + cfg.family);
    ctx.spec = CouplingSpec<Real>(cfg.gamma, cfg.lambda, cfg.s);
    // fail fast: every referenced mode must pass the positivity gate
    bool all_pass = true;
    for (Real k : cfg.k_values) {
        auto rep = check_positivity(ctx.spec, k, cfg.m);
        if (!rep.pass) {
            all_pass = false;
            std::fprintf(stderr, "invalid coupling for mode k=%s: margin %.17g <= 0\n",
                         format_k(k).c_str(), rep.margin);
        }
    }
    if (!all_pass)
        throw CouplingValidityError("coupling strength violates the positivity bound", 0.0);
    for (Real k : cfg.k_values) ctx.modes.push_back(make_mode(ctx.spec, cfg.m, k));
    ctx.out = cfg.out_dir;
    return ctx;
}

void ensure_writable(const Context& ctx, const std::vector<fs::path>& files) {
    fs::create_directories(ctx.out);
    if (ctx.cfg.force) return;
    for (const auto& f : files)
        if (fs::exists(f))
            throw std::runtime_error("refusing to overwrite " + f.string() +
                                     " (pass --force or output.force=true)");
}

template <class F>
void parallel_over(std::size_t n, int jobs, F&& body) {
    if (jobs <= 0) jobs = int(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, int(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------

int cmd_spectrum(Context& ctx) {
    struct Result {
        std::string csv, sidecar;
    };
    std::vector<Result> results(ctx.modes.size());
    std::vector<fs::path> files;
    for (const auto& mode : ctx.modes) {
        files.push_back(ctx.out / ("mode_k" + format_k(mode.k) + ".csv"));
        files.push_back(ctx.out / ("mode_k" + format_k(mode.k) + ".json"));
    }
    ensure_writable(ctx, files);
    parallel_over(ctx.modes.size(), ctx.cfg.jobs, [&](std::size_t i) {
        const auto& mode = ctx.modes[i];
        auto density = spectral::build_density(ctx.spec, mode, ctx.grid_policy(), ctx.quad_policy());
        io::CsvTable csv(ctx.provenance, {"omega", "P", "Y", "alpha_sq"});
        for (std::size_t r = 0; r < density.omega.size(); ++r)
            csv.add_row({density.omega[r], density.p[r], density.y[r], density.alpha_sq[r]});
        json j = base_record(ctx);
        j["mode"] = mode_record(mode);
        j["sum_rule_defect"] = density.sum_rule_defect;
        j["valid"] = density.valid;
        j["peak"] = {{"omega", density.peak.omega_peak},
                     {"p_max", density.peak.p_max},
                     {"fwhm", density.peak.fwhm}};
        j["grid_points"] = density.omega.size();
        results[i] = {csv.str(), j.dump(2) + "\n"};
    });
    for (std::size_t i = 0; i < ctx.modes.size(); ++i) {
        io::write_file(files[2 * i], results[i].csv);
        io::write_file(files[2 * i + 1], results[i].sidecar);
    }
    return 0;
}

int cmd_observables(Context& ctx) {
    std::vector<fs::path> files{ctx.out / "ground_state.csv", ctx.out / "ground_state.json"};
    const bool chi = ctx.cfg.chi_extent > 0;
    const bool scan = !ctx.cfg.field_scan.empty();
    if (chi)
        for (const auto& mode : ctx.modes)
            files.push_back(ctx.out / ("chi_k" + format_k(mode.k) + ".csv"));
    if (scan) files.push_back(ctx.out / "msq_scan.csv");
    ensure_writable(ctx, files);

    struct Per {
        observables::GroundStateStats<Real> stats;
        std::string chi_csv;
    };
    std::vector<Per> per(ctx.modes.size());
    parallel_over(ctx.modes.size(), ctx.cfg.jobs, [&](std::size_t i) {
        const auto& mode = ctx.modes[i];
        auto peak = spectral::locate_peak(ctx.spec, mode, ctx.quad_policy());
        spectral::MomentSet<Real> mom(ctx.spec, mode, peak, ctx.quad_policy());
        per[i].stats = observables::ground_state_stats(mom);
        if (chi) {
            io::CsvTable t(ctx.provenance, {"eta_r", "eta_i", "chi"});
            const int n = std::max(2, ctx.cfg.chi_points);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const Real er = -ctx.cfg.chi_extent + 2 * ctx.cfg.chi_extent * a / (n - 1);
                    const Real ei = -ctx.cfg.chi_extent + 2 * ctx.cfg.chi_extent * b / (n - 1);
                    t.add_row({er, ei, observables::characteristic_function(mom, er, ei)});
                }
            per[i].chi_csv = t.str();
        }
    });

    io::CsvTable table(ctx.provenance,
                       {"k", "m", "var_phi", "var_pi", "energy", "energy_minus_half_omega_k"});
    json all = base_record(ctx);
    all["modes"] = json::array();
    for (std::size_t i = 0; i < ctx.modes.size(); ++i) {
        const auto& s = per[i].stats;
        table.add_row({s.mode.k, s.mode.mass, s.var_phi, s.var_pi, s.energy,
                       s.energy - s.mode.omega_k / 2});
        json jm = mode_record(s.mode);
        jm["var_phi"] = s.var_phi;
        jm["var_pi"] = s.var_pi;
        jm["energy"] = s.energy;
        all["modes"].push_back(jm);
    }
    io::write_file(files[0], table.str());
    io::write_file(files[1], all.dump(2) + "\n");
    std::size_t fi = 2;
    if (chi)
        for (std::size_t i = 0; i < ctx.modes.size(); ++i) io::write_file(files[fi++], per[i].chi_csv);
    if (scan) {
        io::CsvTable t(ctx.provenance, {"k_max", "phi_sq"});
        for (Real km : ctx.cfg.field_scan) {
            auto r = observables::mean_square_field(ctx.spec, ctx.cfg.m, ctx.cfg.field_x, 0.0, km,
                                                    ctx.cfg.field_nk, ctx.quad_policy());
            t.add_row({r.k_max, r.value});
        }
        io::write_file(files[fi++], t.str());
    }
    return 0;
}

int cmd_evolve(Context& ctx) {
    auto variants = variants_of(ctx.cfg.variant);
    std::vector<Real> ts;
    for (long i = 0; i < ctx.cfg.t_points; ++i)
        ts.push_back(ctx.cfg.t_max * Real(i) / Real(std::max<long>(1, ctx.cfg.t_points - 1)));
    std::vector<fs::path> files;
    for (const auto& mode : ctx.modes)
        for (auto v : variants) {
            files.push_back(ctx.out / ("kernels_k" + format_k(mode.k) + "_" +
                                       observables::variant_name(v) + ".csv"));
            if (ctx.cfg.trajectory)
                files.push_back(ctx.out / ("trajectory_k" + format_k(mode.k) + "_" +
                                           observables::variant_name(v) + ".csv"));
        }
    ensure_writable(ctx, files);
    std::vector<std::string> outputs(files.size());
    parallel_over(ctx.modes.size(), ctx.cfg.jobs, [&](std::size_t i) {
        const auto& mode = ctx.modes[i];
        auto density = spectral::build_density(ctx.spec, mode, ctx.grid_policy(), ctx.quad_policy());
        std::size_t fi = i * variants.size() * (ctx.cfg.trajectory ? 2 : 1);
        for (auto v : variants) {
            auto kern = observables::evolution_kernels(density, ts, v, ctx.cfg.tol_osc);
            io::CsvTable t(ctx.provenance, {"t", "K_cos", "K_sin_over_omega", "K_omega_sin"});
            for (std::size_t r = 0; r < ts.size(); ++r)
                t.add_row({ts[r], kern.k_cos[r], kern.k_sin_over_omega[r], kern.k_omega_sin[r]});
            outputs[fi++] = t.str();
            if (ctx.cfg.trajectory) {
                auto tr = observables::propagate_mean(kern, ctx.cfg.phi0, ctx.cfg.pi0);
                io::CsvTable tt(ctx.provenance, {"t", "mean_phi", "mean_pi"});
                for (std::size_t r = 0; r < ts.size(); ++r)
                    tt.add_row({ts[r], tr.phi[r], tr.pi[r]});
                outputs[fi++] = tt.str();
            }
        }
    });
    for (std::size_t i = 0; i < files.size(); ++i) io::write_file(files[i], outputs[i]);
    return 0;
}

int cmd_thermal(Context& ctx) {
    std::vector<fs::path> files;
    for (const auto& mode : ctx.modes)
        files.push_back(ctx.out / ("thermal_k" + format_k(mode.k) + ".csv"));
    ensure_writable(ctx, files);
    std::vector<std::string> outputs(ctx.modes.size());
    parallel_over(ctx.modes.size(), ctx.cfg.jobs, [&](std::size_t i) {
        const auto& mode = ctx.modes[i];
        auto peak = spectral::locate_peak(ctx.spec, mode, ctx.quad_policy());
        spectral::MomentSet<Real> mom(ctx.spec, mode, peak, ctx.quad_policy());
        io::CsvTable t(ctx.provenance,
                       {"T", "occupation_as_printed", "occupation_first_principles"});
        for (Real T : ctx.cfg.temperatures) {
            observables::ThermalSpec<Real> th{T};
            t.add_row({T,
                       observables::thermal_occupation(mom, th, observables::Variant::as_printed),
                       observables::thermal_occupation(mom, th,
                                                       observables::Variant::first_principles)});
        }
        outputs[i] = t.str();
    });
    for (std::size_t i = 0; i < files.size(); ++i) io::write_file(files[i], outputs[i]);
    return 0;
}

int cmd_oracle(Context& ctx) {
    std::vector<fs::path> files;
    for (const auto& mode : ctx.modes) {
        files.push_back(ctx.out / ("oracle_report_k" + format_k(mode.k) + ".json"));
        files.push_back(ctx.out / ("oracle_spectrum_k" + format_k(mode.k) + ".json"));
        if (!ctx.cfg.oracle_scan.empty())
            files.push_back(ctx.out / ("oracle_convergence_k" + format_k(mode.k) + ".csv"));
    }
    ensure_writable(ctx, files);
    std::string worst_offender;
    double worst_excess = 0;
    std::size_t fi = 0;
    for (const auto& mode : ctx.modes) {
        const auto pol = ctx.quad_policy();
        auto density = spectral::build_density(ctx.spec, mode, ctx.grid_policy(), pol);
        spectral::MomentSet<Real> mom(ctx.spec, mode, density.peak, pol);
        auto stats = observables::ground_state_stats(mom);
        std::vector<Real> ts;
        for (int i = 0; i <= 100; ++i) ts.push_back(ctx.cfg.oracle_kernel_t_max * i / 100.0);
        auto kern = observables::evolution_kernels(density, ts,
                                                   observables::Variant::first_principles,
                                                   ctx.cfg.tol_osc);
        const Real T = ctx.cfg.temperatures.front();
        observables::ThermalSpec<Real> th{T};
        const Real occ_fp =
            observables::thermal_occupation(mom, th, observables::Variant::first_principles);
        const Real occ_ap =
            observables::thermal_occupation(mom, th, observables::Variant::as_printed);

        auto bathN = bath::diagonalize(bath::discretize(
            ctx.spec, mode, ctx.cfg.oracle_n, ctx.cfg.oracle_omega_max,
            ctx.cfg.oracle_scheme == "log" ? bath::Scheme::log : bath::Scheme::uniform));
        auto dstats = bath::oracle_stats(bathN);
        auto dkern = bath::oracle_kernels(bathN, ts);
        const Real occ_d = bath::oracle_stats(bathN, T).occupation;

        auto rel = [](Real a, Real b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        Real ksup = 0;
        for (std::size_t i = 0; i < ts.size(); ++i)
            ksup = std::max(ksup, std::abs(kern.k_cos[i] - dkern.k_cos[i]));
        const Real err_phi = rel(stats.var_phi, dstats.var_phi);
        const Real err_pi = rel(stats.var_pi, dstats.var_pi);
        const Real err_fp = rel(occ_fp, occ_d), err_ap = rel(occ_ap, occ_d);
        const char* agreeing = err_fp <= err_ap ? "first-principles" : "as-printed";
        const Real err_th = std::min(err_fp, err_ap);
        // variant adjudication for the mean-value propagation
        auto kern_ap = kern;
        kern_ap.variant = observables::Variant::as_printed;
        auto tr_fp = observables::propagate_mean(kern, ctx.cfg.phi0, ctx.cfg.pi0);
        auto tr_ap = observables::propagate_mean(kern_ap, ctx.cfg.phi0, ctx.cfg.pi0);
        Real ev_fp = 0, ev_ap = 0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            Real c = 0, so = 0, ws = 0;
            c = dkern.k_cos[i];
            so = dkern.k_sin_over_omega[i];
            ws = dkern.k_omega_sin[i];
            const Real dphi = c * ctx.cfg.phi0 + so * ctx.cfg.pi0;
            const Real dpi = c * ctx.cfg.pi0 - ws * ctx.cfg.phi0;
            ev_fp = std::max({ev_fp, std::abs(tr_fp.phi[i] - dphi), std::abs(tr_fp.pi[i] - dpi)});
            ev_ap = std::max({ev_ap, std::abs(tr_ap.phi[i] - dphi), std::abs(tr_ap.pi[i] - dpi)});
        }

        json rep = base_record(ctx);
        rep["mode"] = mode_record(mode);
        rep["oracle"] = {{"n", ctx.cfg.oracle_n},
                         {"omega_max", bathN.omega_max},
                         {"scheme", ctx.cfg.oracle_scheme},
                         {"sum_overlap_minus_1", dstats.sum_overlap - 1.0},
                         {"max_residual", bathN.max_residual},
                         {"interlacing", bath::interlaces(bathN)}};
        rep["comparison"] = {{"var_phi_rel_err", err_phi},
                             {"var_pi_rel_err", err_pi},
                             {"k_cos_sup_err", ksup},
                             {"thermal_T", T},
                             {"thermal_rel_err_first_principles", err_fp},
                             {"thermal_rel_err_as_printed", err_ap},
                             {"sum_rule_defect", density.sum_rule_defect}};
        rep["adjudication"] = {{"thermal_variant", agreeing},
                               {"evolution_sup_err_first_principles", ev_fp},
                               {"evolution_sup_err_as_printed", ev_ap},
                               {"evolution_variant",
                                ev_fp <= ev_ap ? "first-principles" : "as-printed"}};
        auto check = [&](const std::string& name, Real err, Real tol) {
            rep["verdicts"][name] = err <= tol ? "pass" : "fail";
            if (err > tol && err / tol > worst_excess) {
                worst_excess = err / tol;
                worst_offender = name + " (err " + io::format_float(err) + " > tol " +
                                 io::format_float(tol) + ")";
            }
        };
        check("var_phi", err_phi, ctx.cfg.oracle_tol_var);
        check("var_pi", err_pi, ctx.cfg.oracle_tol_var);
        check("k_cos", ksup, ctx.cfg.oracle_tol_kernel);
        check("thermal", err_th, ctx.cfg.oracle_tol_thermal);
        check("sum_rule", density.sum_rule_defect, ctx.cfg.sum_rule_threshold);
        check("discrete_sum_rule", std::abs(dstats.sum_overlap - 1.0), 1e-10);
        rep["verdict"] = worst_offender.empty() ? "PASS" : "FAIL";

        json spectrum = base_record(ctx);
        spectrum["mode"] = mode_record(mode);
        spectrum["omega_tilde"] = std::vector<Real>(bathN.eigen_omega.data(),
                                                    bathN.eigen_omega.data() + bathN.eigen_omega.size());
        spectrum["overlap_sq"] = std::vector<Real>(bathN.overlap_sq.data(),
                                                   bathN.overlap_sq.data() + bathN.overlap_sq.size());

        io::write_file(files[fi++], rep.dump(2) + "\n");
        io::write_file(files[fi++], spectrum.dump(2) + "\n");
        if (!ctx.cfg.oracle_scan.empty()) {
            io::CsvTable t(ctx.provenance, {"N", "dvar_phi", "dvar_pi"});
            for (long n : ctx.cfg.oracle_scan) {
                auto b = bath::diagonalize(bath::discretize(
                    ctx.spec, mode, n, ctx.cfg.oracle_omega_max,
                    ctx.cfg.oracle_scheme == "log" ? bath::Scheme::log : bath::Scheme::uniform));
                auto s = bath::oracle_stats(b);
                t.add_row({double(n), std::abs(s.var_phi - stats.var_phi),
                           std::abs(s.var_pi - stats.var_pi)});
            }
            io::write_file(files[fi++], t.str());
        }
    }
    if (!worst_offender.empty()) throw OracleMismatch("oracle mismatch: " + worst_offender);
    std::printf("oracle verdict: PASS\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral decomposition of a dissipative scalar field"};
    app.require_subcommand(1);
    std::string config_path, out_dir, variant, tol_static, tol_osc;
    int jobs = -1;
    bool force = false;
    app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--force", force, "allow overwriting existing outputs");
    app.add_option("--jobs", jobs, "parallel mode computations (default: cores)");
    app.add_option("--variant", variant, "first-principles | as-printed | both");
    app.add_option("--tol-static", tol_static, "relative tolerance for static integrals");
    app.add_option("--tol-osc", tol_osc, "relative tolerance for oscillatory kernels");
    app.fallthrough();
    auto* sc_spectrum = app.add_subcommand("spectrum", "mode probability density per mode");
    auto* sc_observables = app.add_subcommand("observables", "ground-state statistics");
    auto* sc_evolve = app.add_subcommand("evolve", "time-evolution kernels");
    auto* sc_thermal = app.add_subcommand("thermal", "thermal occupation vs temperature");
    auto* sc_oracle = app.add_subcommand("oracle", "finite-bath comparison report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        config::RunConfig cfg;
        if (!config_path.empty()) cfg = config::load(config_path);
        if (const char* env = std::getenv("QDSF_OUT"); env && *env && cfg.out_dir == "out")
            cfg.out_dir = env;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (force) cfg.force = true;
        if (jobs >= 0) cfg.jobs = jobs;
        if (!variant.empty()) cfg.variant = variant;
        if (!tol_static.empty()) config::apply_key(cfg, "quad.tol_static", tol_static);
        if (!tol_osc.empty()) config::apply_key(cfg, "quad.tol_osc", tol_osc);
        variants_of(cfg.variant);  // validate early

        Context ctx = prepare(cfg);
        if (sc_spectrum->parsed()) return cmd_spectrum(ctx);
        if (sc_observables->parsed()) return cmd_observables(ctx);
        if (sc_evolve->parsed()) return cmd_evolve(ctx);
        if (sc_thermal->parsed()) return cmd_thermal(ctx);
        if (sc_oracle->parsed()) return cmd_oracle(ctx);
        return 1;
    } catch (const CouplingValidityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const bath::InstabilityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const spectral::InvalidDensityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const OracleMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
