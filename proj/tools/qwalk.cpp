// qwalk: walk simulation, qubit encoding round trips, state reconstruction,
// and the figure-scenario sweeps, driven by JSON configs with flag overrides.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "qwalk/experiments.hpp"

namespace {

using namespace qwalk;

constexpr std::uint64_t kDefaultSeed = 12345;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 0;

    CommonOpts() {
        const char* env = std::getenv("QWALK_OUT_DIR");
        out_dir = env != nullptr && *env != '\0' ? env : "out";
    }
};

ScenarioConfig load_scenario(const CommonOpts& common, const std::string& scenario) {
    ScenarioConfig cfg;
    if (!common.config_path.empty())
        cfg = config_from_json(json::parse(read_text_file(common.config_path)));
    cfg.scenario = scenario;
    cfg.out_dir = common.out_dir;
    cfg.master_seed = common.seed;
    cfg.threads = common.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--config", common.config_path, "JSON config file (flags override)");
    cmd->add_option("-o,--out", common.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", common.seed, "master seed")->capture_default_str();
    cmd->add_option("--threads", common.threads, "worker threads (0 = hardware)");
}

int run_walk(const std::string& init, double psi, int steps, const std::string& out_dir) {
    const auto parsed = parse_initial_state(init);
    if (std::abs(parsed.raw_norm - 1.0) > 1e-6)
        std::cerr << "warning: initial state norm " << fmt_g12(parsed.raw_norm)
                  << " deviates from 1; normalized\n";
    const CoinOperator coin(psi);
    const WalkState final_state = evolve(parsed.state, coin, steps);
    const auto dist = position_distribution(final_state);
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "walk_distribution.csv";
    write_text_file(path.string(), distribution_csv(dist));
    const auto d0 = position_distribution(parsed.state);
    std::cout << "steps=" << steps << " psi=" << fmt_g12(psi)
              << " spread_speed=" << fmt_g12(steps > 0 ? spread_speed(dist, d0, steps) : 0.0)
              << " entropy=" << fmt_g12(entanglement_entropy(coin_reduced_density(final_state)))
              << "\nwrote " << path.string() << "\n";
    return 0;
}

int run_reconstruct(const std::string& init, double psi, int steps, const std::string& data_path,
                    bool simulate, long long shots, double noise_bound,
                    const std::string& noise_model, std::uint64_t seed,
                    const std::string& out_dir) {
    const auto parsed = parse_initial_state(init);
    const CoinOperator coin(psi);
    const RunPlan plan = plan_runs(parsed.state, steps, coin);
    const WalkState truth = evolve(parsed.state, coin, steps);
    std::filesystem::create_directories(out_dir);

    std::unique_ptr<MeasurementProvider> provider;
    if (!data_path.empty()) {
        const auto ms = measurements_from_json(json::parse(read_text_file(data_path)));
        provider = std::make_unique<StaticDataProvider>(ms.runs, ms.theta_star_deg, ms.r,
                                                        ms.noise_scale);
    } else if (simulate && (shots > 0 || noise_bound > 0)) {
        NoisyProviderConfig pc;
        pc.shots_per_basis = shots;
        pc.count_ratio_shots = shots;
        pc.ratio_noise_bound = noise_bound;
        pc.noise_model = noise_model_from_string(noise_model);
        pc.seed = seed;
        provider = std::make_unique<NoisyProvider>(truth, pc);
    } else {
        provider = std::make_unique<ExactProvider>(truth);
    }

    const auto rep = reconstruct_state(*provider, plan, simulate ? &truth : nullptr);
    const auto report_path = std::filesystem::path(out_dir) / "reconstruction.json";
    write_text_file(report_path.string(), report_to_json(rep).dump(2) + "\n");

    if (simulate) {
        // also emit the measurement set that produced this report
        MeasurementSet ms;
        for (double angle : plan.run_angles_deg) {
            for (int path = 0; path < 2; ++path) {
                const auto br = provider->branch_ratio(angle, path);
                RunRecord rec;
                rec.delta_theta_deg = angle;
                rec.path = path;
                rec.ratio = br.ratio;
                rec.c1_zero = br.c1_zero;
                if (path == 0) {
                    const double r = provider->count_ratio(angle);
                    if (std::isfinite(r)) rec.count_ratio = r;
                }
                ms.runs.push_back(rec);
            }
        }
        ms.theta_star_deg = rep.theta_star_deg;
        ms.r = rep.count_ratio_at_theta_star;
        ms.noise_scale = provider->ratio_noise_scale();
        const auto data_out = std::filesystem::path(out_dir) / "measurements.json";
        write_text_file(data_out.string(), measurements_to_json(ms).dump(2) + "\n");
        std::cout << "wrote " << data_out.string() << "\n";
    }
    std::cout << "wrote " << report_path.string() << "\n";
    if (rep.has_truth)
        std::cout << "total_variation=" << fmt_g12(rep.tv_distance)
                  << " fidelity_a=" << fmt_g12(rep.fidelity_a)
                  << " fidelity_b=" << fmt_g12(rep.fidelity_b) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete-time quantum walk simulator with polarization-encoded positions"};
    app.require_subcommand(1);

    // walk
    auto* walk_cmd = app.add_subcommand("walk", "evolve a walk and write its distribution");
    std::string walk_init = "1:0:c0";
    double walk_psi = 45.0;
    int walk_steps = 6;
    CommonOpts walk_common;
    walk_cmd->add_option("--init", walk_init, "initial state, e.g. \"0.8:-1:c0, 0.6:1:c0\"")
        ->capture_default_str();
    walk_cmd->add_option("--psi", walk_psi, "coin angle in degrees, open (0, 90)")
        ->capture_default_str();
    walk_cmd->add_option("-n,--steps", walk_steps, "number of steps")->capture_default_str();
    add_common(walk_cmd, walk_common);

    // encode
    auto* enc_cmd = app.add_subcommand("encode", "encode a coefficient vector into a qubit");
    std::string enc_scheme, enc_coeffs, enc_out = "encoded.json";
    int enc_row = 1;
    enc_cmd->add_option("--scheme", enc_scheme, "scheme JSON file")->required();
    enc_cmd->add_option("--coeffs", enc_coeffs, "coefficient JSON file")->required();
    enc_cmd->add_option("--row", enc_row, "scheme row (1-based)")->capture_default_str();
    enc_cmd->add_option("-o,--out", enc_out, "output file")->capture_default_str();

    // decode
    auto* dec_cmd = app.add_subcommand("decode", "solve coefficients from measured ratios");
    std::string dec_scheme, dec_ratios, dec_out = "decoded.json";
    dec_cmd->add_option("--scheme", dec_scheme, "scheme JSON file")->required();
    dec_cmd->add_option("--ratios", dec_ratios, "ratio JSON file")->required();
    dec_cmd->add_option("-o,--out", dec_out, "output file")->capture_default_str();

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a walk state from run data");
    std::string rec_init = "0.8:-1:c0, 0.6:1:c0", rec_data, rec_noise_model = "relative";
    double rec_psi = 45.0, rec_noise = 0.0;
    int rec_steps = 2;
    long long rec_shots = 0;
    bool rec_simulate = false;
    CommonOpts rec_common;
    rec_cmd->add_option("--init", rec_init, "initial state")->capture_default_str();
    rec_cmd->add_option("--psi", rec_psi, "coin angle (degrees)")->capture_default_str();
    rec_cmd->add_option("-n,--steps", rec_steps, "walk steps")->capture_default_str();
    rec_cmd->add_option("--data", rec_data, "measurement data JSON (replaces simulation)");
    rec_cmd->add_flag("--simulate", rec_simulate, "simulate the measurements and emit them");
    rec_cmd->add_option("--shots", rec_shots, "tomography shots per basis (0 = exact)");
    rec_cmd->add_option("--noise-bound", rec_noise, "relative ratio noise bound");
    rec_cmd->add_option("--noise-model", rec_noise_model, "relative | componentwise");
    add_common(rec_cmd, rec_common);

    // figure scenarios
    struct FigOpts {
        CLI::App* cmd = nullptr;
        CommonOpts common;
        int trials = -1;
        long long shots = -1;
        double noise_bound = -1.0;
        std::string noise_model;
        bool paper_scale = false;
        int grid = 0;
        bool overlay = false;
    };
    std::map<std::string, FigOpts> figs;
    for (const char* name : {"fig3", "fig4", "fig5", "fig6a", "fig6b"}) {
        auto& f = figs[name];
        f.cmd = app.add_subcommand(name, std::string("run the ") + name + " scenario");
        add_common(f.cmd, f.common);
        f.cmd->add_option("--trials", f.trials, "Monte-Carlo trials");
        f.cmd->add_option("--shots", f.shots, "tomography shots per basis");
        f.cmd->add_option("--noise-bound", f.noise_bound, "ratio noise bound");
        f.cmd->add_option("--noise-model", f.noise_model, "relative | componentwise");
        if (std::string(name) == "fig6a") {
            f.cmd->add_flag("--paper-scale", f.paper_scale, "1000 trials per cell");
            f.cmd->add_option("--grid", f.grid, "grid resolution per axis (default 36)");
        }
        if (std::string(name) == "fig5")
            f.cmd->add_flag("--overlay", f.overlay, "add reconstructed overlay at n=4");
    }

    // budget
    auto* bud_cmd = app.add_subcommand("budget", "photon-rate and loss arithmetic");
    PhotonBudget budget;
    budget.coupler_retention = 0.5;
    budget.extra_loss_per_two_steps = 0.4;
    budget.source_rate = 5e6;
    budget.steps = 2;
    bool bud_solve = false;
    double bud_target = 1e4;
    bud_cmd->add_option("--coupler-retention", budget.coupler_retention,
                        "fraction kept in the loop per coupler pass")
        ->capture_default_str();
    bud_cmd->add_option("--extra-loss", budget.extra_loss_per_two_steps,
                        "extra loss per two steps")
        ->capture_default_str();
    bud_cmd->add_option("--source-rate", budget.source_rate, "source events per second")
        ->capture_default_str();
    bud_cmd->add_option("--efficiency", budget.detection_efficiency, "detection efficiency")
        ->capture_default_str();
    bud_cmd->add_option("-n,--steps", budget.steps, "walk steps")->capture_default_str();
    bud_cmd->add_flag("--solve", bud_solve, "solve for the survival a target rate implies");
    bud_cmd->add_option("--target-rate", bud_target, "target detected events per second")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (walk_cmd->parsed())
            return run_walk(walk_init, walk_psi, walk_steps, walk_common.out_dir);

        if (enc_cmd->parsed()) {
            const auto scheme = scheme_from_json(json::parse(read_text_file(enc_scheme)));
            const auto coeffs = coeffs_from_json(json::parse(read_text_file(enc_coeffs)));
            const auto q = encode(coeffs, scheme, enc_row);
            json out;
            out["row"] = enc_row;
            out["c0"] = complex_to_json(q.c0);
            out["c1"] = complex_to_json(q.c1);
            out["raw_c0"] = complex_to_json(q.raw_c0);
            out["raw_c1"] = complex_to_json(q.raw_c1);
            out["nq"] = round12(q.nq);
            const auto rho = density_matrix(q);
            out["rho"] = {complex_to_json(rho(0, 0)), complex_to_json(rho(0, 1)),
                          complex_to_json(rho(1, 0)), complex_to_json(rho(1, 1))};
            write_text_file(enc_out, out.dump(2) + "\n");
            std::cout << "wrote " << enc_out << "\n";
            return 0;
        }

        if (dec_cmd->parsed()) {
            const auto scheme = scheme_from_json(json::parse(read_text_file(dec_scheme)));
            const auto j = json::parse(read_text_file(dec_ratios));
            std::vector<RatioRow> ratios;
            for (const auto& r : j.at("ratios"))
                ratios.push_back({r.at("row").get<int>(), complex_from_json(r.at("R")),
                                  r.value("c1_zero", false)});
            std::vector<int> zeros;
            if (j.contains("zero_constraints"))
                zeros = j["zero_constraints"].get<std::vector<int>>();
            const auto sys = assemble_system(ratios, scheme, zeros);
            const auto sol = solve_null(sys);
            json out;
            out["coefficients"] = coeffs_to_json(sol.coeffs);
            out["sigma_min"] = round12(sol.sigma_min);
            out["sigma_next"] = round12(sol.sigma_next);
            out["sigma_max"] = round12(sol.sigma_max);
            write_text_file(dec_out, out.dump(2) + "\n");
            std::cout << "wrote " << dec_out << "\n";
            return 0;
        }

        if (rec_cmd->parsed())
            return run_reconstruct(rec_init, rec_psi, rec_steps, rec_data, rec_simulate, rec_shots,
                                   rec_noise, rec_noise_model, rec_common.seed,
                                   rec_common.out_dir);

        for (auto& [name, f] : figs) {
            if (!f.cmd->parsed()) continue;
            ScenarioConfig cfg = load_scenario(f.common, name);
            if (name == "fig6a" && f.trials < 0 && f.common.config_path.empty())
                cfg.trials = 200;  // desk-scale default for the map
            if (f.trials >= 0) cfg.trials = f.trials;
            if (f.shots >= 0) cfg.shots_per_basis = f.shots;
            if (f.noise_bound >= 0) cfg.noise_bound = f.noise_bound;
            if (!f.noise_model.empty()) cfg.noise_model = f.noise_model;
            if (f.paper_scale) cfg.paper_scale = true;
            if (f.grid > 0) cfg.grid_theta = cfg.grid_phi = f.grid;
            if (f.overlay) cfg.overlay = true;
            if (name == "fig3") {
                run_fig3(cfg);
            } else if (name == "fig4") {
                run_fig4(cfg);
            } else if (name == "fig5") {
                sweep_alpha(cfg);
            } else if (name == "fig6a") {
                const auto res = fidelity_map(cfg);
                std::cout << "area_fraction_mean_overlap_gt_090="
                          << fmt_g12(res.area_fraction_overlap)
                          << " area_fraction_mean_fidelity_gt_090="
                          << fmt_g12(res.area_fraction_fidelity) << "\n";
            } else {
                const auto res = run_fig6b(cfg);
                std::cout << "fidelity_noiseless=" << fmt_g12(res.fidelity_noiseless)
                          << " mean_fidelity_noisy=" << fmt_g12(res.mean_fidelity_noisy) << "\n";
            }
            std::cout << "outputs in " << cfg.out_dir << "\n";
            return 0;
        }

        if (bud_cmd->parsed()) {
            std::cout << "detected_rate=" << fmt_g12(photon_budget(budget)) << " events/s\n";
            if (bud_solve) {
                const auto sol = solve_survival(bud_target, budget.source_rate,
                                                budget.detection_efficiency, budget.steps,
                                                budget.coupler_retention);
                std::cout << "implied_survival_per_two_steps="
                          << fmt_g12(sol.survival_per_two_steps)
                          << " implied_extra_loss=" << fmt_g12(sol.implied_extra_loss) << "\n";
            }
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
