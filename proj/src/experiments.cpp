#include "qwalk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <sstream>

namespace qwalk {

namespace {

unsigned resolve_threads(const ScenarioConfig& cfg) {
    return cfg.threads == 0 ? default_threads() : cfg.threads;
}

void validate_common(const ScenarioConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.shots_per_basis < 0) throw std::invalid_argument("config: shots_per_basis must be >= 0");
    if (cfg.noise_bound < 0.0 || cfg.noise_bound >= 1.0)
        throw std::invalid_argument("config: noise_bound must lie in [0, 1)");
    for (int n : cfg.steps)
        if (n < 1) throw std::invalid_argument("config: step counts must be >= 1");
    noise_model_from_string(cfg.noise_model);
}

void ensure_out_dir(const ScenarioConfig& cfg) {
    if (cfg.write_files) std::filesystem::create_directories(cfg.out_dir);
}

void write_output(const ScenarioConfig& cfg, const std::string& name, const std::string& text) {
    if (!cfg.write_files) return;
    write_text_file((std::filesystem::path(cfg.out_dir) / name).string(), text);
}

struct RunningStats {
    double sum = 0.0, sum2 = 0.0;
    long long n = 0;
    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double stddev() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(sum2 / n - m * m, 0.0) * (static_cast<double>(n) / (n - 1)));
    }
};

// align `vec` so its overlap with `reference` is real positive
Eigen::VectorXcd phase_align(const Eigen::VectorXcd& vec, const Eigen::VectorXcd& reference) {
    const Cx ov = vec.dot(reference);  // conj(vec) . reference
    const double mag = std::abs(ov);
    if (mag < 1e-12) return vec;
    return vec * (ov / mag);
}

std::string scenario_default_init(const std::string& scenario) {
    if (scenario == "fig4") return "0.6:-2:c0, 1:0:c0, 0.8:2:c0";
    return "0.8:-1:c0, 0.6:1:c0";  // fig3
}

FigTableResult run_fig_table(const ScenarioConfig& cfg, const std::string& tag,
                             const std::vector<int>& default_steps) {
    ScenarioConfig c = cfg;
    if (c.init.empty()) c.init = scenario_default_init(tag);
    if (c.steps.empty()) c.steps = default_steps;
    validate_common(c);
    ensure_out_dir(c);

    const CoinOperator coin(c.psi_deg);
    const WalkState initial = parse_initial_state(c.init).state;
    const NoiseModel model = noise_model_from_string(c.noise_model);

    FigTableResult result;
    json step_summaries = json::array();
    for (std::size_t si = 0; si < c.steps.size(); ++si) {
        const int n = c.steps[si];
        const WalkState truth = evolve(initial, coin, n);
        const RunPlan plan = plan_runs(initial, n, coin);
        const Eigen::Index P = static_cast<Eigen::Index>(plan.window.size());

        Eigen::VectorXcd ta(P), tb(P);
        for (Eigen::Index i = 0; i < P; ++i) {
            ta[i] = truth.a(plan.window[static_cast<std::size_t>(i)]);
            tb[i] = truth.b(plan.window[static_cast<std::size_t>(i)]);
        }
        const Eigen::VectorXcd ta_hat = ta.normalized(), tb_hat = tb.normalized();

        // per-trial reconstructions, deterministic per (step, trial) seeds
        std::vector<Eigen::VectorXcd> rec_a(static_cast<std::size_t>(c.trials)),
            rec_b(static_cast<std::size_t>(c.trials));
        std::vector<int> failed(static_cast<std::size_t>(c.trials), 0);
        parallel_for(static_cast<std::size_t>(c.trials), resolve_threads(c), [&](std::size_t t) {
            NoisyProviderConfig pc;
            pc.shots_per_basis = c.shots_per_basis;
            pc.count_ratio_shots = c.shots_per_basis;
            pc.ratio_noise_bound = c.noise_bound > 0 && c.shots_per_basis == 0 ? c.noise_bound : 0.0;
            pc.noise_model = model;
            pc.seed = derive_seed(c.master_seed, {static_cast<std::uint64_t>(n), t});
            NoisyProvider prov(truth, pc);
            try {
                const auto rep = reconstruct_state(prov, plan);
                rec_a[t] = rep.c_a * phase_align(rep.a_unit, ta_hat);
                rec_b[t] = rep.c_b * phase_align(rep.b_unit, tb_hat);
            } catch (const std::exception&) {
                failed[t] = 1;
            }
        });

        int ok_trials = 0;
        std::vector<RunningStats> sa_re(P), sa_im(P), sb_re(P), sb_im(P), sp(P);
        for (int t = 0; t < c.trials; ++t) {
            if (failed[static_cast<std::size_t>(t)]) continue;
            ++ok_trials;
            const auto& va = rec_a[static_cast<std::size_t>(t)];
            const auto& vb = rec_b[static_cast<std::size_t>(t)];
            for (Eigen::Index i = 0; i < P; ++i) {
                sa_re[i].add(va[i].real());
                sa_im[i].add(va[i].imag());
                sb_re[i].add(vb[i].real());
                sb_im[i].add(vb[i].imag());
                sp[i].add(std::norm(va[i]) + std::norm(vb[i]));
            }
        }

        for (Eigen::Index i = 0; i < P; ++i) {
            FigTableRow row;
            row.n = n;
            row.pos = plan.window[static_cast<std::size_t>(i)];
            row.theory_a = ta[i];
            row.theory_b = tb[i];
            row.theory_prob = std::norm(ta[i]) + std::norm(tb[i]);
            row.a_re_mean = sa_re[i].mean();
            row.a_re_std = sa_re[i].stddev();
            row.a_im_mean = sa_im[i].mean();
            row.a_im_std = sa_im[i].stddev();
            row.b_re_mean = sb_re[i].mean();
            row.b_re_std = sb_re[i].stddev();
            row.b_im_mean = sb_im[i].mean();
            row.b_im_std = sb_im[i].stddev();
            row.prob_mean = sp[i].mean();
            row.prob_std = sp[i].stddev();
            result.rows.push_back(row);
        }
        step_summaries.push_back({{"n", n}, {"trials_ok", ok_trials}, {"trials", c.trials}});
    }

    std::ostringstream csv;
    csv << "n,position,theory_a_re,theory_a_im,theory_b_re,theory_b_im,theory_prob,"
           "rec_a_re_mean,rec_a_re_std,rec_a_im_mean,rec_a_im_std,"
           "rec_b_re_mean,rec_b_re_std,rec_b_im_mean,rec_b_im_std,rec_prob_mean,rec_prob_std\n";
    for (const auto& r : result.rows) {
        csv << r.n << ',' << r.pos << ',' << fmt_g12(r.theory_a.real()) << ','
            << fmt_g12(r.theory_a.imag()) << ',' << fmt_g12(r.theory_b.real()) << ','
            << fmt_g12(r.theory_b.imag()) << ',' << fmt_g12(r.theory_prob) << ','
            << fmt_g12(r.a_re_mean) << ',' << fmt_g12(r.a_re_std) << ',' << fmt_g12(r.a_im_mean)
            << ',' << fmt_g12(r.a_im_std) << ',' << fmt_g12(r.b_re_mean) << ','
            << fmt_g12(r.b_re_std) << ',' << fmt_g12(r.b_im_mean) << ',' << fmt_g12(r.b_im_std)
            << ',' << fmt_g12(r.prob_mean) << ',' << fmt_g12(r.prob_std) << '\n';
    }
    write_output(c, tag + ".csv", csv.str());

    result.summary["config"] = config_to_json(c);
    result.summary["steps"] = step_summaries;
    write_output(c, tag + "_summary.json", result.summary.dump(2) + "\n");
    return result;
}

}  // namespace

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["psi_deg"] = c.psi_deg;
    j["init"] = c.init;
    j["steps"] = c.steps;
    j["alpha_count"] = c.alpha_count;
    j["alpha_min"] = c.alpha_min;
    j["alpha_max"] = c.alpha_max;
    j["noise_model"] = c.noise_model;
    j["noise_bound"] = c.noise_bound;
    j["shots_per_basis"] = c.shots_per_basis;
    j["trials"] = c.trials;
    j["master_seed"] = c.master_seed;
    j["out_dir"] = c.out_dir;
    j["threads"] = c.threads;
    j["grid_theta"] = c.grid_theta;
    j["grid_phi"] = c.grid_phi;
    j["paper_scale"] = c.paper_scale;
    j["overlay"] = c.overlay;
    return j;
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    c.scenario = j.value("scenario", c.scenario);
    c.psi_deg = j.value("psi_deg", c.psi_deg);
    c.init = j.value("init", c.init);
    c.steps = j.value("steps", c.steps);
    c.alpha_count = j.value("alpha_count", c.alpha_count);
    c.alpha_min = j.value("alpha_min", c.alpha_min);
    c.alpha_max = j.value("alpha_max", c.alpha_max);
    c.noise_model = j.value("noise_model", c.noise_model);
    c.noise_bound = j.value("noise_bound", c.noise_bound);
    c.shots_per_basis = j.value("shots_per_basis", c.shots_per_basis);
    c.trials = j.value("trials", c.trials);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.threads = j.value("threads", c.threads);
    c.grid_theta = j.value("grid_theta", c.grid_theta);
    c.grid_phi = j.value("grid_phi", c.grid_phi);
    c.paper_scale = j.value("paper_scale", c.paper_scale);
    c.overlay = j.value("overlay", c.overlay);
    return c;
}

NoiseModel noise_model_from_string(const std::string& s) {
    if (s == "relative") return NoiseModel::RelativeReal;
    if (s == "componentwise") return NoiseModel::ComponentWise;
    throw std::invalid_argument("unknown noise model '" + s + "'");
}

FigTableResult run_fig3(const ScenarioConfig& cfg) { return run_fig_table(cfg, "fig3", {2, 4, 6}); }
FigTableResult run_fig4(const ScenarioConfig& cfg) { return run_fig_table(cfg, "fig4", {6}); }

WalkState fig5_initial(double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (-1, 1)");
    const double beta = std::sqrt(1.0 - alpha * alpha);
    const Cx c0{M_SQRT1_2, 0.0}, c1{0.0, M_SQRT1_2};
    WalkState s;
    if (alpha != 0.0) s.amps[-1] = {alpha * c0, alpha * c1};
    s.amps[+1] = {beta * c0, beta * c1};
    return s;
}

Fig5Result sweep_alpha(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    if (c.steps.empty()) c.steps = {4, 16, 50};
    validate_common(c);
    if (c.alpha_count < 1 || c.alpha_min <= -1.0 || c.alpha_max >= 1.0 || c.alpha_min > c.alpha_max)
        throw std::invalid_argument("config: alpha grid must lie inside (-1, 1)");
    ensure_out_dir(c);
    const CoinOperator coin(c.psi_deg);
    const int max_n = *std::max_element(c.steps.begin(), c.steps.end());

    Fig5Result result;
    result.rows.resize(static_cast<std::size_t>(c.alpha_count));
    parallel_for(static_cast<std::size_t>(c.alpha_count), resolve_threads(c), [&](std::size_t i) {
        const double alpha =
            c.alpha_count == 1
                ? c.alpha_min
                : c.alpha_min + (c.alpha_max - c.alpha_min) * static_cast<double>(i) / (c.alpha_count - 1);
        Fig5Row row;
        row.alpha = alpha;
        const WalkState initial = fig5_initial(alpha);
        const PositionDistribution d0 = position_distribution(initial);
        WalkState state = initial;
        for (int step_i = 1; step_i <= max_n; ++step_i) {
            state = step(state, coin);
            if (std::find(c.steps.begin(), c.steps.end(), step_i) == c.steps.end()) continue;
            const auto dist = position_distribution(state);
            row.s_quantum[step_i] = spread_speed(dist, d0, step_i);
            row.entropy[step_i] = entanglement_entropy(coin_reduced_density(state));
        }
        PositionDistribution cd{{-1, alpha * alpha}, {+1, 1.0 - alpha * alpha}};
        for (int n : c.steps)
            row.s_classical[n] = spread_speed(classical_walk(cd, n), cd, n);
        result.rows[i] = std::move(row);
    });

    if (c.overlay) {
        result.overlay.resize(static_cast<std::size_t>(c.alpha_count));
        parallel_for(static_cast<std::size_t>(c.alpha_count), resolve_threads(c), [&](std::size_t i) {
            const double alpha = result.rows[i].alpha;
            const WalkState initial = fig5_initial(alpha);
            const WalkState truth = evolve(initial, coin, 4);
            const RunPlan plan = plan_runs(initial, 4, coin);
            RunningStats ss, se;
            for (int t = 0; t < c.trials; ++t) {
                NoisyProviderConfig pc;
                pc.shots_per_basis = c.shots_per_basis;
                pc.count_ratio_shots = c.shots_per_basis;
                pc.noise_model = noise_model_from_string(c.noise_model);
                pc.seed = derive_seed(c.master_seed, {0xF165u, i, static_cast<std::uint64_t>(t)});
                NoisyProvider prov(truth, pc);
                try {
                    const auto rep = reconstruct_state(prov, plan);
                    ss.add(rep.spread_speed_value);
                    se.add(rep.entropy_value);
                } catch (const std::exception&) {
                }
            }
            result.overlay[i] = {alpha, ss.mean(), ss.stddev(), se.mean(), se.stddev()};
        });
    }

    std::ostringstream csv;
    csv << "alpha";
    for (int n : c.steps) csv << ",s_quantum_n" << n << ",entropy_n" << n << ",s_classical_n" << n;
    csv << '\n';
    for (const auto& row : result.rows) {
        csv << fmt_g12(row.alpha);
        for (int n : c.steps)
            csv << ',' << fmt_g12(row.s_quantum.at(n)) << ',' << fmt_g12(row.entropy.at(n)) << ','
                << fmt_g12(row.s_classical.at(n));
        csv << '\n';
    }
    write_output(c, "fig5.csv", csv.str());
    if (c.overlay) {
        std::ostringstream ov;
        ov << "alpha,s_mean,s_std,entropy_mean,entropy_std\n";
        for (const auto& r : result.overlay)
            ov << fmt_g12(r[0]) << ',' << fmt_g12(r[1]) << ',' << fmt_g12(r[2]) << ','
               << fmt_g12(r[3]) << ',' << fmt_g12(r[4]) << '\n';
        write_output(c, "fig5_overlay.csv", ov.str());
    }
    result.summary["config"] = config_to_json(c);
    write_output(c, "fig5_summary.json", result.summary.dump(2) + "\n");
    return result;
}

Fig6aResult fidelity_map(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    validate_common(c);
    if (c.grid_theta < 12 || c.grid_phi < 12)
        throw std::invalid_argument("config: fidelity map grid must be at least 12x12");
    const int trials = c.paper_scale ? 1000 : c.trials;
    if (trials < 50) throw std::invalid_argument("config: fidelity map needs trials >= 50");
    ensure_out_dir(c);
    const int dim = 50;
    const NoiseModel model = noise_model_from_string(c.noise_model);

    const std::size_t ncells = static_cast<std::size_t>(c.grid_theta) * c.grid_phi;
    Fig6aResult result;
    result.cells.resize(ncells);

    parallel_for(ncells, resolve_threads(c), [&](std::size_t idx) {
        const int it = static_cast<int>(idx) / c.grid_phi;
        const int ip = static_cast<int>(idx) % c.grid_phi;
        Fig6aCell cell;
        cell.dtheta_deg = (it + 0.5) * 180.0 / c.grid_theta;
        cell.dphi_deg = (ip + 0.5) * 360.0 / c.grid_phi;
        cell.trials = trials;

        const EncodingScheme scheme =
            EncodingScheme::generated(dim, cell.dtheta_deg, cell.dphi_deg, -1, /*validate=*/false);
        // cache the basis components once per cell; the per-trial system is
        // cos_t(j,k) - R_j e^{i phi} sin_t(j,k), exactly assemble_system's rows
        const int nrows = scheme.rows();
        Eigen::MatrixXcd cos_t(nrows, dim), esin_t(nrows, dim);
        for (int j = 0; j < nrows; ++j)
            for (int k = 0; k < dim; ++k) {
                const auto& pt = scheme.row(j)[static_cast<std::size_t>(k)];
                cos_t(j, k) = pt.comp0();
                esin_t(j, k) = pt.comp1();
            }
        bool dup_rays = false;
        for (int j = 0; j < nrows && !dup_rays; ++j)
            for (int p = 0; p < dim && !dup_rays; ++p)
                for (int q = p + 1; q < dim; ++q)
                    if (std::norm(std::conj(cos_t(j, p)) * cos_t(j, q) +
                                  std::conj(esin_t(j, p)) * esin_t(j, q)) > 1.0 - 1e-12) {
                        dup_rays = true;
                        break;
                    }

        RunningStats sfid, sov;
        Eigen::MatrixXcd system(nrows, dim);
        for (int t = 0; t < trials; ++t) {
            Rng rng(derive_seed(c.master_seed, {idx, static_cast<std::uint64_t>(t)}));
            const Eigen::VectorXcd truth = haar_state(dim, rng);
            const Eigen::VectorXcd c0 = cos_t * truth;
            const Eigen::VectorXcd c1 = esin_t * truth;
            for (int j = 0; j < nrows; ++j) {
                // same degenerate-row rule as encode + extract_ratio: the row
                // falls back to the sin-only constraint when both density-
                // matrix denominators |rho21|, |rho22| vanish (C1 ~ 0)
                const double nq2 = std::norm(c0[j]) + std::norm(c1[j]);
                const double u = nq2 > 0 ? std::abs(c0[j]) / std::sqrt(nq2) : 0.0;
                const double v = nq2 > 0 ? std::abs(c1[j]) / std::sqrt(nq2) : 0.0;
                if (nq2 < 1e-24 || (u * v < 1e-10 && v * v < 1e-10)) {
                    system.row(j) = esin_t.row(j);
                    continue;
                }
                Cx ratio = c0[j] / c1[j];
                if (c.noise_bound > 0.0) ratio = perturb_ratio(ratio, c.noise_bound, rng, model);
                system.row(j) = cos_t.row(j) - ratio * esin_t.row(j);
            }
            double fid = 0.0;
            try {
                fid = fidelity(truth, solve_null(system).coeffs);
            } catch (const AmbiguousNullSpace&) {
                ++cell.failures;  // counted as fidelity 0
            }
            sfid.add(fid);
            sov.add(std::sqrt(fid));
        }
        cell.mean_fidelity = sfid.mean();
        cell.std_fidelity = sfid.stddev();
        cell.mean_overlap = sov.mean();
        cell.std_overlap = sov.stddev();
        if (cell.failures > 0)
            cell.status = "ambiguous-null-space:" + std::to_string(cell.failures);
        else if (dup_rays)
            cell.status = "duplicate-rays";
        result.cells[idx] = std::move(cell);
    });

    int over_ov = 0, over_sq = 0, over_sq081 = 0, degenerate = 0;
    for (const auto& cell : result.cells) {
        if (cell.mean_overlap > 0.90) ++over_ov;
        if (cell.mean_fidelity > 0.90) ++over_sq;
        if (cell.mean_fidelity > 0.81) ++over_sq081;
        if (cell.failures > 0) ++degenerate;
    }
    const double nc = static_cast<double>(ncells);
    result.area_fraction_overlap = over_ov / nc;
    result.area_fraction_fidelity = over_sq / nc;
    result.area_fraction_fid_081 = over_sq081 / nc;

    std::ostringstream csv;
    csv << "dtheta_deg,dphi_deg,mean_fidelity,std_fidelity,mean_overlap,std_overlap,trials,"
           "failures,status\n";
    for (const auto& cell : result.cells)
        csv << fmt_g12(cell.dtheta_deg) << ',' << fmt_g12(cell.dphi_deg) << ','
            << fmt_g12(cell.mean_fidelity) << ',' << fmt_g12(cell.std_fidelity) << ','
            << fmt_g12(cell.mean_overlap) << ',' << fmt_g12(cell.std_overlap) << ','
            << cell.trials << ',' << cell.failures << ',' << cell.status << '\n';
    write_output(c, "fig6a.csv", csv.str());

    result.summary["config"] = config_to_json(c);
    result.summary["trials_per_cell"] = trials;
    result.summary["area_fraction_mean_overlap_gt_090"] = round12(result.area_fraction_overlap);
    result.summary["area_fraction_mean_fidelity_gt_090"] = round12(result.area_fraction_fidelity);
    result.summary["area_fraction_mean_fidelity_gt_081"] = round12(result.area_fraction_fid_081);
    result.summary["cells_with_failures"] = degenerate;
    write_output(c, "fig6a_summary.json", result.summary.dump(2) + "\n");
    return result;
}

Fig6bResult run_fig6b(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    validate_common(c);
    ensure_out_dir(c);
    const int dim = 16;
    const auto scheme = EncodingScheme::generated(dim, 22.0, 12.0);
    const Eigen::VectorXcd uniform = Eigen::VectorXcd::Constant(dim, Cx{0.25, 0.0});
    const NoiseModel model = noise_model_from_string(c.noise_model);

    Fig6bResult result;
    result.recovered = decode_from_ratios(measure_ratios(uniform, scheme), scheme);
    result.fidelity_noiseless = fidelity(uniform, result.recovered);

    RunningStats stats;
    for (int t = 0; t < c.trials; ++t) {
        Rng rng(derive_seed(c.master_seed, {0xF16Bu, static_cast<std::uint64_t>(t)}));
        auto ratios = measure_ratios(uniform, scheme);
        for (auto& rr : ratios)
            if (!rr.c1_zero) rr.ratio = perturb_ratio(rr.ratio, c.noise_bound, rng, model);
        try {
            stats.add(fidelity(uniform, decode_from_ratios(ratios, scheme)));
        } catch (const AmbiguousNullSpace&) {
            stats.add(0.0);
        }
    }
    result.mean_fidelity_noisy = stats.mean();
    result.std_fidelity_noisy = stats.stddev();

    std::ostringstream csv;
    csv << "k,recovered_re,recovered_im,truth_re,truth_im\n";
    for (int k = 0; k < dim; ++k)
        csv << (k + 1) << ',' << fmt_g12(result.recovered[k].real()) << ','
            << fmt_g12(result.recovered[k].imag()) << ',' << fmt_g12(uniform[k].real()) << ','
            << fmt_g12(uniform[k].imag()) << '\n';
    write_output(c, "fig6b.csv", csv.str());

    result.summary["config"] = config_to_json(c);
    result.summary["fidelity_noiseless"] = round12(result.fidelity_noiseless);
    result.summary["mean_fidelity_noisy"] = round12(result.mean_fidelity_noisy);
    result.summary["std_fidelity_noisy"] = round12(result.std_fidelity_noisy);
    write_output(c, "fig6b_summary.json", result.summary.dump(2) + "\n");
    return result;
}

std::string distribution_csv(const PositionDistribution& d) {
    std::ostringstream csv;
    csv << "position,probability\n";
    for (const auto& [x, p] : d) csv << x << ',' << fmt_g12(p) << '\n';
    return csv.str();
}

}  // namespace qwalk
