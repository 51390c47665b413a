// Scenario runners: walk coefficient tables with Monte-Carlo error bars,
// the spread-speed / entropy sweep over initial superpositions, the
// encoding fidelity map, and the 16-dimensional uniform-state demo.
// Each runner returns its tables and writes plot-ready CSV plus a JSON
// summary (config echo included) under the configured output directory.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qwalk/io.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/reconstruct.hpp"

namespace qwalk {

struct ScenarioConfig {
    std::string scenario = "custom";  // fig3 | fig4 | fig5 | fig6a | fig6b | custom
    double psi_deg = 45.0;
    std::string init;                 // initial-state mini-language; empty = scenario default
    std::vector<int> steps;           // scenario default when empty
    int alpha_count = 41;
    double alpha_min = -0.98, alpha_max = 0.98;
    std::string noise_model = "relative";  // relative | componentwise
    double noise_bound = 0.10;
    long long shots_per_basis = 100000;
    int trials = 100;
    std::uint64_t master_seed = 12345;
    std::string out_dir = ".";
    unsigned threads = 0;             // 0 = hardware concurrency
    int grid_theta = 36, grid_phi = 36;
    bool paper_scale = false;         // fig6a: 1000 trials instead of 200
    bool overlay = false;             // fig5: reconstructed overlay at n = 4
    bool write_files = true;
};

json config_to_json(const ScenarioConfig& c);
ScenarioConfig config_from_json(const json& j);
NoiseModel noise_model_from_string(const std::string& s);

// one position of one step-count table: theory amplitudes plus per-trial
// statistics of the reconstructed amplitudes (aligned to the truth's branch
// phase) and of the reconstructed probability
struct FigTableRow {
    int n = 0;
    int pos = 0;
    Cx theory_a, theory_b;
    double theory_prob = 0.0;
    double a_re_mean = 0, a_re_std = 0, a_im_mean = 0, a_im_std = 0;
    double b_re_mean = 0, b_re_std = 0, b_im_mean = 0, b_im_std = 0;
    double prob_mean = 0, prob_std = 0;
};

struct FigTableResult {
    std::vector<FigTableRow> rows;
    json summary;
};

FigTableResult run_fig3(const ScenarioConfig& cfg);
FigTableResult run_fig4(const ScenarioConfig& cfg);

struct Fig5Row {
    double alpha = 0.0;
    std::map<int, double> s_quantum, entropy, s_classical;
};

struct Fig5Result {
    std::vector<Fig5Row> rows;
    // optional reconstructed overlay at n = 4
    std::vector<std::array<double, 5>> overlay;  // alpha, s_mean, s_std, E_mean, E_std
    json summary;
};

Fig5Result sweep_alpha(const ScenarioConfig& cfg);

struct Fig6aCell {
    double dtheta_deg = 0, dphi_deg = 0;
    double mean_fidelity = 0, std_fidelity = 0;   // |<truth|rec>|^2
    double mean_overlap = 0, std_overlap = 0;     // |<truth|rec>|
    int trials = 0;
    int failures = 0;
    std::string status = "ok";
};

struct Fig6aResult {
    std::vector<Fig6aCell> cells;
    double area_fraction_overlap = 0;   // mean overlap > 0.90
    double area_fraction_fidelity = 0;  // mean squared fidelity > 0.90
    double area_fraction_fid_081 = 0;   // mean squared fidelity > 0.81
    json summary;
};

Fig6aResult fidelity_map(const ScenarioConfig& cfg);

struct Fig6bResult {
    Eigen::VectorXcd recovered;  // noiseless reconstruction of the uniform state
    double fidelity_noiseless = 0;
    double mean_fidelity_noisy = 0, std_fidelity_noisy = 0;
    json summary;
};

Fig6bResult run_fig6b(const ScenarioConfig& cfg);

// initial state of the spread-speed sweep:
// (alpha |-1> + sqrt(1-alpha^2) |+1>) (x) (|0> + i|1>)/sqrt(2)
WalkState fig5_initial(double alpha);

// walk distribution as CSV ("position,probability")
std::string distribution_csv(const PositionDistribution& d);

}  // namespace qwalk
