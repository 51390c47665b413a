// End-to-end state reconstruction for an n-step walk: plan the set of
// encoding angles, recover the per-branch unit coefficient vectors from
// measured qubit ratios, recover the branch weights from the path count
// ratio, and assemble the reconstructed state and its observables.
//
// Real branch states can carry exactly degenerate null spaces (impostor
// states that reproduce every ratio measurement at every angle). When that
// happens the per-run path count ratios, which every run provides anyway,
// discriminate the candidates; reconstruct_state then refines the branch
// pair jointly over the degenerate subspaces.

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/encoding.hpp"
#include "qwalk/optics.hpp"
#include "qwalk/rng.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

struct PlanningFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunPlan {
    int n_steps = 0;
    double psi_deg = 45.0;
    std::vector<int> window;       // parity-valid reachable positions, ascending
    int parity = 0;                // occupied-position parity after n steps
    int zero_a_pos = 0;            // boundary zero a_{k_max} = 0
    int zero_b_pos = 0;            // boundary zero b_{k_min} = 0
    std::vector<double> run_angles_deg;
    double theta_star_deg = 0.0;   // plan-time placeholder; re-picked after recovery
    PositionDistribution initial_distribution;
};

RunPlan plan_runs(const WalkState& initial, int n_steps, const CoinOperator& coin);

struct BranchRatio {
    Cx ratio{0.0, 0.0};
    bool c1_zero = false;  // row degenerated to the constraint C1 = 0
};

// Source of measured data for one reconstruction. Implementations simulate
// the optics exactly, simulate them with finite counts and ratio noise, or
// replay a recorded data file.
class MeasurementProvider {
public:
    virtual ~MeasurementProvider() = default;

    // ratio C0/C1 of the path's polarization state after the walk run at
    // encoding angle dtheta (path 0 reads the a branch, path 1 the b branch)
    virtual BranchRatio branch_ratio(double dtheta_deg, int path) = 0;

    // photon count ratio between path 0 (H-projected) and path 1
    // (V-projected) for a run at the given angle; +inf when path 1 is dark
    virtual double count_ratio(double theta_deg) = 0;

    // data files carry one fixed weight-recovery angle; simulations re-pick
    virtual std::optional<double> fixed_theta_star() const { return std::nullopt; }

    // rough relative scale of the ratio errors; widens the degenerate-
    // subspace capture threshold
    virtual double ratio_noise_scale() const { return 0.0; }
};

// Noise-free measurements computed from the final walk state.
class ExactProvider : public MeasurementProvider {
public:
    explicit ExactProvider(WalkState final_state) : state_(std::move(final_state)) {}
    BranchRatio branch_ratio(double dtheta_deg, int path) override;
    double count_ratio(double theta_deg) override;
    const WalkState& state() const { return state_; }

private:
    WalkState state_;
};

struct NoisyProviderConfig {
    long long shots_per_basis = 0;   // 0 = exact tomography
    long long count_ratio_shots = 0; // 0 = exact count ratio
    double ratio_noise_bound = 0.0;  // multiplicative ratio perturbation
    NoiseModel noise_model = NoiseModel::RelativeReal;
    std::uint64_t seed = 0;
};

// Finite-count tomography per path plus optional multiplicative ratio
// noise. Every draw comes from a stream derived from (seed, angle, purpose)
// so results do not depend on call order.
class NoisyProvider : public MeasurementProvider {
public:
    NoisyProvider(WalkState final_state, NoisyProviderConfig cfg)
        : state_(std::move(final_state)), cfg_(cfg) {}
    BranchRatio branch_ratio(double dtheta_deg, int path) override;
    double count_ratio(double theta_deg) override;
    double ratio_noise_scale() const override;

private:
    WalkState state_;
    NoisyProviderConfig cfg_;
};

struct RunRecord {
    double delta_theta_deg = 0.0;
    int path = 0;
    Cx ratio{0.0, 0.0};
    bool c1_zero = false;
    std::optional<double> count_ratio;  // per-run r, when recorded
};

// Replays a recorded measurement set (see io.hpp for the JSON format).
class StaticDataProvider : public MeasurementProvider {
public:
    StaticDataProvider(std::vector<RunRecord> runs, double theta_star_deg, double r,
                       double noise_scale = 0.0)
        : runs_(std::move(runs)), theta_star_(theta_star_deg), r_(r), noise_scale_(noise_scale) {}
    BranchRatio branch_ratio(double dtheta_deg, int path) override;
    double count_ratio(double theta_deg) override;
    std::optional<double> fixed_theta_star() const override { return theta_star_; }
    double ratio_noise_scale() const override { return noise_scale_; }

private:
    std::vector<RunRecord> runs_;
    double theta_star_;
    double r_;
    double noise_scale_;
};

enum class Branch { A, B };

struct BranchRecovery {
    Eigen::VectorXcd unit;       // minimal-direction solution, phase-fixed
    Eigen::MatrixXcd null_basis; // columns span the weakly-determined subspace
    Eigen::MatrixXcd system;     // assembled (unnormalized) system
    double sigma_min = 0.0, sigma_next = 0.0, sigma_max = 0.0;
};

BranchRecovery recover_branch(const std::vector<std::pair<double, BranchRatio>>& ratios,
                              const RunPlan& plan, Branch which, double kappa = 1e-8);

// Closed-form weights from the count ratio r at theta_star:
// q = r |sum b' sin|^2 / |sum a' cos|^2, C_a = sqrt(q/(1+q)), C_b = sqrt(1/(1+q)).
// r = +inf gives (1, 0); r = 0 gives (0, 1).
std::pair<double, double> recover_weights(const Eigen::VectorXcd& a_unit,
                                          const Eigen::VectorXcd& b_unit,
                                          const std::vector<int>& window, double r,
                                          double theta_star_deg);

struct ReconstructionReport {
    std::vector<int> window;
    Eigen::VectorXcd a_unit, b_unit;
    double c_a = 0.0, c_b = 0.0;
    Eigen::VectorXcd a, b;  // assembled amplitudes C_a a'_k, C_b b'_k
    PositionDistribution distribution;
    double spread_speed_value = 0.0;
    double entropy_value = 0.0;
    double theta_star_deg = 0.0;
    double count_ratio_at_theta_star = 0.0;

    int null_dim_a = 1, null_dim_b = 1;
    double sigma_next_a = 0.0, sigma_max_a = 0.0;
    double sigma_next_b = 0.0, sigma_max_b = 0.0;
    bool refined = false;

    bool has_truth = false;
    double fidelity_a = 0.0, fidelity_b = 0.0;
    double tv_distance = 0.0, entropy_error = 0.0, spread_error = 0.0;
};

ReconstructionReport reconstruct_state(MeasurementProvider& runs, const RunPlan& plan,
                                       const WalkState* truth = nullptr);

// Total variation distance between two distributions.
double total_variation(const PositionDistribution& p, const PositionDistribution& q);

}  // namespace qwalk
