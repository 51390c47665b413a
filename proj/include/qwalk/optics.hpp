// Jones-calculus model of the optical loop: path (x) polarization state,
// beam-splitter coin on the paths, half-wave-plate pairs realizing the
// polarization rotations that shift the encoded walker, per-path qubit
// tomography with finite counts, and the loss/photon-rate arithmetic.

#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

#include "qwalk/rng.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

// amplitudes over path {|0>, |1>} (x) polarization {|H>, |V>}
struct PhysicalOpticalState {
    Cx p0H{0, 0}, p0V{0, 0}, p1H{0, 0}, p1V{0, 0};

    double norm2() const {
        return std::norm(p0H) + std::norm(p0V) + std::norm(p1H) + std::norm(p1V);
    }
    Eigen::Vector4cd vec() const { return {p0H, p0V, p1H, p1V}; }
    static PhysicalOpticalState from_vec(const Eigen::Vector4cd& v) {
        return {v[0], v[1], v[2], v[3]};
    }
};

// HWP at orientation theta: [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
Eigen::Matrix2d hwp_matrix(double orientation_deg);

// Polarization rotation by +dtheta on path |1> (step forward) and -dtheta on
// path |0> (step back), each composed from two HWPs (dtheta/2 resp.
// -dtheta/2, followed by a 0-degree plate). Block diagonal in path.
Eigen::Matrix4cd conditional_shift(double dtheta_deg);

// S_c(psi) acting on the path degree of freedom, identity on polarization.
Eigen::Matrix4cd coin_bs(double psi_deg);

PhysicalOpticalState physical_evolve(const PhysicalOpticalState& input, double psi_deg,
                                     double dtheta_deg, int n);

// Map a walk state onto the optical state at encoding angle dtheta:
// path0 carries sum_k a_k |k>_p, path1 carries sum_k b_k |k>_p with
// |k>_p = (cos k*dtheta, sin k*dtheta). Unnormalized by design; pass
// normalize=true to divide by N_p.
PhysicalOpticalState encode_walk_state(const WalkState& state, double dtheta_deg,
                                       bool normalize = false);

// r = |p0H|^2 / |p1V|^2, the H-projected rate in path 0 over the V-projected
// rate in path 1. total_intensity switches to |p0|^2 / |p1|^2 (sensitivity
// variant). Throws RatioUndefined when the denominator is ~ 0.
double path_count_ratio(const PhysicalOpticalState& state, bool total_intensity = false);

struct BasisCounts {
    long long plus = 0, minus = 0;
};

struct TomographyRecord {
    int path = 0;
    Eigen::Matrix2cd rho;
    long long total_counts = 0;
    BasisCounts hv, da, rl;
};

// Estimate the density matrix of one path's polarization state. shots = 0
// returns the exact pure-state rho. Otherwise counts are drawn per basis
// (H/V, D/A, R/L), the Pauli expectations inverted linearly, and the result
// projected to the nearest PSD trace-1 matrix by eigenvalue clipping.
TomographyRecord tomography(Cx comp_h, Cx comp_v, long long shots_per_basis, Rng& rng,
                            int path = 0);

Eigen::Matrix2cd project_psd_trace1(const Eigen::Matrix2cd& rho);

struct PhotonBudget {
    double coupler_retention = 0.5;       // fraction kept in the loop per coupler pass
    double extra_loss_per_two_steps = 0;  // additional loss bundled per step pair
    double source_rate = 0.0;             // events per second
    double detection_efficiency = 1.0;
    int steps = 0;
};

// Expected detected events per second after `steps`:
// rate * survival^(steps/2) * efficiency with
// survival = coupler_retention * (1 - extra_loss_per_two_steps); the photon
// meets the loop coupler once per two steps. Odd step counts use the
// fractional exponent.
double photon_budget(const PhotonBudget& b);

// Per-two-step survival that a given detected rate implies, plus the extra
// loss beyond the coupler. Inverts the budget formula; the paper-style
// headline numbers are under-specified, so this solves rather than asserts.
struct ImpliedSurvival {
    double survival_per_two_steps = 0.0;
    double implied_extra_loss = 0.0;
};
ImpliedSurvival solve_survival(double target_rate, double source_rate, double detection_efficiency,
                               int steps, double coupler_retention);

}  // namespace qwalk
