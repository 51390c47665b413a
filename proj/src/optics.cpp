#include "qwalk/optics.hpp"

#include <cmath>

#include "qwalk/encoding.hpp"  // RatioUndefined

namespace qwalk {

Eigen::Matrix2d hwp_matrix(double orientation_deg) {
    const double t2 = 2.0 * deg2rad(orientation_deg);
    Eigen::Matrix2d m;
    m << std::cos(t2), std::sin(t2), std::sin(t2), -std::cos(t2);
    return m;
}

Eigen::Matrix4cd conditional_shift(double dtheta_deg) {
    const Eigen::Matrix2d fwd = hwp_matrix(dtheta_deg / 2.0) * hwp_matrix(0.0);   // rotation +dtheta
    const Eigen::Matrix2d back = hwp_matrix(-dtheta_deg / 2.0) * hwp_matrix(0.0); // rotation -dtheta
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    u.block<2, 2>(0, 0) = back.cast<Cx>();  // path |0>: step back
    u.block<2, 2>(2, 2) = fwd.cast<Cx>();   // path |1>: step forward
    return u;
}

Eigen::Matrix4cd coin_bs(double psi_deg) {
    const CoinOperator coin(psi_deg);  // validates psi in (0, 90)
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    const Eigen::Matrix2cd eye = Eigen::Matrix2cd::Identity();
    u.block<2, 2>(0, 0) = coin.c() * eye;
    u.block<2, 2>(0, 2) = -coin.s() * eye;
    u.block<2, 2>(2, 0) = coin.s() * eye;
    u.block<2, 2>(2, 2) = coin.c() * eye;
    return u;
}

PhysicalOpticalState physical_evolve(const PhysicalOpticalState& input, double psi_deg,
                                     double dtheta_deg, int n) {
    if (n < 0) throw std::invalid_argument("step count must be >= 0");
    const Eigen::Matrix4cd u = conditional_shift(dtheta_deg) * coin_bs(psi_deg);
    Eigen::Vector4cd v = input.vec();
    for (int i = 0; i < n; ++i) v = u * v;
    return PhysicalOpticalState::from_vec(v);
}

PhysicalOpticalState encode_walk_state(const WalkState& state, double dtheta_deg, bool normalize) {
    PhysicalOpticalState out;
    for (const auto& [x, amp] : state.amps) {
        const double th = deg2rad(x * dtheta_deg);
        const double c = std::cos(th), s = std::sin(th);
        out.p0H += amp.a * c;
        out.p0V += amp.a * s;
        out.p1H += amp.b * c;
        out.p1V += amp.b * s;
    }
    if (normalize) {
        const double np = std::sqrt(out.norm2());
        if (np < 1e-12) throw DegenerateEncoding("walk state maps to zero at this encoding angle");
        Eigen::Vector4cd v = out.vec() / np;
        out = PhysicalOpticalState::from_vec(v);
    }
    return out;
}

double path_count_ratio(const PhysicalOpticalState& state, bool total_intensity) {
    const double num = total_intensity ? std::norm(state.p0H) + std::norm(state.p0V)
                                       : std::norm(state.p0H);
    const double den = total_intensity ? std::norm(state.p1H) + std::norm(state.p1V)
                                       : std::norm(state.p1V);
    if (den < 1e-20) throw RatioUndefined("ratio undefined at this theta");
    return num / den;
}

Eigen::Matrix2cd project_psd_trace1(const Eigen::Matrix2cd& rho) {
    Eigen::Matrix2cd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(herm);
    Eigen::Vector2d lam = es.eigenvalues().cwiseMax(0.0);
    const double tr = lam.sum();
    if (tr <= 0.0) return Eigen::Matrix2cd::Identity() * 0.5;
    lam /= tr;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

TomographyRecord tomography(Cx comp_h, Cx comp_v, long long shots_per_basis, Rng& rng, int path) {
    const double n2 = std::norm(comp_h) + std::norm(comp_v);
    if (n2 <= 0.0) throw std::invalid_argument("tomography branch has zero norm");
    if (shots_per_basis < 0) throw std::invalid_argument("shots must be >= 0");
    const Cx h = comp_h / std::sqrt(n2);
    const Cx v = comp_v / std::sqrt(n2);

    TomographyRecord rec;
    rec.path = path;
    if (shots_per_basis == 0) {
        rec.rho << h * std::conj(h), h * std::conj(v), v * std::conj(h), v * std::conj(v);
        return rec;
    }

    // exact Pauli expectations of the pure branch state
    const double ez = std::norm(h) - std::norm(v);
    const double ex = 2.0 * std::real(std::conj(h) * v);
    const double ey = 2.0 * std::imag(std::conj(h) * v);

    auto draw = [&](double expectation) {
        const double p_plus = 0.5 * (1.0 + expectation);
        const long long plus = rng.binomial(shots_per_basis, p_plus);
        return BasisCounts{plus, shots_per_basis - plus};
    };
    rec.hv = draw(ez);
    rec.da = draw(ex);
    rec.rl = draw(ey);
    rec.total_counts = 3 * shots_per_basis;

    auto est = [&](const BasisCounts& c) {
        return static_cast<double>(c.plus - c.minus) / static_cast<double>(shots_per_basis);
    };
    const double z = est(rec.hv), x = est(rec.da), y = est(rec.rl);
    Eigen::Matrix2cd rho;
    rho << Cx{0.5 * (1.0 + z), 0.0}, Cx{0.5 * x, -0.5 * y},
           Cx{0.5 * x, 0.5 * y}, Cx{0.5 * (1.0 - z), 0.0};
    rec.rho = project_psd_trace1(rho);
    return rec;
}

double photon_budget(const PhotonBudget& b) {
    if (b.coupler_retention < 0.0 || b.coupler_retention > 1.0 ||
        b.extra_loss_per_two_steps < 0.0 || b.extra_loss_per_two_steps > 1.0 ||
        b.detection_efficiency < 0.0 || b.detection_efficiency > 1.0)
        throw std::invalid_argument("budget fractions must lie in [0, 1]");
    if (b.steps < 0) throw std::invalid_argument("steps must be >= 0");
    const double survival = b.coupler_retention * (1.0 - b.extra_loss_per_two_steps);
    return b.source_rate * std::pow(survival, b.steps / 2.0) * b.detection_efficiency;
}

ImpliedSurvival solve_survival(double target_rate, double source_rate, double detection_efficiency,
                               int steps, double coupler_retention) {
    if (steps <= 0 || source_rate <= 0.0 || target_rate <= 0.0 || detection_efficiency <= 0.0)
        throw std::invalid_argument("solve_survival needs positive rates and steps");
    const double frac = target_rate / (source_rate * detection_efficiency);
    ImpliedSurvival out;
    out.survival_per_two_steps = std::pow(frac, 2.0 / steps);
    out.implied_extra_loss = 1.0 - out.survival_per_two_steps / coupler_retention;
    return out;
}

}  // namespace qwalk
