#include "qwalk/reconstruct.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace qwalk {

namespace {

constexpr double kPlanGate = 1e-6;      // sigma_next / sigma_max required at plan time
constexpr double kProjectionTol = 1e-10;

Eigen::ArrayXd window_angles(const std::vector<int>& window, double theta_deg) {
    Eigen::ArrayXd th(static_cast<Eigen::Index>(window.size()));
    for (std::size_t i = 0; i < window.size(); ++i)
        th[static_cast<Eigen::Index>(i)] = deg2rad(window[i] * theta_deg);
    return th;
}

// cos(k theta) - R sin(k theta) over the window, or the sin-only fallback row
Eigen::RowVectorXcd constraint_row(const std::vector<int>& window, double theta_deg,
                                   const BranchRatio& r) {
    const Eigen::ArrayXd th = window_angles(window, theta_deg);
    Eigen::RowVectorXcd row(th.size());
    for (Eigen::Index i = 0; i < th.size(); ++i)
        row[i] = r.c1_zero ? Cx{std::sin(th[i]), 0.0}
                           : Cx{std::cos(th[i]), 0.0} - r.ratio * std::sin(th[i]);
    return row;
}

Eigen::MatrixXcd branch_system(const std::vector<std::pair<double, BranchRatio>>& ratios,
                               const std::vector<int>& window, int zero_pos) {
    const Eigen::Index n = static_cast<Eigen::Index>(window.size());
    Eigen::MatrixXcd sys(static_cast<Eigen::Index>(ratios.size()) + 1, n);
    Eigen::Index r = 0;
    for (const auto& [angle, ratio] : ratios) sys.row(r++) = constraint_row(window, angle, ratio);
    sys.row(r).setZero();
    const auto it = std::find(window.begin(), window.end(), zero_pos);
    if (it == window.end()) throw std::logic_error("boundary zero position not in window");
    sys(r, static_cast<Eigen::Index>(it - window.begin())) = Cx{1.0, 0.0};
    return sys;
}

// ratio a generic (asymmetric) placeholder state produces for one run angle
BranchRatio placeholder_ratio(const Eigen::VectorXcd& placeholder, const std::vector<int>& window,
                              double theta_deg) {
    const Eigen::ArrayXd th = window_angles(window, theta_deg);
    Cx c0{0, 0}, c1{0, 0};
    for (Eigen::Index i = 0; i < th.size(); ++i) {
        c0 += placeholder[i] * std::cos(th[i]);
        c1 += placeholder[i] * std::sin(th[i]);
    }
    if (std::abs(c1) < 1e-12) return {Cx{0, 0}, true};
    return {c0 / c1, false};
}

Eigen::VectorXcd make_placeholder(std::size_t size, std::size_t zero_idx) {
    Eigen::VectorXcd g(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i)
        g[static_cast<Eigen::Index>(i)] = std::pow(0.9, static_cast<double>(i));
    g[static_cast<Eigen::Index>(zero_idx)] = Cx{0, 0};
    g.normalize();
    return g;
}

double plan_conditioning(const std::vector<double>& angles, const std::vector<int>& window,
                         std::size_t zero_idx, int zero_pos) {
    const auto placeholder = make_placeholder(window.size(), zero_idx);
    std::vector<std::pair<double, BranchRatio>> rows;
    rows.reserve(angles.size());
    for (double a : angles) rows.emplace_back(a, placeholder_ratio(placeholder, window, a));
    const auto sys = branch_system(rows, window, zero_pos);
    const auto basis = solve_null_basis(sys, 0.0);
    return basis.sigma_max > 0.0 ? basis.sigma_next / basis.sigma_max : 0.0;
}

std::uint64_t angle_bits(double deg) { return std::bit_cast<std::uint64_t>(deg); }

}  // namespace

RunPlan plan_runs(const WalkState& initial, int n_steps, const CoinOperator& coin) {
    if (n_steps < 1) throw std::invalid_argument("plan_runs needs n >= 1");
    if (initial.amps.empty()) throw std::invalid_argument("empty initial state");
    const int kmin_s = initial.min_pos(), kmax_s = initial.max_pos();
    const int parity0 = ((kmin_s % 2) + 2) % 2;
    for (const auto& [x, amp] : initial.amps)
        if (((x % 2) + 2) % 2 != parity0)
            throw std::invalid_argument("initial support must be single-parity");

    RunPlan plan;
    plan.n_steps = n_steps;
    plan.psi_deg = coin.psi_deg();
    plan.parity = (parity0 + n_steps) % 2;
    for (int k = kmin_s - n_steps; k <= kmax_s + n_steps; ++k)
        if (((k % 2) + 2) % 2 == plan.parity) plan.window.push_back(k);
    plan.zero_a_pos = plan.window.back();
    plan.zero_b_pos = plan.window.front();
    plan.initial_distribution = position_distribution(initial);

    const int m = static_cast<int>(plan.window.size()) - 2;
    if (m > 0) {
        const std::size_t za = plan.window.size() - 1;
        // even spacing across (0, 90) with small shifts and greedy angle
        // replacement until the placeholder systems pass the conditioning gate
        static constexpr double kShifts[] = {0.0, 0.37, -0.29, 0.5, 0.13, -0.41, 0.23, -0.11};
        bool ok = false;
        for (double shift : kShifts) {
            std::vector<double> angles;
            for (int i = 1; i <= m; ++i) angles.push_back(90.0 * (i + shift) / (m + 1));
            if (plan_conditioning(angles, plan.window, za, plan.zero_a_pos) >= kPlanGate &&
                plan_conditioning(angles, plan.window, 0, plan.zero_b_pos) >= kPlanGate) {
                plan.run_angles_deg = std::move(angles);
                ok = true;
                break;
            }
        }
        if (!ok) {
            // greedy repair on the base grid: replace one angle at a time
            std::vector<double> angles;
            for (int i = 1; i <= m; ++i) angles.push_back(90.0 * i / (m + 1));
            const double golden = 0.6180339887498949;
            for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
                const int slot = attempt % m;
                angles[static_cast<std::size_t>(slot)] =
                    90.0 * std::fmod((attempt + 1) * golden, 1.0);
                ok = plan_conditioning(angles, plan.window, za, plan.zero_a_pos) >= kPlanGate &&
                     plan_conditioning(angles, plan.window, 0, plan.zero_b_pos) >= kPlanGate;
            }
            if (!ok) throw PlanningFailed("planning failed: no well-conditioned angle set found");
            plan.run_angles_deg = std::move(angles);
        }
    }

    // plan-time theta*: placeholder projections, superseded after recovery
    const auto pa = make_placeholder(plan.window.size(), plan.window.size() - 1);
    const auto pb = make_placeholder(plan.window.size(), 0);
    double best = -1.0;
    for (int i = 1; i <= 90; ++i) {
        const double cand = 90.0 * i / 91.0;
        const Eigen::ArrayXd th = window_angles(plan.window, cand);
        Cx qa{0, 0}, qb{0, 0};
        for (Eigen::Index k = 0; k < th.size(); ++k) {
            qa += pa[k] * std::cos(th[k]);
            qb += pb[k] * std::sin(th[k]);
        }
        const double score = std::min(std::abs(qa), std::abs(qb));
        if (score > best) {
            best = score;
            plan.theta_star_deg = cand;
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// providers

BranchRatio ExactProvider::branch_ratio(double dtheta_deg, int path) {
    const auto phys = encode_walk_state(state_, dtheta_deg);
    const Cx h = path == 0 ? phys.p0H : phys.p1H;
    const Cx v = path == 0 ? phys.p0V : phys.p1V;
    if (std::norm(h) + std::norm(v) < 1e-24) return {Cx{0, 0}, true};
    Rng rng(0);
    const auto rec = tomography(h, v, 0, rng, path);
    try {
        return {extract_ratio(rec.rho).value, false};
    } catch (const RatioUndefined&) {
        return {Cx{0, 0}, true};
    }
}

double ExactProvider::count_ratio(double theta_deg) {
    try {
        return path_count_ratio(encode_walk_state(state_, theta_deg));
    } catch (const RatioUndefined&) {
        return std::numeric_limits<double>::infinity();
    }
}

BranchRatio NoisyProvider::branch_ratio(double dtheta_deg, int path) {
    const auto phys = encode_walk_state(state_, dtheta_deg);
    const Cx h = path == 0 ? phys.p0H : phys.p1H;
    const Cx v = path == 0 ? phys.p0V : phys.p1V;
    if (std::norm(h) + std::norm(v) < 1e-24) return {Cx{0, 0}, true};
    Rng rng(derive_seed(cfg_.seed, {angle_bits(dtheta_deg), static_cast<std::uint64_t>(path), 1}));
    const auto rec = tomography(h, v, cfg_.shots_per_basis, rng, path);
    BranchRatio out;
    try {
        out = {extract_ratio(rec.rho).value, false};
    } catch (const RatioUndefined&) {
        return {Cx{0, 0}, true};
    }
    if (cfg_.ratio_noise_bound > 0.0)
        out.ratio = perturb_ratio(out.ratio, cfg_.ratio_noise_bound, rng, cfg_.noise_model);
    return out;
}

double NoisyProvider::count_ratio(double theta_deg) {
    const auto phys = encode_walk_state(state_, theta_deg);
    if (cfg_.count_ratio_shots == 0) {
        try {
            return path_count_ratio(phys);
        } catch (const RatioUndefined&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    const double n2 = phys.norm2();
    const double p0 = std::norm(phys.p0H) / n2;
    const double p1 = std::norm(phys.p1V) / n2;
    Rng rng(derive_seed(cfg_.seed, {angle_bits(theta_deg), 7, 2}));
    const long long n0 = rng.binomial(cfg_.count_ratio_shots, p0);
    const double p1rem = p0 < 1.0 ? p1 / (1.0 - p0) : 0.0;
    const long long n1 = rng.binomial(cfg_.count_ratio_shots - n0, std::min(p1rem, 1.0));
    if (n1 == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(n0) / static_cast<double>(n1);
}

double NoisyProvider::ratio_noise_scale() const {
    double s = cfg_.ratio_noise_bound;
    if (cfg_.shots_per_basis > 0) s += 2.0 / std::sqrt(static_cast<double>(cfg_.shots_per_basis));
    return s;
}

BranchRatio StaticDataProvider::branch_ratio(double dtheta_deg, int path) {
    for (const auto& rec : runs_)
        if (rec.path == path && std::abs(rec.delta_theta_deg - dtheta_deg) < 1e-9)
            return {rec.ratio, rec.c1_zero};
    throw std::invalid_argument("no recorded measurement for this angle/path");
}

double StaticDataProvider::count_ratio(double theta_deg) {
    if (std::abs(theta_deg - theta_star_) < 1e-9) return r_;
    for (const auto& rec : runs_)
        if (rec.count_ratio && std::abs(rec.delta_theta_deg - theta_deg) < 1e-9)
            return *rec.count_ratio;
    throw std::invalid_argument("no recorded count ratio for this angle");
}

// ---------------------------------------------------------------------------
// branch recovery and the joint count-ratio refinement

BranchRecovery recover_branch(const std::vector<std::pair<double, BranchRatio>>& ratios,
                              const RunPlan& plan, Branch which, double kappa) {
    BranchRecovery out;
    out.system = branch_system(ratios, plan.window,
                               which == Branch::A ? plan.zero_a_pos : plan.zero_b_pos);
    const auto basis = solve_null_basis(out.system, kappa);
    out.null_basis = basis.basis;
    out.sigma_min = basis.sigma_min;
    out.sigma_next = basis.sigma_next;
    out.sigma_max = basis.sigma_max;
    out.unit = basis.basis.col(0);
    fix_global_phase(out.unit);
    return out;
}

namespace {

struct RefineProblem {
    Eigen::MatrixXcd MaU, MbU;  // system rows applied to the null bases
    Eigen::MatrixXcd Aa, Bb;    // cos/sin projections of the bases at kept angles
    Eigen::VectorXd log_r;      // log of kept count ratios
};

// residuals: [Re/Im of MaU wa; Re/Im of MbU wb; centered log-ratio mismatch;
// norm penalties]. Unit-norm and global-phase gauges are left to the solver's
// thresholded least squares.
Eigen::VectorXd refine_residual(const RefineProblem& p, const Eigen::VectorXcd& wa,
                                const Eigen::VectorXcd& wb) {
    const Eigen::VectorXcd ra = p.MaU * wa;
    const Eigen::VectorXcd rb = p.MbU * wb;
    const Eigen::Index K = p.log_r.size();
    Eigen::VectorXd t(K);
    const Eigen::VectorXcd alpha = p.Aa * wa;
    const Eigen::VectorXcd beta = p.Bb * wb;
    for (Eigen::Index j = 0; j < K; ++j)
        t[j] = std::log(std::max(std::norm(alpha[j]), 1e-300)) -
               std::log(std::max(std::norm(beta[j]), 1e-300)) - p.log_r[j];
    const double tbar = K > 0 ? t.mean() : 0.0;

    Eigen::VectorXd f(2 * ra.size() + 2 * rb.size() + K + 2);
    Eigen::Index o = 0;
    f.segment(o, ra.size()) = ra.real(); o += ra.size();
    f.segment(o, ra.size()) = ra.imag(); o += ra.size();
    f.segment(o, rb.size()) = rb.real(); o += rb.size();
    f.segment(o, rb.size()) = rb.imag(); o += rb.size();
    for (Eigen::Index j = 0; j < K; ++j) f[o + j] = t[j] - tbar;
    o += K;
    f[o++] = wa.squaredNorm() - 1.0;
    f[o] = wb.squaredNorm() - 1.0;
    return f;
}

// columns: [Re wa, Im wa, Re wb, Im wb]
Eigen::MatrixXd refine_jacobian(const RefineProblem& p, const Eigen::VectorXcd& wa,
                                const Eigen::VectorXcd& wb) {
    const Eigen::Index da = wa.size(), db = wb.size();
    const Eigen::Index ma = p.MaU.rows(), mb = p.MbU.rows(), K = p.log_r.size();
    const Eigen::Index rows = 2 * ma + 2 * mb + K + 2;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, 2 * (da + db));
    const Eigen::Index ca = 0, cb = 2 * da;

    for (Eigen::Index i = 0; i < da; ++i) {
        J.block(0, ca + i, ma, 1) = p.MaU.col(i).real();
        J.block(0, ca + da + i, ma, 1) = -p.MaU.col(i).imag();
        J.block(ma, ca + i, ma, 1) = p.MaU.col(i).imag();
        J.block(ma, ca + da + i, ma, 1) = p.MaU.col(i).real();
    }
    for (Eigen::Index i = 0; i < db; ++i) {
        J.block(2 * ma, cb + i, mb, 1) = p.MbU.col(i).real();
        J.block(2 * ma, cb + db + i, mb, 1) = -p.MbU.col(i).imag();
        J.block(2 * ma + mb, cb + i, mb, 1) = p.MbU.col(i).imag();
        J.block(2 * ma + mb, cb + db + i, mb, 1) = p.MbU.col(i).real();
    }

    const Eigen::VectorXcd alpha = p.Aa * wa;
    const Eigen::VectorXcd beta = p.Bb * wb;
    const Eigen::Index lo = 2 * ma + 2 * mb;
    for (Eigen::Index j = 0; j < K; ++j) {
        const double na = std::max(std::norm(alpha[j]), 1e-300);
        const double nb = std::max(std::norm(beta[j]), 1e-300);
        for (Eigen::Index i = 0; i < da; ++i) {
            const Cx g = std::conj(alpha[j]) * p.Aa(j, i);
            J(lo + j, ca + i) = 2.0 * g.real() / na;
            J(lo + j, ca + da + i) = -2.0 * g.imag() / na;
        }
        for (Eigen::Index i = 0; i < db; ++i) {
            const Cx g = std::conj(beta[j]) * p.Bb(j, i);
            J(lo + j, cb + i) = -2.0 * g.real() / nb;
            J(lo + j, cb + db + i) = 2.0 * g.imag() / nb;
        }
    }
    if (K > 0) {  // centering
        const Eigen::RowVectorXd colmean = J.middleRows(lo, K).colwise().mean();
        J.middleRows(lo, K).rowwise() -= colmean;
    }

    const Eigen::Index no = lo + K;
    for (Eigen::Index i = 0; i < da; ++i) {
        J(no, ca + i) = 2.0 * wa[i].real();
        J(no, ca + da + i) = 2.0 * wa[i].imag();
    }
    for (Eigen::Index i = 0; i < db; ++i) {
        J(no + 1, cb + i) = 2.0 * wb[i].real();
        J(no + 1, cb + db + i) = 2.0 * wb[i].imag();
    }
    return J;
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> unpack(const Eigen::VectorXd& x, Eigen::Index da,
                                                     Eigen::Index db) {
    Eigen::VectorXcd wa(da), wb(db);
    for (Eigen::Index i = 0; i < da; ++i) wa[i] = Cx{x[i], x[da + i]};
    for (Eigen::Index i = 0; i < db; ++i) wb[i] = Cx{x[2 * da + i], x[2 * da + db + i]};
    return {wa, wb};
}

// Deterministic multistart Gauss-Newton over the degenerate subspaces.
// Returns (wa, wb) with unit norm.
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> joint_refine(const RefineProblem& p, Eigen::Index da,
                                                           Eigen::Index db) {
    const Eigen::Index nx = 2 * (da + db);
    auto sse = [&](const Eigen::VectorXd& x) {
        const auto [wa, wb] = unpack(x, da, db);
        return refine_residual(p, wa, wb).squaredNorm();
    };

    // candidate starts: the minimal-direction solution plus random draws
    std::vector<std::pair<double, Eigen::VectorXd>> cands;
    {
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nx);
        x0[0] = 1.0;
        x0[2 * da] = 1.0;
        cands.emplace_back(sse(x0), x0);
    }
    Rng rng(0x51e9a3c2b7d4f607ULL);
    const int nstart = 4000;
    for (int t = 0; t < nstart; ++t) {
        Eigen::VectorXd x(nx);
        for (Eigen::Index i = 0; i < nx; ++i) x[i] = rng.normal();
        x.head(2 * da).normalize();
        x.tail(2 * db).normalize();
        cands.emplace_back(sse(x), x);
    }
    std::sort(cands.begin(), cands.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    auto gauss_newton = [&](Eigen::VectorXd x) {
        double best = sse(x);
        for (int it = 0; it < 250; ++it) {
            const auto [wa, wb] = unpack(x, da, db);
            const Eigen::VectorXd f = refine_residual(p, wa, wb);
            const Eigen::MatrixXd J = refine_jacobian(p, wa, wb);
            Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-12);
            Eigen::VectorXd dx = svd.solve(-f);
            double lam = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 45; ++ls) {
                const double v = sse(x + lam * dx);
                if (v < best) {
                    x += lam * dx;
                    best = v;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            if (!moved || lam * dx.norm() < 1e-14) break;
        }
        return std::make_pair(best, x);
    };

    const std::size_t ntop = std::min<std::size_t>(cands.size(), 12);
    double best_sse = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    for (std::size_t i = 0; i < ntop; ++i) {
        auto [v, x] = gauss_newton(cands[i].second);
        if (v < best_sse) {
            best_sse = v;
            best_x = x;
        }
    }
    auto [wa, wb] = unpack(best_x, da, db);
    wa.normalize();
    wb.normalize();
    return {wa, wb};
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const AmbiguousNullSpace& e) {
        throw AmbiguousNullSpace(std::string(name) + ": " + e.what());
    } catch (const RatioUndefined& e) {
        throw RatioUndefined(std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

std::pair<double, double> recover_weights(const Eigen::VectorXcd& a_unit,
                                          const Eigen::VectorXcd& b_unit,
                                          const std::vector<int>& window, double r,
                                          double theta_star_deg) {
    if (std::isinf(r)) return {1.0, 0.0};
    if (r == 0.0) return {0.0, 1.0};
    if (r < 0.0 || std::isnan(r)) throw std::invalid_argument("count ratio must be >= 0");
    const Eigen::ArrayXd th = window_angles(window, theta_star_deg);
    Cx pa{0, 0}, pb{0, 0};
    for (Eigen::Index i = 0; i < th.size(); ++i) {
        pa += a_unit[i] * std::cos(th[i]);
        pb += b_unit[i] * std::sin(th[i]);
    }
    if (std::abs(pa) < kProjectionTol || std::abs(pb) < kProjectionTol)
        throw std::invalid_argument("weight recovery degenerate; re-plan theta*");
    const double q = r * std::norm(pb) / std::norm(pa);
    if (!std::isfinite(q)) return {1.0, 0.0};
    return {std::sqrt(q / (1.0 + q)), std::sqrt(1.0 / (1.0 + q))};
}

double total_variation(const PositionDistribution& p, const PositionDistribution& q) {
    double tv = 0.0;
    for (const auto& [x, v] : p) {
        const auto it = q.find(x);
        tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
    }
    for (const auto& [x, v] : q)
        if (p.find(x) == p.end()) tv += std::abs(v);
    return 0.5 * tv;
}

ReconstructionReport reconstruct_state(MeasurementProvider& runs, const RunPlan& plan,
                                       const WalkState* truth) {
    const double kappa = std::max(1e-8, std::min(0.25, 3.0 * runs.ratio_noise_scale()));
    const std::vector<int>& win = plan.window;
    const Eigen::Index n = static_cast<Eigen::Index>(win.size());

    std::vector<std::pair<double, BranchRatio>> ratios_a, ratios_b;
    stage("measurement", [&] {
        for (double angle : plan.run_angles_deg) {
            ratios_a.emplace_back(angle, runs.branch_ratio(angle, 0));
            ratios_b.emplace_back(angle, runs.branch_ratio(angle, 1));
        }
        return 0;
    });

    BranchRecovery ra = stage("branch-a recovery",
                              [&] { return recover_branch(ratios_a, plan, Branch::A, kappa); });
    BranchRecovery rb = stage("branch-b recovery",
                              [&] { return recover_branch(ratios_b, plan, Branch::B, kappa); });

    ReconstructionReport rep;
    rep.window = win;
    rep.null_dim_a = static_cast<int>(ra.null_basis.cols());
    rep.null_dim_b = static_cast<int>(rb.null_basis.cols());
    rep.sigma_next_a = ra.sigma_next;
    rep.sigma_max_a = ra.sigma_max;
    rep.sigma_next_b = rb.sigma_next;
    rep.sigma_max_b = rb.sigma_max;

    Eigen::VectorXcd a_unit = ra.unit, b_unit = rb.unit;
    if (rep.null_dim_a * rep.null_dim_b > 1) {
        stage("joint refinement", [&] {
            RefineProblem prob;
            std::vector<double> kept_angles;
            std::vector<double> logs;
            for (std::size_t j = 0; j < plan.run_angles_deg.size(); ++j) {
                if (ratios_b[j].second.c1_zero) continue;  // path 1 dark, no usable ratio
                double r;
                try {
                    r = runs.count_ratio(plan.run_angles_deg[j]);
                } catch (const std::exception&) {
                    continue;
                }
                if (!std::isfinite(r) || r <= 0.0) continue;
                kept_angles.push_back(plan.run_angles_deg[j]);
                logs.push_back(std::log(r));
            }
            if (kept_angles.empty())
                throw AmbiguousNullSpace(
                    "degenerate branch null space and no usable per-run count ratios");

            auto normalized_rows = [&](const Eigen::MatrixXcd& sys) {
                Eigen::MatrixXcd m = sys;
                for (Eigen::Index i = 0; i < m.rows(); ++i) {
                    const double nr = m.row(i).norm();
                    if (nr > 0.0) m.row(i) /= nr;
                }
                return m;
            };
            prob.MaU = normalized_rows(ra.system) * ra.null_basis;
            prob.MbU = normalized_rows(rb.system) * rb.null_basis;
            const Eigen::Index K = static_cast<Eigen::Index>(kept_angles.size());
            Eigen::MatrixXcd cosRows(K, n), sinRows(K, n);
            for (Eigen::Index j = 0; j < K; ++j) {
                const Eigen::ArrayXd th = window_angles(win, kept_angles[static_cast<std::size_t>(j)]);
                for (Eigen::Index i = 0; i < n; ++i) {
                    cosRows(j, i) = Cx{std::cos(th[i]), 0.0};
                    sinRows(j, i) = Cx{std::sin(th[i]), 0.0};
                }
            }
            prob.Aa = cosRows * ra.null_basis;
            prob.Bb = sinRows * rb.null_basis;
            prob.log_r = Eigen::Map<Eigen::VectorXd>(logs.data(), K);

            const auto [wa, wb] = joint_refine(prob, ra.null_basis.cols(), rb.null_basis.cols());
            a_unit = ra.null_basis * wa;
            b_unit = rb.null_basis * wb;
            a_unit.normalize();
            b_unit.normalize();
            fix_global_phase(a_unit);
            fix_global_phase(b_unit);
            rep.refined = true;
            return 0;
        });
    }
    rep.a_unit = a_unit;
    rep.b_unit = b_unit;

    stage("weight recovery", [&] {
        double theta_star;
        if (const auto fixed = runs.fixed_theta_star(); fixed.has_value()) {
            theta_star = *fixed;
        } else {
            double best = -1.0;
            theta_star = plan.theta_star_deg;
            for (int i = 1; i <= 90; ++i) {
                const double cand = 90.0 * i / 91.0;
                const Eigen::ArrayXd th = window_angles(win, cand);
                Cx qa{0, 0}, qb{0, 0};
                for (Eigen::Index k = 0; k < th.size(); ++k) {
                    qa += a_unit[k] * std::cos(th[k]);
                    qb += b_unit[k] * std::sin(th[k]);
                }
                const double score = std::min(std::abs(qa), std::abs(qb));
                if (score > best) {
                    best = score;
                    theta_star = cand;
                }
            }
        }
        rep.theta_star_deg = theta_star;
        rep.count_ratio_at_theta_star = runs.count_ratio(theta_star);
        std::tie(rep.c_a, rep.c_b) =
            recover_weights(a_unit, b_unit, win, rep.count_ratio_at_theta_star, theta_star);
        return 0;
    });

    rep.a = rep.c_a * a_unit;
    rep.b = rep.c_b * b_unit;
    for (Eigen::Index i = 0; i < n; ++i)
        rep.distribution[win[static_cast<std::size_t>(i)]] = std::norm(rep.a[i]) + std::norm(rep.b[i]);
    rep.spread_speed_value =
        spread_speed(rep.distribution, plan.initial_distribution, plan.n_steps);
    {
        Cx off{0, 0};
        for (Eigen::Index i = 0; i < n; ++i) off += rep.a[i] * std::conj(rep.b[i]);
        Eigen::Matrix2cd rho;
        rho << Cx{rep.c_a * rep.c_a, 0.0}, off, std::conj(off), Cx{rep.c_b * rep.c_b, 0.0};
        rep.entropy_value = entanglement_entropy(rho);
    }

    if (truth != nullptr) {
        rep.has_truth = true;
        Eigen::VectorXcd ta(n), tb(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ta[i] = truth->a(win[static_cast<std::size_t>(i)]);
            tb[i] = truth->b(win[static_cast<std::size_t>(i)]);
        }
        const double na = ta.norm(), nb = tb.norm();
        rep.fidelity_a = na > 0 ? fidelity(ta / na, a_unit) : 1.0;
        rep.fidelity_b = nb > 0 ? fidelity(tb / nb, b_unit) : 1.0;
        const auto true_dist = position_distribution(*truth);
        rep.tv_distance = total_variation(rep.distribution, true_dist);
        rep.entropy_error =
            std::abs(rep.entropy_value - entanglement_entropy(coin_reduced_density(*truth)));
        rep.spread_error = std::abs(
            rep.spread_speed_value -
            spread_speed(true_dist, plan.initial_distribution, plan.n_steps));
    }
    return rep;
}

}  // namespace qwalk
