#include "doctest.h"

#include "oracles.hpp"
#include "qwalk/reconstruct.hpp"

using namespace qwalk;
using qwalk::testing::random_walk_state;

namespace {

const WalkState kFig3Initial =
    make_state({{-1, {Cx{0.8, 0}, Cx{0, 0}}}, {1, {Cx{0.6, 0}, Cx{0, 0}}}});

WalkState fig4_initial() {
    const double s2 = M_SQRT1_2;
    return make_state({{-2, {Cx{0.6 * s2, 0}, Cx{0, 0}}},
                       {0, {Cx{s2, 0}, Cx{0, 0}}},
                       {2, {Cx{0.8 * s2, 0}, Cx{0, 0}}}});
}

ReconstructionReport reconstruct_exact(const WalkState& initial, int n, double psi = 45.0) {
    const CoinOperator coin(psi);
    const WalkState truth = evolve(initial, coin, n);
    const RunPlan plan = plan_runs(initial, n, coin);
    ExactProvider provider(truth);
    return reconstruct_state(provider, plan, &truth);
}

}  // namespace

TEST_CASE("plan_runs windows, parity, and boundary zeros") {
    const CoinOperator coin = CoinOperator::hadamard();
    SUBCASE("6 steps from {-1, +1}") {
        const auto plan = plan_runs(kFig3Initial, 6, coin);
        CHECK(plan.window.front() == -7);
        CHECK(plan.window.back() == 7);
        CHECK(plan.window.size() == 8);  // odd positions only
        CHECK(plan.parity == 1);
        CHECK(plan.zero_a_pos == 7);
        CHECK(plan.zero_b_pos == -7);
        CHECK(plan.run_angles_deg.size() == 6);  // n runs for an n-step walk
    }
    SUBCASE("1 step from {0} needs no ratio runs") {
        const auto plan = plan_runs(make_state({{0, {Cx{1, 0}, Cx{0, 0}}}}), 1, coin);
        CHECK(plan.window == std::vector<int>{-1, 1});
        CHECK(plan.run_angles_deg.empty());
    }
    SUBCASE("6 steps from {-2, 0, 2} has even parity window [-8, 8]") {
        const auto plan = plan_runs(fig4_initial(), 6, coin);
        CHECK(plan.window.front() == -8);
        CHECK(plan.window.back() == 8);
        CHECK(plan.window.size() == 9);
        CHECK(plan.parity == 0);
        CHECK(plan.run_angles_deg.size() == 7);
    }
    SUBCASE("mixed-parity support is rejected") {
        const WalkState bad = make_state({{0, {Cx{1, 0}, Cx{0, 0}}}, {1, {Cx{1, 0}, Cx{0, 0}}}});
        CHECK_THROWS_AS(plan_runs(bad, 2, coin), std::invalid_argument);
    }
}

TEST_CASE("branch recovery on the noiseless 2-step walk") {
    const CoinOperator coin = CoinOperator::hadamard();
    const WalkState truth = evolve(kFig3Initial, coin, 2);
    const RunPlan plan = plan_runs(kFig3Initial, 2, coin);
    ExactProvider provider(truth);
    std::vector<std::pair<double, BranchRatio>> ra;
    for (double angle : plan.run_angles_deg) ra.emplace_back(angle, provider.branch_ratio(angle, 0));
    const auto rec = recover_branch(ra, plan, Branch::A);
    // truth a' on (-3, -1, 1): (0.4, -0.1, -0.3)/sqrt(0.26), zero at +3
    const double na = std::sqrt(0.26);
    CHECK(std::abs(rec.unit[0] - Cx{0.4 / na, 0}) < 1e-9);
    CHECK(std::abs(rec.unit[1] - Cx{-0.1 / na, 0}) < 1e-9);
    CHECK(std::abs(rec.unit[2] - Cx{-0.3 / na, 0}) < 1e-9);
    CHECK(std::abs(rec.unit[3]) < 1e-9);
}

TEST_CASE("single-unknown branch returns the unit coefficient directly") {
    
    const WalkState initial = make_state({{0, {Cx{1, 0}, Cx{0, 0}}}});
    const auto rep = reconstruct_exact(initial, 1);
    CHECK(std::abs(rep.a_unit[0] - Cx{1, 0}) < 1e-12);  // a on -1
    CHECK(std::abs(rep.b_unit[1] - Cx{1, 0}) < 1e-12);  // b on +1
    CHECK(rep.tv_distance < 1e-10);
}

TEST_CASE("weight recovery") {
    SUBCASE("q = 1 splits evenly") {
        Eigen::VectorXcd a(2), b(2);
        a << Cx{1, 0}, Cx{0, 0};
        b << Cx{0, 0}, Cx{1, 0};
        const std::vector<int> window{-1, 1};
        // pick r so that q = r |sin(theta)|^2 / |cos(theta)|^2 = 1
        const double th = 30.0;
        const double r = std::norm(std::cos(deg2rad(-th))) / std::norm(std::sin(deg2rad(th)));
        const auto [ca, cb] = recover_weights(a, b, window, r, th);
        CHECK(ca == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
        CHECK(cb == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
    }
    SUBCASE("noiseless 2-step weights are (sqrt 0.26, sqrt 0.74)") {
        const auto rep = reconstruct_exact(kFig3Initial, 2);
        CHECK(rep.c_a == doctest::Approx(std::sqrt(0.26)).epsilon(1e-9));
        CHECK(rep.c_b == doctest::Approx(std::sqrt(0.74)).epsilon(1e-9));
    }
    SUBCASE("empty b branch maps to (1, 0)") {
        Eigen::VectorXcd a(2), b(2);
        a << Cx{1, 0}, Cx{0, 0};
        b << Cx{0, 0}, Cx{1, 0};
        const auto [ca, cb] =
            recover_weights(a, b, {-1, 1}, std::numeric_limits<double>::infinity(), 30.0);
        CHECK(ca == doctest::Approx(1.0));
        CHECK(cb == doctest::Approx(0.0));
    }
}

TEST_CASE("noiseless pipeline is exact for the paper scenarios") {
    for (int n : {2, 3, 4, 5, 6}) {
        const auto rep = reconstruct_exact(kFig3Initial, n);
        CAPTURE(n);
        CHECK(rep.tv_distance < 1e-8);
        CHECK(rep.fidelity_a >= 1.0 - 1e-8);
        CHECK(rep.fidelity_b >= 1.0 - 1e-8);
        CHECK(rep.entropy_error < 1e-8);
        CHECK(rep.spread_error < 1e-8);
        CHECK(rep.c_a * rep.c_a + rep.c_b * rep.c_b == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int n : {2, 4, 6}) {
        const auto rep = reconstruct_exact(fig4_initial(), n);
        CAPTURE(n);
        CHECK(rep.tv_distance < 1e-8);
        CHECK(rep.entropy_error < 1e-8);
    }
}

TEST_CASE("noiseless pipeline on random states, both coin flavors") {
    Rng rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        WalkState s0 = random_walk_state(-2, 2, 2, rng);
        const int n = 1 + static_cast<int>(rng.raw() % 6);
        const auto rep = reconstruct_exact(s0, n);
        CAPTURE(trial);
        CAPTURE(n);
        CHECK(rep.tv_distance < 1e-8);
        CHECK(rep.entropy_error < 1e-8);
        CHECK(rep.spread_error < 1e-8);
    }
}

TEST_CASE("reconstruction without truth omits the comparison fields") {
    const CoinOperator coin = CoinOperator::hadamard();
    const WalkState truth = evolve(kFig3Initial, coin, 2);
    const RunPlan plan = plan_runs(kFig3Initial, 2, coin);
    ExactProvider provider(truth);
    const auto rep = reconstruct_state(provider, plan);
    CHECK(!rep.has_truth);
    CHECK(rep.tv_distance == 0.0);
    double total = 0.0;
    for (const auto& [x, p] : rep.distribution) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("branch ratios at +-1 percent noise keep the 2-step branch fidelity high") {
    const CoinOperator coin = CoinOperator::hadamard();
    const WalkState truth = evolve(kFig3Initial, coin, 2);
    const RunPlan plan = plan_runs(kFig3Initial, 2, coin);
    int good = 0;
    const int seeds = 100;
    for (int t = 0; t < seeds; ++t) {
        NoisyProviderConfig pc;
        pc.ratio_noise_bound = 0.01;
        pc.seed = derive_seed(777, {static_cast<std::uint64_t>(t)});
        NoisyProvider provider(truth, pc);
        const auto rep = reconstruct_state(provider, plan, &truth);
        if (rep.fidelity_a >= 0.99 && rep.fidelity_b >= 0.99) ++good;
    }
    CHECK(good == seeds);
}

TEST_CASE("graceful degradation: median TV error grows with the noise bound") {
    const CoinOperator coin = CoinOperator::hadamard();
    const WalkState truth = evolve(kFig3Initial, coin, 2);
    const RunPlan plan = plan_runs(kFig3Initial, 2, coin);
    auto median_tv = [&](double bound) {
        std::vector<double> tvs;
        for (int t = 0; t < 200; ++t) {
            NoisyProviderConfig pc;
            pc.ratio_noise_bound = bound;
            pc.seed = derive_seed(4242, {static_cast<std::uint64_t>(t)});
            NoisyProvider provider(truth, pc);
            tvs.push_back(reconstruct_state(provider, plan, &truth).tv_distance);
        }
        std::nth_element(tvs.begin(), tvs.begin() + 100, tvs.end());
        return tvs[100];
    };
    const double t1 = median_tv(0.01), t5 = median_tv(0.05), t10 = median_tv(0.10);
    CHECK(t1 <= t5);
    CHECK(t5 <= t10);
}

TEST_CASE("report observables ignore the per-branch phase convention") {
    const auto rep = reconstruct_exact(kFig3Initial, 4);
    Rng rng(55);
    for (int t = 0; t < 20; ++t) {
        // any other global phase pair the solver might have fixed
        const Cx ga = std::polar(1.0, rng.uniform(0.0, 2 * M_PI));
        const Cx gb = std::polar(1.0, rng.uniform(0.0, 2 * M_PI));
        const Eigen::VectorXcd a2 = rep.c_a * (ga * rep.a_unit);
        const Eigen::VectorXcd b2 = rep.c_b * (gb * rep.b_unit);
        PositionDistribution dist2;
        Cx off{0, 0};
        for (Eigen::Index i = 0; i < a2.size(); ++i) {
            dist2[rep.window[static_cast<std::size_t>(i)]] = std::norm(a2[i]) + std::norm(b2[i]);
            off += a2[i] * std::conj(b2[i]);
        }
        Eigen::Matrix2cd rho;
        rho << Cx{rep.c_a * rep.c_a, 0}, off, std::conj(off), Cx{rep.c_b * rep.c_b, 0};
        CHECK(total_variation(dist2, rep.distribution) < 1e-12);
        CHECK(std::abs(entanglement_entropy(rho) - rep.entropy_value) < 1e-12);
    }
}

TEST_CASE("static data provider replays a recorded measurement set") {
    const CoinOperator coin = CoinOperator::hadamard();
    const WalkState truth = evolve(kFig3Initial, coin, 2);
    const RunPlan plan = plan_runs(kFig3Initial, 2, coin);
    ExactProvider exact(truth);
    const auto base = reconstruct_state(exact, plan, &truth);

    std::vector<RunRecord> records;
    for (double angle : plan.run_angles_deg) {
        for (int path = 0; path < 2; ++path) {
            RunRecord rec;
            rec.delta_theta_deg = angle;
            rec.path = path;
            const auto br = exact.branch_ratio(angle, path);
            rec.ratio = br.ratio;
            rec.c1_zero = br.c1_zero;
            if (path == 0) rec.count_ratio = exact.count_ratio(angle);
            records.push_back(rec);
        }
    }
    StaticDataProvider replay(records, base.theta_star_deg, base.count_ratio_at_theta_star);
    const auto rep = reconstruct_state(replay, plan, &truth);
    CHECK(rep.tv_distance < 1e-8);
    CHECK(rep.theta_star_deg == doctest::Approx(base.theta_star_deg));
}
