#include "qwalk/walk.hpp"

#include <cmath>

namespace qwalk {

namespace {
constexpr double kPruneMag = 1e-15;
constexpr double kPruneMassTol = 1e-12;
}  // namespace

double WalkState::norm2() const {
    double n2 = 0.0;
    for (const auto& [x, amp] : amps) n2 += std::norm(amp.a) + std::norm(amp.b);
    return n2;
}

void WalkState::normalize_check(double tol) const {
    if (std::abs(norm2() - 1.0) > tol)
        throw std::invalid_argument("walk state is not normalized");
}

int WalkState::min_pos() const {
    if (amps.empty()) throw std::logic_error("empty walk state");
    return amps.begin()->first;
}

int WalkState::max_pos() const {
    if (amps.empty()) throw std::logic_error("empty walk state");
    return amps.rbegin()->first;
}

WalkState make_state(std::initializer_list<std::pair<int, PositionAmps>> entries) {
    WalkState s;
    for (const auto& [x, amp] : entries) {
        s.amps[x].a += amp.a;
        s.amps[x].b += amp.b;
    }
    const double n2 = s.norm2();
    if (n2 <= 0.0) throw std::invalid_argument("zero state");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& [x, amp] : s.amps) {
        amp.a *= inv;
        amp.b *= inv;
    }
    return s;
}

WalkState step(const WalkState& state, const CoinOperator& coin) {
    const double c = coin.c(), s = coin.s();
    WalkState out;
    for (const auto& [x, amp] : state.amps) {
        const Cx na = c * amp.a - s * amp.b;  // stays coin |0>, shifts to x-1
        const Cx nb = s * amp.a + c * amp.b;  // stays coin |1>, shifts to x+1
        if (na != Cx{0.0, 0.0}) out.amps[x - 1].a += na;
        if (nb != Cx{0.0, 0.0}) out.amps[x + 1].b += nb;
    }
    // prune amplitudes below threshold; pruning must not remove real weight
    double pruned_mass = 0.0;
    for (auto it = out.amps.begin(); it != out.amps.end();) {
        auto& amp = it->second;
        if (std::abs(amp.a) < kPruneMag && std::abs(amp.b) < kPruneMag) {
            pruned_mass += std::norm(amp.a) + std::norm(amp.b);
            it = out.amps.erase(it);
        } else {
            ++it;
        }
    }
    if (pruned_mass > kPruneMassTol)
        throw std::logic_error("pruning removed non-negligible probability mass");
    return out;
}

WalkState evolve(WalkState state, const CoinOperator& coin, int n) {
    if (n < 0) throw std::invalid_argument("step count must be >= 0");
    for (int i = 0; i < n; ++i) state = step(state, coin);
    return state;
}

PositionDistribution position_distribution(const WalkState& state) {
    PositionDistribution d;
    for (const auto& [x, amp] : state.amps) d[x] = std::norm(amp.a) + std::norm(amp.b);
    return d;
}

double distribution_mean(const PositionDistribution& d) {
    double m = 0.0;
    for (const auto& [x, p] : d) m += p * x;
    return m;
}

double distribution_sigma(const PositionDistribution& d) {
    double m = 0.0, m2 = 0.0;
    for (const auto& [x, p] : d) {
        m += p * x;
        m2 += p * static_cast<double>(x) * x;
    }
    return std::sqrt(std::max(m2 - m * m, 0.0));
}

double spread_speed(const PositionDistribution& dist_n, const PositionDistribution& dist_0, int n) {
    if (n < 1) throw std::invalid_argument("spread speed needs n >= 1");
    return (distribution_sigma(dist_n) - distribution_sigma(dist_0)) / n;
}

Eigen::Matrix2cd coin_reduced_density(const WalkState& state) {
    double paa = 0.0, pbb = 0.0;
    Cx off{0.0, 0.0};
    for (const auto& [x, amp] : state.amps) {
        paa += std::norm(amp.a);
        pbb += std::norm(amp.b);
        off += amp.a * std::conj(amp.b);
    }
    Eigen::Matrix2cd rho;
    rho << Cx{paa, 0.0}, off, std::conj(off), Cx{pbb, 0.0};
    return rho;
}

double entanglement_entropy(const Eigen::Matrix2cd& rho_c) {
    if (std::abs(rho_c(0, 1) - std::conj(rho_c(1, 0))) > 1e-9)
        throw std::invalid_argument("entropy input is not Hermitian");
    const double tr = rho_c(0, 0).real() + rho_c(1, 1).real();
    if (std::abs(tr - 1.0) > 1e-9) throw std::invalid_argument("entropy input trace != 1");
    // 2x2 Hermitian eigenvalues in closed form
    const double half = 0.5 * tr;
    const double diff = 0.5 * (rho_c(0, 0).real() - rho_c(1, 1).real());
    const double rad = std::sqrt(diff * diff + std::norm(rho_c(0, 1)));
    double lam[2] = {half - rad, half + rad};
    double e = 0.0;
    for (double& l : lam) {
        if (l < -1e-9 || l > 1.0 + 1e-9)
            throw std::invalid_argument("entropy input is not PSD / trace-1 within tolerance");
        l = std::min(std::max(l, 0.0), 1.0);
        if (l > 0.0) e -= l * std::log(l);
    }
    return e;
}

PositionDistribution classical_walk(const PositionDistribution& initial, int n) {
    if (n < 0) throw std::invalid_argument("step count must be >= 0");
    PositionDistribution d = initial;
    for (int i = 0; i < n; ++i) {
        PositionDistribution next;
        for (const auto& [x, p] : d) {
            next[x - 1] += 0.5 * p;
            next[x + 1] += 0.5 * p;
        }
        d.swap(next);
    }
    return d;
}

}  // namespace qwalk
