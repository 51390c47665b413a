// Exact simulation of the 1D coined discrete-time quantum walk.
//
// The state is a sparse map over integer positions; each position holds the
// coin-|0> amplitude a_x and the coin-|1> amplitude b_x. One step applies
// the coin rotation S_c(psi) at every position, then shifts the coin-|1>
// amplitude to x+1 and the coin-|0> amplitude to x-1.

#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace qwalk {

using Cx = std::complex<double>;

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }

// Coin rotation [[cos, -sin], [sin, cos]]; psi restricted to the open
// interval (0, 90) degrees.
class CoinOperator {
public:
    explicit CoinOperator(double psi_deg) : psi_deg_(psi_deg) {
        if (!(psi_deg > 0.0) || !(psi_deg < 90.0))
            throw std::invalid_argument("coin angle psi must lie in (0, 90) degrees");
        c_ = std::cos(deg2rad(psi_deg));
        s_ = std::sin(deg2rad(psi_deg));
    }

    static CoinOperator hadamard() { return CoinOperator(45.0); }

    double psi_deg() const { return psi_deg_; }
    double c() const { return c_; }
    double s() const { return s_; }

    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << c_, -s_, s_, c_;
        return m;
    }

private:
    double psi_deg_;
    double c_, s_;
};

struct PositionAmps {
    Cx a{0.0, 0.0};  // coin |0>
    Cx b{0.0, 0.0};  // coin |1>
};

struct WalkState {
    std::map<int, PositionAmps> amps;

    double norm2() const;
    void normalize_check(double tol = 1e-12) const;  // throws if off unit norm

    Cx a(int x) const {
        auto it = amps.find(x);
        return it == amps.end() ? Cx{0, 0} : it->second.a;
    }
    Cx b(int x) const {
        auto it = amps.find(x);
        return it == amps.end() ? Cx{0, 0} : it->second.b;
    }
    int min_pos() const;
    int max_pos() const;
};

// Normalized basis state |x> (x) |coin>, coin amplitudes (ca, cb).
WalkState make_state(std::initializer_list<std::pair<int, PositionAmps>> entries);

using PositionDistribution = std::map<int, double>;

WalkState step(const WalkState& state, const CoinOperator& coin);
WalkState evolve(WalkState state, const CoinOperator& coin, int n);

PositionDistribution position_distribution(const WalkState& state);

// Mean and standard deviation of a position distribution.
double distribution_mean(const PositionDistribution& d);
double distribution_sigma(const PositionDistribution& d);

// s(n) = [sigma(n) - sigma(0)] / n, sigma the standard deviation.
double spread_speed(const PositionDistribution& dist_n, const PositionDistribution& dist_0, int n);

// rho_c = Tr_x |psi><psi|, a 2x2 Hermitian trace-1 matrix.
Eigen::Matrix2cd coin_reduced_density(const WalkState& state);

// E = -Tr(rho ln rho); input must be PSD within 1e-9 and trace ~ 1.
double entanglement_entropy(const Eigen::Matrix2cd& rho_c);

// n-fold convolution with the fair step {-1: 1/2, +1: 1/2}.
PositionDistribution classical_walk(const PositionDistribution& initial, int n);

}  // namespace qwalk
