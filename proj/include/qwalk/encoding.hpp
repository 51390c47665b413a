// Encoding of an n-dimensional state into a single qubit via families of
// non-orthogonal basis states |k> = cos(theta_k)|0> + e^{i phi_k} sin(theta_k)|1>,
// ratio read-out from the qubit density matrix, and reconstruction of the
// coefficients as the null space of the stacked homogeneous constraints.

#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/rng.hpp"
#include "qwalk/walk.hpp"  // Cx, deg2rad

namespace qwalk {

struct DegenerateEncoding : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RatioUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AmbiguousNullSpace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlochPoint {
    double theta_deg = 0.0;
    double phi_deg = 0.0;

    Cx comp0() const { return {std::cos(deg2rad(theta_deg)), 0.0}; }
    Cx comp1() const {
        return std::polar(std::sin(deg2rad(theta_deg)), deg2rad(phi_deg));
    }
};

// |<u|v>|^2 of the two pure states; 1 means the same ray.
double bloch_overlap2(const BlochPoint& u, const BlochPoint& v);

// A family of basis-point rows. Row j assigns a Bloch point to each of the
// n labels. The generated form follows theta_k^j = j*k*dtheta,
// phi_k^j = k*dphi with j = 1..rows, k = 1..n.
//
// Validation rejects schemes in which two labels coincide as rays in every
// row: no measurement can then separate them. Duplicates inside a single
// row are tolerated (other rows still distinguish the labels); rational
// generator angles produce them routinely, including the 16-dimensional
// demo parameters.
class EncodingScheme {
public:
    EncodingScheme(int n, std::vector<std::vector<BlochPoint>> rows, bool validate = true);

    static EncodingScheme generated(int n, double dtheta_deg, double dphi_deg,
                                    int rows = -1 /* default n-1 */, bool validate = true);

    int n() const { return n_; }
    int rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<BlochPoint>& row(int j) const { return rows_.at(static_cast<std::size_t>(j)); }
    const std::optional<std::pair<double, double>>& generator() const { return generator_; }

    // label pairs that coincide in every row (fatal under validation)
    std::vector<std::string> global_degeneracy_report() const;
    // per-row coinciding rays; advisory only
    std::vector<std::string> degeneracy_report() const;

private:
    int n_;
    std::vector<std::vector<BlochPoint>> rows_;
    std::optional<std::pair<double, double>> generator_;
};

struct EncodedQubit {
    Cx raw_c0, raw_c1;  // unnormalized C0, C1
    double nq = 0.0;    // sqrt(|C0|^2 + |C1|^2)
    Cx c0, c1;          // normalized pair
};

// C0 = sum a_k cos(theta_k), C1 = sum a_k e^{i phi_k} sin(theta_k).
// Throws DegenerateEncoding when the row maps the state to (numerically) zero.
EncodedQubit encode(const Eigen::VectorXcd& coeffs, const EncodingScheme& scheme, int row);
EncodedQubit encode(const Eigen::VectorXcd& coeffs, const std::vector<BlochPoint>& basis_row);

// rho = |q><q| for the normalized qubit.
Eigen::Matrix2cd density_matrix(const EncodedQubit& q);

struct RatioEstimate {
    Cx value;            // R = C0/C1
    double discrepancy;  // |rho11/rho21 - rho12/rho22| between the two routes
};

// R from the density matrix per rho11/rho21 = rho12/rho22; for non-rank-1
// inputs the two estimates are averaged with weights |rho21| and |rho22|.
// Throws RatioUndefined when both denominators vanish (C1 ~ 0); the caller
// should then use the linear constraint C1 = 0 instead of a ratio row.
RatioEstimate extract_ratio(const Eigen::Matrix2cd& rho);

// One measured ratio, or the C1 = 0 fallback constraint for a row where the
// ratio is undefined.
struct RatioRow {
    int row = 0;
    Cx ratio{0.0, 0.0};
    bool c1_zero = false;
};

// Row j of the system: cos(theta_k^j) - R^j e^{i phi_k^j} sin(theta_k^j)
// (or the sin-only row when c1_zero). Each zero constraint appends a unit
// row pinning that coefficient to zero. Throws std::invalid_argument
// ("underdetermined system") when rows + zero constraints < n - 1.
Eigen::MatrixXcd assemble_system(const std::vector<RatioRow>& ratios, const EncodingScheme& scheme,
                                 const std::vector<int>& zero_constraints = {});

struct NullSolveResult {
    Eigen::VectorXcd coeffs;   // unit norm, phase-fixed
    double sigma_min = 0.0;    // smallest singular value (0 when padded, m < n)
    double sigma_next = 0.0;   // second smallest
    double sigma_max = 0.0;
};

// Unit-norm right-singular direction of the smallest singular value, global
// phase fixed so the first coefficient with |a_k| > 1e-8 is real positive.
// Rows are normalized to unit length first, which makes the result invariant
// under nonzero complex row scalings. Throws AmbiguousNullSpace when
// sigma_next / sigma_max < 1e-8.
NullSolveResult solve_null(const Eigen::MatrixXcd& system);

// As solve_null, but instead of throwing it returns an orthonormal basis of
// every right-singular direction with sigma / sigma_max < kappa (always at
// least the minimal one). Used by the reconstruction refinement.
struct NullBasisResult {
    Eigen::MatrixXcd basis;  // n x d, first column = minimal direction
    double sigma_min = 0.0, sigma_next = 0.0, sigma_max = 0.0;
};
NullBasisResult solve_null_basis(const Eigen::MatrixXcd& system, double kappa);

void fix_global_phase(Eigen::VectorXcd& v, double mag_threshold = 1e-8);

// |<truth|recovered>|^2
double fidelity(const Eigen::VectorXcd& truth, const Eigen::VectorXcd& recovered);

enum class NoiseModel { RelativeReal, ComponentWise };

// R * (1 + eps), eps ~ U[-bound, bound]  (RelativeReal), or independent
// relative perturbations of the real and imaginary parts (ComponentWise).
Cx perturb_ratio(Cx ratio, double bound, Rng& rng, NoiseModel model = NoiseModel::RelativeReal);

Eigen::VectorXcd haar_state(int n, Rng& rng);

// Encode with every row of the scheme, read out ratios (optionally
// perturbed), and solve for the coefficients. The round trip behind the
// fidelity studies.
Eigen::VectorXcd decode_from_ratios(const std::vector<RatioRow>& ratios, const EncodingScheme& scheme,
                                    const std::vector<int>& zero_constraints = {});
std::vector<RatioRow> measure_ratios(const Eigen::VectorXcd& coeffs, const EncodingScheme& scheme);

}  // namespace qwalk
