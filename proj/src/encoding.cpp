#include "qwalk/encoding.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

namespace qwalk {

namespace {
constexpr double kRatioDenomTol = 1e-10;
constexpr double kAmbiguityTol = 1e-8;
}  // namespace

double bloch_overlap2(const BlochPoint& u, const BlochPoint& v) {
    const Cx ov = std::conj(u.comp0()) * v.comp0() + std::conj(u.comp1()) * v.comp1();
    return std::norm(ov);
}

EncodingScheme::EncodingScheme(int n, std::vector<std::vector<BlochPoint>> rows, bool validate)
    : n_(n), rows_(std::move(rows)) {
    if (n_ < 1) throw std::invalid_argument("scheme dimension must be >= 1");
    for (const auto& row : rows_)
        if (static_cast<int>(row.size()) != n_)
            throw std::invalid_argument("scheme row length != n");
    if (validate) {
        auto report = global_degeneracy_report();
        if (!report.empty())
            throw std::invalid_argument("scheme cannot separate labels: " + report.front());
    }
}

EncodingScheme EncodingScheme::generated(int n, double dtheta_deg, double dphi_deg, int rows,
                                         bool validate) {
    if (rows < 0) rows = n - 1;
    std::vector<std::vector<BlochPoint>> rs;
    rs.reserve(static_cast<std::size_t>(rows));
    for (int j = 1; j <= rows; ++j) {
        std::vector<BlochPoint> row(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k)
            row[static_cast<std::size_t>(k - 1)] = {j * k * dtheta_deg, k * dphi_deg};
        rs.push_back(std::move(row));
    }
    EncodingScheme s(n, std::move(rs), validate);
    s.generator_ = std::make_pair(dtheta_deg, dphi_deg);
    return s;
}

std::vector<std::string> EncodingScheme::global_degeneracy_report() const {
    std::vector<std::string> out;
    if (rows_.empty()) return out;
    for (int p = 0; p < n_; ++p) {
        for (int q = p + 1; q < n_; ++q) {
            bool everywhere = true;
            for (const auto& row : rows_) {
                if (bloch_overlap2(row[static_cast<std::size_t>(p)],
                                   row[static_cast<std::size_t>(q)]) <= 1.0 - 1e-12) {
                    everywhere = false;
                    break;
                }
            }
            if (everywhere)
                out.push_back("labels " + std::to_string(p + 1) + " and " + std::to_string(q + 1) +
                              " coincide in every row");
        }
    }
    return out;
}

std::vector<std::string> EncodingScheme::degeneracy_report() const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < rows_.size(); ++j) {
        const auto& row = rows_[j];
        for (std::size_t p = 0; p < row.size(); ++p)
            for (std::size_t q = p + 1; q < row.size(); ++q)
                if (bloch_overlap2(row[p], row[q]) > 1.0 - 1e-12)
                    out.push_back("row " + std::to_string(j + 1) + ": labels " +
                                  std::to_string(p + 1) + " and " + std::to_string(q + 1));
    }
    return out;
}

EncodedQubit encode(const Eigen::VectorXcd& coeffs, const std::vector<BlochPoint>& basis_row) {
    if (coeffs.size() != static_cast<Eigen::Index>(basis_row.size()))
        throw std::invalid_argument("coefficient count != basis row size");
    Cx c0{0.0, 0.0}, c1{0.0, 0.0};
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
        const auto& pt = basis_row[static_cast<std::size_t>(k)];
        c0 += coeffs[k] * pt.comp0();
        c1 += coeffs[k] * pt.comp1();
    }
    EncodedQubit q;
    q.raw_c0 = c0;
    q.raw_c1 = c1;
    q.nq = std::sqrt(std::norm(c0) + std::norm(c1));
    if (q.nq < 1e-12) throw DegenerateEncoding("degenerate encoding: state maps to zero for this row");
    q.c0 = c0 / q.nq;
    q.c1 = c1 / q.nq;
    return q;
}

EncodedQubit encode(const Eigen::VectorXcd& coeffs, const EncodingScheme& scheme, int row) {
    if (row < 1 || row > scheme.rows()) throw std::invalid_argument("row index out of range");
    return encode(coeffs, scheme.row(row - 1));
}

Eigen::Matrix2cd density_matrix(const EncodedQubit& q) {
    Eigen::Matrix2cd rho;
    rho << q.c0 * std::conj(q.c0), q.c0 * std::conj(q.c1),
           q.c1 * std::conj(q.c0), q.c1 * std::conj(q.c1);
    return rho;
}

RatioEstimate extract_ratio(const Eigen::Matrix2cd& rho) {
    const Cx r21 = rho(1, 0), r22 = rho(1, 1);
    const double w1 = std::abs(r21), w2 = std::abs(r22);
    if (w1 < kRatioDenomTol && w2 < kRatioDenomTol)
        throw RatioUndefined("C1 ~ 0: ratio undefined");
    if (w1 < kRatioDenomTol) return {rho(0, 1) / r22, 0.0};
    if (w2 < kRatioDenomTol) return {rho(0, 0) / r21, 0.0};
    const Cx est1 = rho(0, 0) / r21;
    const Cx est2 = rho(0, 1) / r22;
    RatioEstimate out;
    out.value = (w1 * est1 + w2 * est2) / (w1 + w2);
    out.discrepancy = std::abs(est1 - est2);
    return out;
}

Eigen::MatrixXcd assemble_system(const std::vector<RatioRow>& ratios, const EncodingScheme& scheme,
                                 const std::vector<int>& zero_constraints) {
    const int n = scheme.n();
    const int m = static_cast<int>(ratios.size()) + static_cast<int>(zero_constraints.size());
    if (m < n - 1) throw std::invalid_argument("underdetermined system");
    Eigen::MatrixXcd sys(m, n);
    int r = 0;
    for (const auto& rr : ratios) {
        const auto& row = scheme.row(rr.row - 1);
        for (int k = 0; k < n; ++k) {
            const auto& pt = row[static_cast<std::size_t>(k)];
            sys(r, k) = rr.c1_zero ? pt.comp1() : pt.comp0() - rr.ratio * pt.comp1();
        }
        ++r;
    }
    for (int k : zero_constraints) {
        if (k < 1 || k > n) throw std::invalid_argument("zero constraint index out of range");
        sys.row(r).setZero();
        sys(r, k - 1) = Cx{1.0, 0.0};
        ++r;
    }
    return sys;
}

namespace {

Eigen::MatrixXcd row_normalized(const Eigen::MatrixXcd& system) {
    Eigen::MatrixXcd m = system;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double nrm = m.row(i).norm();
        if (nrm > 0.0) m.row(i) /= nrm;
    }
    return m;
}

struct SvdOut {
    Eigen::MatrixXcd v;        // full V
    Eigen::VectorXd sigma;     // padded to n entries (zeros for m < n)
};

SvdOut padded_svd(const Eigen::MatrixXcd& m) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
    SvdOut out;
    out.v = svd.matrixV();
    const Eigen::Index n = m.cols();
    out.sigma = Eigen::VectorXd::Zero(n);
    out.sigma.head(svd.singularValues().size()) = svd.singularValues();
    return out;
}

}  // namespace

void fix_global_phase(Eigen::VectorXcd& v, double mag_threshold) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > mag_threshold) {
            const Cx phase = std::conj(v[i]) / std::abs(v[i]);
            v *= phase;
            v[i] = Cx{std::abs(v[i]), 0.0};  // scrub residual imaginary part
            return;
        }
    }
}

NullSolveResult solve_null(const Eigen::MatrixXcd& system) {
    const Eigen::Index n = system.cols();
    if (n == 1) {
        // nothing to solve; any remaining row must admit the trivial direction
        NullSolveResult out;
        out.coeffs = Eigen::VectorXcd::Ones(1);
        out.sigma_max = 1.0;
        out.sigma_next = 1.0;
        return out;
    }
    if (system.rows() < n - 1) throw std::invalid_argument("underdetermined system");
    NullSolveResult out;
    if (system.rows() == n - 1) {
        // the kernel is exact and one-dimensional (when the gate passes), so
        // it comes from a QR completion of the adjoint; the singular values
        // only feed the conditioning report and the ambiguity gate
        Eigen::MatrixXcd m = row_normalized(system);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m.adjoint());
        Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(n);
        unit[n - 1] = Cx{1.0, 0.0};
        out.coeffs = qr.householderQ() * unit;

        Eigen::VectorXd sv(n - 1);
        const int info = LAPACKE_zgesdd(
            LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(n - 1), static_cast<lapack_int>(n),
            reinterpret_cast<lapack_complex_double*>(m.data()), static_cast<lapack_int>(n - 1),
            sv.data(), nullptr, 1, nullptr, 1);
        if (info != 0) {
            const auto svd = padded_svd(row_normalized(system));
            sv = svd.sigma.head(n - 1);
        }
        out.sigma_max = sv[0];
        out.sigma_next = sv[n - 2];
        out.sigma_min = 0.0;
    } else {
        const auto svd = padded_svd(row_normalized(system));
        out.sigma_max = svd.sigma(0);
        out.sigma_min = svd.sigma(n - 1);
        out.sigma_next = svd.sigma(n - 2);
        out.coeffs = svd.v.col(n - 1);
    }
    if (out.sigma_max <= 0.0 || out.sigma_next / out.sigma_max < kAmbiguityTol)
        throw AmbiguousNullSpace("ambiguous null space: reconstruction not unique for this scheme");
    out.coeffs.normalize();
    fix_global_phase(out.coeffs);
    return out;
}

NullBasisResult solve_null_basis(const Eigen::MatrixXcd& system, double kappa) {
    const Eigen::Index n = system.cols();
    NullBasisResult out;
    if (n == 1) {
        out.basis = Eigen::MatrixXcd::Ones(1, 1);
        out.sigma_max = out.sigma_next = 1.0;
        return out;
    }
    const auto svd = padded_svd(row_normalized(system));
    out.sigma_max = svd.sigma(0);
    out.sigma_min = svd.sigma(n - 1);
    out.sigma_next = svd.sigma(n - 2);
    Eigen::Index d = 1;
    while (d < n && out.sigma_max > 0.0 && svd.sigma(n - 1 - d) / out.sigma_max < kappa) ++d;
    out.basis = Eigen::MatrixXcd(n, d);
    for (Eigen::Index i = 0; i < d; ++i) out.basis.col(i) = svd.v.col(n - 1 - i);
    return out;
}

double fidelity(const Eigen::VectorXcd& truth, const Eigen::VectorXcd& recovered) {
    if (truth.size() != recovered.size()) throw std::invalid_argument("dimension mismatch");
    return std::norm(truth.dot(recovered));  // Eigen's dot conjugates the left argument
}

Cx perturb_ratio(Cx ratio, double bound, Rng& rng, NoiseModel model) {
    if (bound < 0.0 || bound >= 1.0) throw std::invalid_argument("noise bound must be in [0, 1)");
    if (bound == 0.0) return ratio;
    if (model == NoiseModel::RelativeReal) return ratio * (1.0 + rng.uniform(-bound, bound));
    return {ratio.real() * (1.0 + rng.uniform(-bound, bound)),
            ratio.imag() * (1.0 + rng.uniform(-bound, bound))};
}

Eigen::VectorXcd haar_state(int n, Rng& rng) {
    const auto v = haar_unit_vector(n, rng);
    Eigen::VectorXcd out(n);
    for (int i = 0; i < n; ++i) out[i] = v[static_cast<std::size_t>(i)];
    return out;
}

std::vector<RatioRow> measure_ratios(const Eigen::VectorXcd& coeffs, const EncodingScheme& scheme) {
    std::vector<RatioRow> out;
    out.reserve(static_cast<std::size_t>(scheme.rows()));
    for (int j = 1; j <= scheme.rows(); ++j) {
        RatioRow rr;
        rr.row = j;
        try {
            const auto q = encode(coeffs, scheme, j);
            rr = {j, extract_ratio(density_matrix(q)).value, false};
        } catch (const RatioUndefined&) {
            rr.c1_zero = true;
        } catch (const DegenerateEncoding&) {
            rr.c1_zero = true;  // C0 = C1 = 0; the sin-row still holds
        }
        out.push_back(rr);
    }
    return out;
}

Eigen::VectorXcd decode_from_ratios(const std::vector<RatioRow>& ratios, const EncodingScheme& scheme,
                                    const std::vector<int>& zero_constraints) {
    return solve_null(assemble_system(ratios, scheme, zero_constraints)).coeffs;
}

}  // namespace qwalk
