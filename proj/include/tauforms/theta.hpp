#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "tauforms/errors.hpp"

namespace tauforms {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr cdouble kI{0.0, 1.0};
inline constexpr cdouble kTwoPiI{0.0, 2.0 * kPi};

// Symmetric g x g period matrix with positive definite imaginary part.
// Validation and the Cholesky factor of Im are computed at construction.
class PeriodMatrix {
public:
    explicit PeriodMatrix(CMatrix omega, double symmetry_tol = 1e-8);

    int genus() const { return static_cast<int>(omega_.rows()); }
    const CMatrix& matrix() const { return omega_; }
    cdouble operator()(int i, int j) const { return omega_(i, j); }
    const RMatrix& imag_cholesky() const { return chol_imag_; }   // lower L, Im = L L^T
    const RMatrix& imag_inverse() const { return imag_inv_; }

private:
    CMatrix omega_;
    RMatrix chol_imag_;
    RMatrix imag_inv_;
};

// Half-integer theta characteristic; entries of alpha, beta are 0 or 1/2,
// stored doubled (0/1).
struct ThetaChar {
    Eigen::VectorXi alpha2;  // 2*alpha
    Eigen::VectorXi beta2;   // 2*beta

    ThetaChar() = default;
    ThetaChar(Eigen::VectorXi a2, Eigen::VectorXi b2);

    int genus() const { return static_cast<int>(alpha2.size()); }
    RVector alpha() const { return alpha2.cast<double>() / 2.0; }
    RVector beta() const { return beta2.cast<double>() / 2.0; }
    // 4<alpha,beta> mod 2; 1 for odd characteristics.
    int parity() const;
    bool is_odd() const { return parity() == 1; }

    static ThetaChar zero(int g);
};

// Iterated directional derivative spec, up to order 3 (genus cap).
struct DerivativeSpec {
    std::vector<CVector> directions;

    DerivativeSpec() = default;
    explicit DerivativeSpec(std::vector<CVector> dirs) : directions(std::move(dirs)) {}
    int order() const { return static_cast<int>(directions.size()); }

    static DerivativeSpec none() { return DerivativeSpec{}; }
    // d applied k times
    static DerivativeSpec repeated(const CVector& d, int k);
};

// theta[alpha,beta](z, Omega) = sum_n exp(i pi (n+a)^T Omega (n+a) + 2 pi i (n+a)^T (z+b)),
// with the iterated directional derivative factors prod_l 2 pi i <d_l, n+a>.
// The lattice sum is truncated on the ellipsoid || L^T (n + a + Y^{-1} Im(z)) || <= R / sqrt(pi),
// Y = Im Omega = L L^T, with R from a Gaussian tail bound (inflated for derivative
// polynomial growth) so that the absolute tail is below
// tol * exp(pi <Im z, Y^{-1} Im z>).
cdouble theta(const CVector& z, const PeriodMatrix& omega, const ThetaChar& chr,
              const DerivativeSpec& deriv = DerivativeSpec::none(), double tol = 1e-12);

// Scale factor exp(pi <Im z, (Im Omega)^{-1} Im z>) used in the truncation bound;
// |theta(z)| is O(this) and the error guarantee is relative to it.
double theta_scale(const CVector& z, const PeriodMatrix& omega);

// Exponential factor f with theta[chr](z + Omega m + n) = f * theta[chr](z).
cdouble quasi_periodicity_factor(const CVector& z, const PeriodMatrix& omega,
                                 const Eigen::VectorXi& m, const Eigen::VectorXi& n,
                                 const ThetaChar& chr);
cdouble quasi_periodicity_factor(const CVector& z, const PeriodMatrix& omega,
                                 const Eigen::VectorXi& m, const Eigen::VectorXi& n);

// Gradient of theta[chr] at z.
CVector theta_gradient(const CVector& z, const PeriodMatrix& omega, const ThetaChar& chr,
                       double tol = 1e-12);

// First odd characteristic (lexicographic over doubled (alpha,beta)) whose
// gradient at 0 is nonsingular relative to the theta scale.
ThetaChar find_odd_nonsingular_char(const PeriodMatrix& omega, double rel_tol = 1e-8);

// All odd half-integer characteristics in lexicographic order (test support).
std::vector<ThetaChar> odd_characteristics(int g);

} // namespace tauforms
