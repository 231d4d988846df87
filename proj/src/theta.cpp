#include "tauforms/theta.hpp"

#include <algorithm>
#include <cmath>

namespace tauforms {

PeriodMatrix::PeriodMatrix(CMatrix omega, double symmetry_tol) : omega_(std::move(omega)) {
    const auto g = omega_.rows();
    if (g < 1 || omega_.cols() != g)
        throw InvalidInput("period matrix must be square and nonempty");
    const double scale = std::max(1.0, omega_.cwiseAbs().maxCoeff());
    if ((omega_ - omega_.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale)
        throw InvalidInput("period matrix is not symmetric within tolerance");
    // exact symmetrization so downstream quadratic forms are unambiguous
    omega_ = 0.5 * (omega_ + omega_.transpose()).eval();
    RMatrix y = omega_.imag();
    Eigen::LLT<RMatrix> llt(y);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite("Im(Omega) is not positive definite");
    chol_imag_ = llt.matrixL();
    imag_inv_ = llt.solve(RMatrix::Identity(g, g));
}

ThetaChar::ThetaChar(Eigen::VectorXi a2, Eigen::VectorXi b2)
    : alpha2(std::move(a2)), beta2(std::move(b2)) {
    if (alpha2.size() != beta2.size() || alpha2.size() == 0)
        throw InvalidInput("characteristic vectors must have equal positive length");
    for (int i = 0; i < alpha2.size(); ++i)
        if ((alpha2[i] != 0 && alpha2[i] != 1) || (beta2[i] != 0 && beta2[i] != 1))
            throw InvalidInput("characteristic entries must be 0 or 1/2");
}

int ThetaChar::parity() const {
    int s = 0;
    for (int i = 0; i < alpha2.size(); ++i) s += alpha2[i] * beta2[i];
    return s % 2;
}

ThetaChar ThetaChar::zero(int g) {
    return ThetaChar(Eigen::VectorXi::Zero(g), Eigen::VectorXi::Zero(g));
}

DerivativeSpec DerivativeSpec::repeated(const CVector& d, int k) {
    return DerivativeSpec(std::vector<CVector>(static_cast<size_t>(k), d));
}

double theta_scale(const CVector& z, const PeriodMatrix& omega) {
    RVector yz = z.imag();
    return std::exp(kPi * yz.dot(omega.imag_inverse() * yz));
}

namespace {

struct LatticePoint {
    Eigen::VectorXi n;
    double rho;  // sqrt(pi) * || L^T (n + a + yhat) ||
};

// Truncation radius: absolute tail below tol_abs for the Gaussian-with-polynomial
// integrand sum_{rho > R} (1 + rho)^{g-1+order} e^{-rho^2}, with a generous
// lattice-count constant. Overshooting is cheap at genus <= 3.
double truncation_radius(int g, int order, double tol_abs, double min_sigma) {
    const double c0 = 100.0 * std::pow(1.0 + 2.0 / min_sigma, g);
    double r = 2.0;
    for (int it = 0; it < 40; ++it) {
        double poly = std::pow(1.0 + r, g - 1 + order);
        double target = std::log(std::max(c0 * poly / tol_abs, 2.0));
        double rn = std::sqrt(target);
        if (std::abs(rn - r) < 1e-12) { r = rn; break; }
        r = rn;
    }
    return r + 1.0;
}

void enumerate_box(const RVector& center, const RVector& halfwidth,
                   std::vector<Eigen::VectorXi>& out) {
    const int g = static_cast<int>(center.size());
    Eigen::VectorXi lo(g), hi(g), cur(g);
    for (int i = 0; i < g; ++i) {
        lo[i] = static_cast<int>(std::floor(center[i] - halfwidth[i]));
        hi[i] = static_cast<int>(std::ceil(center[i] + halfwidth[i]));
    }
    cur = lo;
    while (true) {
        out.push_back(cur);
        int i = g - 1;
        while (i >= 0) {
            if (++cur[i] <= hi[i]) break;
            cur[i] = lo[i];
            --i;
        }
        if (i < 0) break;
    }
}

bool lex_less(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

} // namespace

cdouble theta(const CVector& z, const PeriodMatrix& omega, const ThetaChar& chr,
              const DerivativeSpec& deriv, double tol) {
    const int g = omega.genus();
    if (z.size() != g || chr.genus() != g)
        throw InvalidInput("theta: dimension mismatch between z, Omega, characteristic");
    const int order = deriv.order();
    if (order > 3)
        throw UnsupportedOrder("theta derivatives supported up to order 3");
    for (const auto& d : deriv.directions)
        if (d.size() != g) throw InvalidInput("theta: derivative direction has wrong length");
    tol = std::max(tol, 1e-14);

    const RVector a = chr.alpha();
    const RVector b = chr.beta();
    const RMatrix& L = omega.imag_cholesky();
    const RVector yhat = omega.imag_inverse() * z.imag().eval();

    double min_sigma = L.diagonal().minCoeff() * std::sqrt(kPi);
    double extra = 1.0;
    for (const auto& d : deriv.directions) extra = std::max(extra, 2.0 * kPi * d.norm());
    const double R = truncation_radius(g, order, tol / std::pow(extra, std::max(order, 1)), min_sigma)
                     + 0.5 * static_cast<double>(order);

    // bounding box of the ellipsoid rho <= R around center -(a + yhat)
    const RVector center = -(a + yhat);
    RVector halfwidth(g);
    const RMatrix yinv = omega.imag_inverse();
    for (int i = 0; i < g; ++i)
        halfwidth[i] = std::sqrt(std::max(yinv(i, i), 0.0)) * R / std::sqrt(kPi) + 1.0;

    std::vector<Eigen::VectorXi> box;
    enumerate_box(center, halfwidth, box);

    std::vector<LatticePoint> pts;
    pts.reserve(box.size());
    for (auto& n : box) {
        RVector u = n.cast<double>() + a + yhat;
        double rho = std::sqrt(kPi) * (L.transpose() * u).norm();
        if (rho <= R) pts.push_back({std::move(n), rho});
    }
    // fixed summation order: descending ellipsoid norm so small terms accumulate first
    std::sort(pts.begin(), pts.end(), [](const LatticePoint& p, const LatticePoint& q) {
        if (p.rho != q.rho) return p.rho > q.rho;
        return lex_less(p.n, q.n);
    });

    const CMatrix& om = omega.matrix();
    CVector zb = z + b.cast<cdouble>();
    cdouble sum = 0.0;
    CVector na(g);
    for (const auto& p : pts) {
        for (int i = 0; i < g; ++i) na[i] = static_cast<double>(p.n[i]) + a[i];
        cdouble quad = na.transpose() * (om * na);
        cdouble lin = 0.0;
        for (int i = 0; i < g; ++i) lin += na[i] * zb[i];
        cdouble term = std::exp(kPi * kI * quad + kTwoPiI * lin);
        for (const auto& d : deriv.directions) {
            cdouble w = 0.0;
            for (int i = 0; i < g; ++i) w += d[i] * na[i];
            term *= kTwoPiI * w;
        }
        sum += term;
    }
    return sum;
}

cdouble quasi_periodicity_factor(const CVector& z, const PeriodMatrix& omega,
                                 const Eigen::VectorXi& m, const Eigen::VectorXi& n,
                                 const ThetaChar& chr) {
    const int g = omega.genus();
    if (z.size() != g || m.size() != g || n.size() != g || chr.genus() != g)
        throw InvalidInput("quasi_periodicity_factor: dimension mismatch");
    CVector mc = m.cast<cdouble>();
    cdouble quad = mc.transpose() * (omega.matrix() * mc);
    cdouble lin = 0.0;
    for (int i = 0; i < g; ++i) lin += mc[i] * z[i];
    double char_phase = 0.0;
    for (int i = 0; i < g; ++i)
        char_phase += 0.5 * chr.alpha2[i] * n[i] - 0.5 * chr.beta2[i] * m[i];
    return std::exp(-kPi * kI * quad - kTwoPiI * lin + kTwoPiI * char_phase);
}

cdouble quasi_periodicity_factor(const CVector& z, const PeriodMatrix& omega,
                                 const Eigen::VectorXi& m, const Eigen::VectorXi& n) {
    return quasi_periodicity_factor(z, omega, m, n, ThetaChar::zero(omega.genus()));
}

CVector theta_gradient(const CVector& z, const PeriodMatrix& omega, const ThetaChar& chr,
                       double tol) {
    const int g = omega.genus();
    CVector grad(g);
    for (int j = 0; j < g; ++j) {
        CVector ej = CVector::Zero(g);
        ej[j] = 1.0;
        grad[j] = theta(z, omega, chr, DerivativeSpec::repeated(ej, 1), tol);
    }
    return grad;
}

std::vector<ThetaChar> odd_characteristics(int g) {
    std::vector<ThetaChar> out;
    const int total = 1 << (2 * g);
    for (int code = 0; code < total; ++code) {
        Eigen::VectorXi a2(g), b2(g);
        // leading bits are alpha2[0..], then beta2[0..]: lexicographic over (alpha, beta)
        for (int i = 0; i < g; ++i) a2[i] = (code >> (2 * g - 1 - i)) & 1;
        for (int i = 0; i < g; ++i) b2[i] = (code >> (g - 1 - i)) & 1;
        ThetaChar c(a2, b2);
        if (c.is_odd()) out.push_back(std::move(c));
    }
    return out;
}

ThetaChar find_odd_nonsingular_char(const PeriodMatrix& omega, double rel_tol) {
    const int g = omega.genus();
    if (g < 1) throw UnsupportedGenus("no theta characteristics at genus 0");
    const double scale =
        std::abs(theta(CVector::Zero(g), omega, ThetaChar::zero(g), DerivativeSpec::none()));
    for (const auto& c : odd_characteristics(g)) {
        CVector grad = theta_gradient(CVector::Zero(g), omega, c);
        if (grad.norm() > rel_tol * std::max(scale, 1e-300))
            return c;
    }
    throw NoNonsingularOddChar("all odd characteristics have vanishing gradient at 0");
}

} // namespace tauforms
