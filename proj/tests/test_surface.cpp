#include "doctest.h"

#include <random>

#include "tauforms/surface.hpp"
#include "tauforms/theta.hpp"
#include "oracles.hpp"

using namespace tauforms;

namespace {

// genus-2 reference curve: y^2 = x^5 - 1
HyperellipticCurve quintic_curve(double tol = 1e-11) {
    std::vector<cdouble> roots;
    for (int k = 0; k < 5; ++k)
        roots.push_back(std::exp(kTwoPiI * (static_cast<double>(k) / 5.0)));
    return HyperellipticCurve(roots, CurveModel::Odd, tol);
}

// distance of z to the lattice Z^g + Omega Z^g
double lattice_residual(const CVector& z, const PeriodMatrix& om) {
    RVector p = om.imag_inverse() * z.imag().eval();
    Eigen::VectorXd pr = p.array().round();
    CVector rest = z - om.matrix() * pr.cast<cdouble>().eval();
    Eigen::VectorXd qr = rest.real().array().round();
    return (rest - qr.cast<cdouble>()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("symplectic reduction on scrambled standard forms") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coef(-2, 2);
    for (int rep = 0; rep < 20; ++rep) {
        int g = 1 + static_cast<int>(rng() % 3);
        int m = 2 * g + static_cast<int>(rng() % 2);
        Eigen::MatrixXi base = Eigen::MatrixXi::Zero(m, m);
        for (int i = 0; i < g; ++i) {
            base(2 * i, 2 * i + 1) = 1;
            base(2 * i + 1, 2 * i) = -1;
        }
        // random unimodular congruence
        Eigen::MatrixXi t = Eigen::MatrixXi::Identity(m, m);
        for (int s = 0; s < 12; ++s) {
            int i = static_cast<int>(rng() % m), j = static_cast<int>(rng() % m);
            if (i == j) continue;
            t.row(i) += coef(rng) * t.row(j);
        }
        Eigen::MatrixXi scrambled = t * base * t.transpose();
        auto red = symplectic_reduce(scrambled);
        CHECK(red.rank_pairs == g);
        Eigen::MatrixXi res = red.transform * scrambled * red.transform.transpose();
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                CHECK(res(i, g + j) == (i == j ? 1 : -1 * 0));
                CHECK(res(g + i, j) == (i == j ? -1 : 0));
                CHECK(res(i, j) == 0);
                CHECK(res(g + i, g + j) == 0);
            }
    }
}

TEST_CASE("Legendre curve periods against the AGM oracle") {
    HyperellipticCurve c = legendre_curve(0.5);
    CHECK(c.genus() == 1);
    cdouble om = c.period_matrix()(0, 0);
    CHECK(std::abs(om - kI) < 1e-8);

    // generic modulus: Omega = i K(1-m)/K(m) up to the marking's a/b choice
    HyperellipticCurve c3 = legendre_curve(0.3);
    cdouble om3 = c3.period_matrix()(0, 0);
    cdouble ratio = oracles::elliptic_K_param(0.7) / oracles::elliptic_K_param(0.3);
    bool match = std::abs(om3 - kI * ratio) < 1e-8 || std::abs(om3 - kI / ratio) < 1e-8;
    CHECK(match);
}

TEST_CASE("quintic genus-2 curve: symmetry, positivity, rotation lattice invariance") {
    HyperellipticCurve c = quintic_curve();
    CHECK(c.genus() == 2);
    const CMatrix om = c.period_matrix().matrix();
    CHECK((om - om.transpose()).cwiseAbs().maxCoeff() < 1e-8);

    // rotated branch points give the same period lattice up to the known
    // differential rescaling u_j -> zeta^{j-5/2} u_j
    const cdouble zeta = std::exp(kTwoPiI / 5.0);
    std::vector<cdouble> rot;
    for (int k = 0; k < 5; ++k) rot.push_back(zeta * std::exp(kTwoPiI * (k / 5.0)));
    HyperellipticCurve cr(rot, CurveModel::Odd);

    CMatrix l1(4, 2), l2(4, 2);
    l1.topRows(2) = c.a_periods_unnormalized();
    l1.bottomRows(2) = c.b_periods_unnormalized();
    l2.topRows(2) = cr.a_periods_unnormalized();
    l2.bottomRows(2) = cr.b_periods_unnormalized();
    const cdouble half = std::exp(kI * kPi / 5.0);  // zeta^{1/2}
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = std::pow(half, -3.0);  // zeta^{1-5/2}
    d(1, 1) = std::pow(half, -1.0);  // zeta^{2-5/2}
    CMatrix target = l2 * d.inverse();

    // solve row-wise integer combinations target_i = sum_k M_ik l1_k over R, then round
    Eigen::MatrixXd sys(4, 4), rhs(4, 4);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 2; ++j) {
            sys(2 * j, k) = l1(k, j).real();
            sys(2 * j + 1, k) = l1(k, j).imag();
        }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
            rhs(2 * j, i) = target(i, j).real();
            rhs(2 * j + 1, i) = target(i, j).imag();
        }
    Eigen::MatrixXd sol = sys.fullPivLu().solve(rhs);  // columns are rows of M
    Eigen::MatrixXd m_int = sol.transpose().array().round();
    CHECK((sol.transpose() - m_int).cwiseAbs().maxCoeff() < 1e-6);
    CMatrix recon = m_int.cast<cdouble>() * l1;
    CHECK((recon - target).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(std::abs(std::abs(m_int.determinant()) - 1.0) < 1e-9);
}

TEST_CASE("Abel map over marked cycles") {
    for (int which = 0; which < 2; ++which) {
        HyperellipticCurve c = which == 0 ? legendre_curve(0.5) : quintic_curve();
        const int g = c.genus();
        for (int j = 1; j <= g; ++j) {
            CVector va = c.abel_map(c.cycle_path('a', j));
            CVector ea = CVector::Zero(g);
            ea[j - 1] = 1.0;
            CHECK((va - ea).cwiseAbs().maxCoeff() < 1e-8);
            CVector vb = c.abel_map(c.cycle_path('b', j));
            CVector col = c.period_matrix().matrix().col(j - 1);
            CHECK((vb - col).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("Abel map: branch-point path gives a half-period") {
    HyperellipticCurve c = legendre_curve(0.5);
    PathSpec p;
    p.points = {cdouble(0.0), cdouble(0.5)};
    CVector v = c.abel_map(p);
    CHECK(lattice_residual(2.0 * v, c.period_matrix()) < 1e-8);
    CHECK(lattice_residual(v, c.period_matrix()) > 1e-3);  // genuinely half

    HyperellipticCurve q = quintic_curve();
    PathSpec p2;
    p2.points = {q.branch_points()[1], q.branch_points()[2]};
    CVector v2 = q.abel_map(p2);
    CHECK(lattice_residual(2.0 * v2, q.period_matrix()) < 1e-8);
}

TEST_CASE("Abel path homotopy invariance") {
    HyperellipticCurve c = quintic_curve();
    SurfacePoint target(cdouble(0.9, 1.4), +1);
    CVector direct = c.abel_point(target);

    // contractible detour
    PathSpec base = c.canonical_path(target);
    PathSpec detour = base;
    cdouble far = c.anchor().x * cdouble(1.15, 0.2);
    detour.points.insert(detour.points.begin() + 1, far);
    CHECK((c.abel_map(detour) - direct).cwiseAbs().maxCoeff() < 1e-8);

    // appending a marked a-loop shifts by the corresponding unit vector
    PathSpec loop = c.cycle_path('a', 2);
    PathSpec with_loop = loop;
    with_loop.points.insert(with_loop.points.end(), base.points.begin() + 1, base.points.end());
    CVector shifted = c.abel_map(with_loop);
    CVector e2 = CVector::Zero(2);
    e2[1] = 1.0;
    CHECK((shifted - direct - e2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("normalized differentials: a-period normalization and sheet parity") {
    HyperellipticCurve c = quintic_curve();
    const int g = c.genus();
    for (int i = 0; i < g; ++i) {
        for (int j = 1; j <= g; ++j) {
            cdouble period = c.integrate_over_cycle(
                'a', j,
                [&](cdouble x, cdouble y) {
                    SurfacePoint p(x, +1);
                    // direct chart evaluation on the tracked sheet
                    CVector mono(g);
                    cdouble acc = 1.0;
                    for (int k = 0; k < g; ++k) {
                        mono[k] = acc;
                        acc *= x;
                    }
                    return (c.normalization() * mono)[i] / y;
                },
                1e-11);
            CHECK(std::abs(period - (i == j - 1 ? 1.0 : 0.0)) < 1e-8);
        }
    }
    SurfacePoint up(cdouble(0.4, 0.9), +1), dn(cdouble(0.4, 0.9), -1);
    CHECK((c.normalized_differentials(up) + c.normalized_differentials(dn))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

    HyperellipticCurve l = legendre_curve(0.5);
    SurfacePoint pt(cdouble(2.0, 1.0), +1);
    cdouble a11 = l.a_periods_unnormalized()(0, 0);
    cdouble y = l.y_of(pt);
    CHECK(std::abs(l.normalized_differentials(pt)[0] - 1.0 / (a11 * y)) < 1e-12);
}

TEST_CASE("Riemann constants") {
    HyperellipticCurve l = legendre_curve(0.5);
    cdouble om = l.period_matrix()(0, 0);
    CHECK(std::abs(l.riemann_constants_anchor()[0] - 0.5 * (1.0 + om)) < 1e-14);

    // theta(K) = 0 at genus 1
    PeriodMatrix pm(l.period_matrix().matrix());
    CVector k1 = l.riemann_constants_anchor();
    CHECK(std::abs(theta(k1, pm, ThetaChar::zero(1))) < 1e-10);

    HyperellipticCurve q = quintic_curve();
    PeriodMatrix pm2(q.period_matrix().matrix());
    std::mt19937_64 rng(131);
    std::uniform_real_distribution<double> uni(-1.4, 1.4);
    SurfacePoint base = q.anchor();
    CVector kx = q.riemann_constants(base);

    // Riemann vanishing: theta(A(x->q) + K^x) = 0 for 10 random q
    for (int rep = 0; rep < 10; ++rep) {
        SurfacePoint pt(cdouble(uni(rng), uni(rng)), rng() % 2 ? +1 : -1);
        CVector az = q.abel_point(pt) - q.abel_point(base);
        CVector arg = az + kx;
        double scale = theta_scale(arg, pm2);
        CHECK(std::abs(theta(arg, pm2, ThetaChar::zero(2))) < 1e-6 * scale);
    }

    // canonical divisor of x dx / y: zeros at (0, +i), (0, -i); A_x(D) + 2K^x in lattice
    SurfacePoint z1(cdouble(0.0), +1), z2(cdouble(0.0), -1);
    CVector ax = q.abel_point(z1) + q.abel_point(z2) - 2.0 * q.abel_point(base);
    CHECK(lattice_residual(ax + 2.0 * kx, q.period_matrix()) < 1e-6);
}

TEST_CASE("wronskian") {
    HyperellipticCurve l = legendre_curve(0.5);
    SurfacePoint pt(cdouble(1.7, 0.6), +1);
    CHECK(std::abs(l.wronskian(pt) - l.normalized_differentials(pt)[0]) < 1e-12);

    HyperellipticCurve q = quintic_curve();
    // chart covariance under a Moebius reparameterization, weight g(g+1)/2 = 3
    auto moebius = [](cdouble s) { return (s + cdouble(0.3, 0.1)) / (cdouble(0.05, -0.02) * s + 1.0); };
    const cdouble s0(0.55, 0.8);
    const double h = 1e-5;
    // numerical Wronskian in the s-chart from finite differences of f_i(phi(s)) phi'(s)
    auto f_s = [&](cdouble s) -> CVector {
        const cdouble x = moebius(s);
        const cdouble dphi = (moebius(s + h) - moebius(s - h)) / (2.0 * h);
        SurfacePoint p(x, +1);
        return q.normalized_differentials(p) * dphi;
    };
    CVector f0 = f_s(s0);
    CVector fp = f_s(s0 + h), fm = f_s(s0 - h);
    CVector df = (fp - fm) / (2.0 * h);
    CMatrix w2(2, 2);
    w2.row(0) = f0.transpose();
    w2.row(1) = df.transpose();
    const cdouble w_in_s = w2.determinant();

    // the sheet of phi(s0) must match the +1 sheet used above
    const cdouble x0 = moebius(s0);
    const cdouble dphi0 = (moebius(s0 + h) - moebius(s0 - h)) / (2.0 * h);
    const cdouble w_in_x = q.wronskian(SurfacePoint(x0, +1));
    CHECK(std::abs(w_in_s - w_in_x * std::pow(dphi0, 3.0)) < 2e-5 * std::abs(w_in_s));

    // no spurious zeros on a sample grid away from branch points
    for (double re = -1.6; re <= 1.6; re += 0.8)
        for (double im = -1.6; im <= 1.6; im += 0.8) {
            cdouble x(re, im + 0.05);
            bool near_branch = false;
            for (auto e : q.branch_points())
                if (std::abs(x - e) < 0.35) near_branch = true;
            if (near_branch) continue;
            CHECK(std::abs(q.wronskian(SurfacePoint(x, +1))) > 1e-6);
        }
}

TEST_CASE("remarking by symplectic matrices") {
    HyperellipticCurve l = legendre_curve(0.5);
    Eigen::MatrixXi s(2, 2);
    s << 0, -1, 1, 0;  // modular inversion at g=1
    HyperellipticCurve li = l.remarked(s);
    CHECK(std::abs(li.period_matrix()(0, 0) - kI) < 1e-8);  // i is the fixed point

    Eigen::MatrixXi id = Eigen::MatrixXi::Identity(4, 4);
    HyperellipticCurve q = quintic_curve();
    HyperellipticCurve qi = q.remarked(id);
    CHECK((qi.period_matrix().matrix() - q.period_matrix().matrix()).cwiseAbs().maxCoeff() <
          1e-12);

    // generic integer symplectic matrix: Omega' = (A Omega + B)(C Omega + D)^{-1}
    Eigen::MatrixXi g2(4, 4);
    g2 << 1, 0, 1, 1,
          0, 1, 1, 0,
          0, 0, 1, 0,
          0, 0, 0, 1;
    // ensure symplectic: shear with symmetric B
    HyperellipticCurve qs = q.remarked(g2);
    CMatrix om = q.period_matrix().matrix();
    CMatrix a = g2.topLeftCorner(2, 2).cast<cdouble>();
    CMatrix b = g2.topRightCorner(2, 2).cast<cdouble>();
    CMatrix c = g2.bottomLeftCorner(2, 2).cast<cdouble>();
    CMatrix d = g2.bottomRightCorner(2, 2).cast<cdouble>();
    CMatrix pred = (a * om + b) * (c * om + d).inverse();
    CHECK((qs.period_matrix().matrix() - pred).cwiseAbs().maxCoeff() < 1e-8);

    Eigen::MatrixXi bad = Eigen::MatrixXi::Identity(4, 4);
    bad(0, 1) = 1;
    bad(1, 0) = 1;
    CHECK_THROWS_AS(q.remarked(bad), NotSymplectic);
}

TEST_CASE("curve validation") {
    CHECK_THROWS_AS(HyperellipticCurve({cdouble(0), cdouble(0), cdouble(1)}, CurveModel::Odd),
                    InvalidCurve);
    CHECK_THROWS_AS(HyperellipticCurve({cdouble(0), cdouble(1)}, CurveModel::Odd), InvalidCurve);
    CHECK_THROWS_AS(
        HyperellipticCurve({cdouble(0), cdouble(1), cdouble(2), cdouble(3), cdouble(4),
                            cdouble(5), cdouble(6), cdouble(7), cdouble(8)},
                           CurveModel::Odd),
        UnsupportedGenus);
}
