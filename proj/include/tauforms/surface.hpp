#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "tauforms/homology.hpp"
#include "tauforms/theta.hpp"

namespace tauforms {

// Point of the curve y^2 = P(x): base coordinate plus a sheet tag relative to
// the principal branch of sqrt(P(x)). Branch points carry sheet 0; the infinite
// branch point of odd-degree models is flagged explicitly.
struct SurfacePoint {
    cdouble x{0.0};
    int sheet = +1;  // +1 / -1; 0 marks a branch point
    bool at_infinity = false;

    SurfacePoint() = default;
    SurfacePoint(cdouble xx, int s) : x(xx), sheet(s) {}
    static SurfacePoint branch_point(cdouble xx) { return SurfacePoint(xx, 0); }
    static SurfacePoint infinity_point() {
        SurfacePoint p;
        p.at_infinity = true;
        p.sheet = 0;
        return p;
    }
    bool is_branch() const { return sheet == 0 && !at_infinity; }
};

// Piecewise-straight path in the x-plane with a starting sheet. Segments must
// keep the stated clearance from branch points.
struct PathSpec {
    std::vector<cdouble> points;
    int start_sheet = +1;
    double clearance = 1e-9;
};

enum class CurveModel { Odd, Even };  // 2g+1 finite branch points (+infinity) or 2g+2

// Immutable hyperelliptic curve y^2 = prod(x - e_k) of genus 1..3 with a fixed
// homology marking. Periods, the marking, and the anchored vector of Riemann
// constants are computed at construction and cached.
class HyperellipticCurve {
public:
    HyperellipticCurve(std::vector<cdouble> branch_points, CurveModel model,
                       double tol = 1e-11);

    int genus() const { return genus_; }
    CurveModel model() const { return model_; }
    const std::vector<cdouble>& branch_points() const { return branch_; }
    double scale() const { return scale_; }
    double tol() const { return tol_; }

    cdouble P(cdouble x) const;
    cdouble dP(cdouble x) const;
    cdouble ddP(cdouble x) const;
    cdouble y_of(const SurfacePoint& p) const;  // sheet * principal sqrt(P(x))

    // straight-segment analytic continuation of y; adaptive step halving
    cdouble continue_y(cdouble x_from, cdouble y_from, cdouble x_to) const;

    // periods of the unnormalized basis x^{k-1} dx / y over the marked cycles
    const CMatrix& a_periods_unnormalized() const { return a_periods_; }
    const CMatrix& b_periods_unnormalized() const { return b_periods_; }
    const PeriodMatrix& period_matrix() const { return *omega_; }
    // v_i = sum_k normalization()(i,k) x^{k-1} dx / y
    const CMatrix& normalization() const { return norm_; }

    // values f_i with v_i = f_i dx at a regular point (ChartFailure at branch points)
    CVector normalized_differentials(const SurfacePoint& p) const;
    // branch-chart variant: value of v_i in the chart u = sqrt(x - e) at branch point e
    CVector normalized_differentials_branch_chart(cdouble e) const;
    // first and second x-derivatives of the f_i (for Wronskians and jets)
    void differential_jets(const SurfacePoint& p, CVector& f, CVector& df, CVector& ddf) const;

    cdouble wronskian(const SurfacePoint& p) const;

    // Abel map: integral of (v_1..v_g) along a path with sheet tracking
    CVector abel_map(const PathSpec& path) const;
    // canonical path from the anchor to a point (deterministic routing)
    PathSpec canonical_path(const SurfacePoint& p) const;
    CVector abel_point(const SurfacePoint& p) const;  // abel_map(canonical_path(p))
    const SurfacePoint& anchor() const { return anchor_; }

    // marked cycles realized as closed anchored paths
    PathSpec cycle_path(char kind, int index) const;  // kind 'a' or 'b'

    // vector of Riemann constants with respect to the anchor / arbitrary basepoint
    const CVector& riemann_constants_anchor() const { return k_anchor_; }
    CVector riemann_constants(const SurfacePoint& basepoint) const;

    // marking acted on by an integer symplectic block matrix G = [[A,B],[C,D]]:
    // (b', a')^T = G (b, a)^T. Periods are recombined, no new quadrature.
    HyperellipticCurve remarked(const Eigen::MatrixXi& sp_g) const;

    // closed 1e-? loop integral helper: integrate a chart differential w(x, y)
    // over the marked cycle (used for third-kind normalization and tests)
    cdouble integrate_over_cycle(char kind, int index,
                                 const std::function<cdouble(cdouble, cdouble)>& w_chart,
                                 double abs_tol) const;
    // integral of w(x,y) dx along an arbitrary path with sheet tracking
    cdouble integrate_over_path(const PathSpec& path,
                                const std::function<cdouble(cdouble, cdouble)>& w_chart,
                                double abs_tol) const;

    // chain data (branch points in chain order), exposed for tests
    const std::vector<cdouble>& chain() const { return chain_; }
    const std::vector<LiftedLoop>& loops() const { return loops_; }
    const Eigen::MatrixXi& cycle_coordinates() const { return cycles_; }  // 2g x #loops

private:
    struct CycleRealization {
        PathSpec path;
    };

    void build_chain();
    void build_loops();
    void build_homology();
    void build_periods();
    void build_anchor();
    void build_riemann_constants();
    PathSpec route(cdouble from, cdouble to) const;
    PathSpec realize_cycle(const Eigen::RowVectorXi& coeffs) const;
    void validate_path(const PathSpec& path) const;

    HyperellipticCurve() = default;  // for remarked()

    int genus_ = 0;
    CurveModel model_ = CurveModel::Odd;
    double tol_ = 1e-11;
    double scale_ = 1.0;
    std::vector<cdouble> branch_;  // as given
    std::vector<cdouble> chain_;   // chain-ordered branch points
    std::vector<LiftedLoop> loops_;
    CMatrix loop_periods_;     // #loops x g
    Eigen::MatrixXi cycles_;   // 2g x #loops, rows a_1..a_g, b_1..b_g
    CMatrix a_periods_, b_periods_;
    std::shared_ptr<const PeriodMatrix> omega_;
    CMatrix norm_;
    SurfacePoint anchor_;
    CVector k_anchor_;
};

// Convenience builders for the test curves.
HyperellipticCurve legendre_curve(double lambda = 0.5, double tol = 1e-11);

} // namespace tauforms
