#pragma once

#include <complex>
#include <functional>

#include "tauforms/errors.hpp"
#include "tauforms/theta.hpp"  // cdouble and friends

namespace tauforms {

// Adaptive Gauss-Kronrod (G7,K15) on [0,1] for complex integrands. Callers that
// thread analytic-continuation state through the evaluations must tolerate
// non-monotone evaluation points (panels are revisited on refinement).
cdouble integrate_gk(const std::function<cdouble(double)>& f, double abs_tol,
                     int max_depth = 28);

// Vector-valued variant; the error estimate is the max over components.
CVector integrate_gk_vec(const std::function<CVector(double)>& f, int dim, double abs_tol,
                         int max_depth = 28);

// Nodes/weights of the 15-point Kronrod rule on [-1,1] (ascending nodes),
// with the embedded 7-point Gauss weights (zero where not a Gauss node).
struct GK15 {
    static const double nodes[15];
    static const double wk[15];
    static const double wg[15];
};

} // namespace tauforms
