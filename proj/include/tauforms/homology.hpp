#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tauforms/theta.hpp"

namespace tauforms {

// Closed oriented polyline in the x-plane lifted to the curve: y values are the
// analytic continuation of sqrt(P) along the vertices; x.front() == x.back()
// and y.front() == y.back() (trivial monodromy around an even branch set).
struct LiftedLoop {
    std::vector<cdouble> x;
    std::vector<cdouble> y;
};

// Signed intersection number of two lifted loops: transversal crossings of the
// polylines filtered by sheet agreement, each counted with the planar
// orientation sign Im(conj(u) v) of the tangent frame.
int intersection_number(const LiftedLoop& a, const LiftedLoop& b);

// Congruence transform to the standard symplectic form. Returns unimodular U
// with U J U^T = diag([[0,1],[-1,0]] x r, 0 x (m-2r)) reordered so that rows
// 0..r-1 are the a-cycles, rows r..2r-1 the b-cycles, the rest the kernel.
// Throws IllConditioned if an elementary divisor exceeds 1.
struct SymplecticBasis {
    Eigen::MatrixXi transform;  // m x m unimodular
    int rank_pairs;             // r
};
SymplecticBasis symplectic_reduce(Eigen::MatrixXi j_mat);

} // namespace tauforms
