#include "tauforms/homology.hpp"

#include <cmath>

#include "tauforms/errors.hpp"

namespace tauforms {

namespace {

// crossing of segments p0+s(p1-p0), q0+t(q1-q0), s,t in [0,1); returns false if
// parallel or outside
bool segment_crossing(cdouble p0, cdouble p1, cdouble q0, cdouble q1, double& s, double& t) {
    const cdouble d1 = p1 - p0, d2 = q1 - q0;
    const double det = d1.real() * d2.imag() - d1.imag() * d2.real();
    const double scale = std::abs(d1) * std::abs(d2);
    if (std::abs(det) < 1e-14 * scale) return false;
    const cdouble r = q0 - p0;
    s = (r.real() * d2.imag() - r.imag() * d2.real()) / det;
    t = (r.real() * d1.imag() - r.imag() * d1.real()) / det;
    return s >= 0.0 && s < 1.0 && t >= 0.0 && t < 1.0;
}

} // namespace

int intersection_number(const LiftedLoop& a, const LiftedLoop& b) {
    // bounding boxes per edge for the pair prefilter
    double total = 0.0;
    const size_t na = a.x.size() - 1, nb = b.x.size() - 1;
    for (size_t i = 0; i < na; ++i) {
        const cdouble p0 = a.x[i], p1 = a.x[i + 1];
        const double alo_x = std::min(p0.real(), p1.real()), ahi_x = std::max(p0.real(), p1.real());
        const double alo_y = std::min(p0.imag(), p1.imag()), ahi_y = std::max(p0.imag(), p1.imag());
        for (size_t j = 0; j < nb; ++j) {
            const cdouble q0 = b.x[j], q1 = b.x[j + 1];
            if (std::max(q0.real(), q1.real()) < alo_x || std::min(q0.real(), q1.real()) > ahi_x ||
                std::max(q0.imag(), q1.imag()) < alo_y || std::min(q0.imag(), q1.imag()) > ahi_y)
                continue;
            double s, t;
            if (!segment_crossing(p0, p1, q0, q1, s, t)) continue;
            const cdouble ya = a.y[i] + s * (a.y[i + 1] - a.y[i]);
            const cdouble yb = b.y[j] + t * (b.y[j + 1] - b.y[j]);
            if (std::abs(ya - yb) >= std::abs(ya + yb)) continue;  // opposite sheets
            const cdouble u = p1 - p0, v = q1 - q0;
            const double sign = u.real() * v.imag() - u.imag() * v.real();
            total += (sign > 0) ? 1.0 : -1.0;
        }
    }
    return static_cast<int>(std::lround(total));
}

SymplecticBasis symplectic_reduce(Eigen::MatrixXi j_mat) {
    const int m = static_cast<int>(j_mat.rows());
    if (j_mat.cols() != m || (j_mat + j_mat.transpose()).cwiseAbs().maxCoeff() != 0)
        throw InvalidInput("symplectic_reduce: matrix must be skew-symmetric");
    Eigen::MatrixXi u = Eigen::MatrixXi::Identity(m, m);

    auto row_op = [&](int dst, int src, long long c) {
        // row_dst += c*row_src together with the mirrored column op (congruence)
        j_mat.row(dst) += static_cast<int>(c) * j_mat.row(src);
        j_mat.col(dst) += static_cast<int>(c) * j_mat.col(src);
        u.row(dst) += static_cast<int>(c) * u.row(src);
    };
    auto row_swap = [&](int r1, int r2) {
        if (r1 == r2) return;
        j_mat.row(r1).swap(j_mat.row(r2));
        j_mat.col(r1).swap(j_mat.col(r2));
        u.row(r1).swap(u.row(r2));
    };
    auto row_negate = [&](int r) {
        j_mat.row(r) *= -1;
        j_mat.col(r) *= -1;
        u.row(r) *= -1;
    };

    int r = 0;
    int base = 0;
    while (true) {
        // smallest nonzero |entry| in the working block, lexicographic tie-break
        int bi = -1, bj = -1;
        int best = 0;
        for (int i = base; i < m; ++i)
            for (int j = base; j < m; ++j) {
                int v = std::abs(j_mat(i, j));
                if (v != 0 && (best == 0 || v < best)) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (bi < 0) break;
        row_swap(base, bi);
        if (bj == base) bj = bi;  // swapped away
        row_swap(base + 1, bj);
        if (j_mat(base, base + 1) < 0) row_negate(base + 1);

        // gcd-style elimination of the pivot row/column
        bool clean = false;
        for (int guard = 0; guard < 64 && !clean; ++guard) {
            clean = true;
            const int piv = j_mat(base, base + 1);
            for (int l = base; l < m; ++l) {
                if (l == base || l == base + 1) continue;
                if (j_mat(base, l) != 0) {
                    int q = j_mat(base, l) / piv;
                    row_op(l, base + 1, -q);
                    if (j_mat(base, l) != 0) {  // remainder: bring it into the pivot
                        row_swap(base + 1, l);
                        if (j_mat(base, base + 1) < 0) row_negate(base + 1);
                        clean = false;
                        break;
                    }
                }
                if (j_mat(l, base + 1) != 0) {
                    int q = j_mat(l, base + 1) / piv;
                    row_op(l, base, -q);
                    if (j_mat(l, base + 1) != 0) {
                        row_swap(base, l);
                        if (j_mat(base, base + 1) < 0) row_negate(base + 1);
                        clean = false;
                        break;
                    }
                }
            }
        }
        if (j_mat(base, base + 1) != 1)
            throw IllConditioned("symplectic_reduce: nontrivial elementary divisor");
        ++r;
        base += 2;
    }

    // reorder interleaved (a1,b1,a2,b2,...) into (a1..ar, b1..br, kernel)
    Eigen::MatrixXi out(m, m);
    for (int k = 0; k < r; ++k) {
        out.row(k) = u.row(2 * k);
        out.row(r + k) = u.row(2 * k + 1);
    }
    for (int k = 2 * r; k < m; ++k) out.row(k) = u.row(k);
    return {out, r};
}

} // namespace tauforms
