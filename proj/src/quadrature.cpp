#include "tauforms/quadrature.hpp"

#include <cmath>
#include <vector>

namespace tauforms {

// Kronrod-15 abscissae/weights with embedded Gauss-7 (Patterson tables).
const double GK15::nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
const double GK15::wk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
const double GK15::wg[15] = {
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0, 0.381830050505119,
    0.0, 0.417959183673469, 0.0, 0.381830050505119, 0.0, 0.279705391489277,
    0.0, 0.129484966168870, 0.0};

namespace {

struct Panel {
    double a, b;
    int depth;
};

} // namespace

cdouble integrate_gk(const std::function<cdouble(double)>& f, double abs_tol, int max_depth) {
    std::vector<Panel> stack{{0.0, 1.0, 0}};
    cdouble total = 0.0;
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double h = 0.5 * (p.b - p.a), c = 0.5 * (p.a + p.b);
        cdouble k = 0.0, g = 0.0;
        for (int i = 0; i < 15; ++i) {
            cdouble v = f(c + h * GK15::nodes[i]);
            k += GK15::wk[i] * v;
            g += GK15::wg[i] * v;
        }
        k *= h;
        g *= h;
        double err = std::abs(k - g);
        if (err < abs_tol * std::max(1.0, p.b - p.a) || p.depth >= max_depth) {
            if (p.depth >= max_depth && err > 64.0 * abs_tol)
                throw QuadratureFailure("adaptive quadrature stalled above tolerance");
            total += k;
        } else {
            // left half on top so evaluation points stay globally ascending
            stack.push_back({c, p.b, p.depth + 1});
            stack.push_back({p.a, c, p.depth + 1});
        }
    }
    return total;
}

CVector integrate_gk_vec(const std::function<CVector(double)>& f, int dim, double abs_tol,
                         int max_depth) {
    std::vector<Panel> stack{{0.0, 1.0, 0}};
    CVector total = CVector::Zero(dim);
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double h = 0.5 * (p.b - p.a), c = 0.5 * (p.a + p.b);
        CVector k = CVector::Zero(dim), g = CVector::Zero(dim);
        for (int i = 0; i < 15; ++i) {
            CVector v = f(c + h * GK15::nodes[i]);
            k += GK15::wk[i] * v;
            g += GK15::wg[i] * v;
        }
        k *= h;
        g *= h;
        double err = (k - g).cwiseAbs().maxCoeff();
        if (err < abs_tol * std::max(1.0, p.b - p.a) || p.depth >= max_depth) {
            if (p.depth >= max_depth && err > 64.0 * abs_tol)
                throw QuadratureFailure("adaptive quadrature stalled above tolerance");
            total += k;
        } else {
            stack.push_back({c, p.b, p.depth + 1});
            stack.push_back({p.a, c, p.depth + 1});
        }
    }
    return total;
}

} // namespace tauforms
