#include "tauforms/surface.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tauforms/quadrature.hpp"

namespace tauforms {

namespace {

cdouble psqrt(cdouble z) { return std::sqrt(z); }

double dist_point_segment(cdouble p, cdouble a, cdouble b) {
    const cdouble d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * d.real() + (p - a).imag() * d.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

// adaptive branch continuation of sqrt(f) along a straight segment
cdouble continue_branch(const std::function<cdouble(cdouble)>& f, cdouble x_from, cdouble v_from,
                        cdouble x_to, int depth = 0) {
    const cdouble target = psqrt(f(x_to));
    const cdouble cand = (std::abs(target - v_from) <= std::abs(target + v_from)) ? target : -target;
    if (std::abs(cand - v_from) <= 0.35 * (std::abs(cand) + std::abs(v_from)) ||
        std::abs(cand) + std::abs(v_from) == 0.0)
        return cand;
    if (depth > 48) throw SheetTrackingLoss("branch continuation below minimum step");
    const cdouble mid = 0.5 * (x_from + x_to);
    const cdouble vm = continue_branch(f, x_from, v_from, mid, depth + 1);
    return continue_branch(f, mid, vm, x_to, depth + 1);
}

// continuation that also records intermediate points (for loop polylines)
void continue_branch_trace(const std::function<cdouble(cdouble)>& f, cdouble x_from,
                           cdouble v_from, cdouble x_to, std::vector<cdouble>& xs,
                           std::vector<cdouble>& vs, int depth = 0) {
    const cdouble target = psqrt(f(x_to));
    const cdouble cand = (std::abs(target - v_from) <= std::abs(target + v_from)) ? target : -target;
    if (std::abs(cand - v_from) <= 0.25 * (std::abs(cand) + std::abs(v_from)) ||
        std::abs(cand) + std::abs(v_from) == 0.0) {
        xs.push_back(x_to);
        vs.push_back(cand);
        return;
    }
    if (depth > 48) throw SheetTrackingLoss("branch continuation below minimum step");
    const cdouble mid = 0.5 * (x_from + x_to);
    continue_branch_trace(f, x_from, v_from, mid, xs, vs, depth + 1);
    continue_branch_trace(f, mid, vs.back(), x_to, xs, vs, depth + 1);
}

// memoizing y-tracker along one straight edge
class EdgeTracker {
public:
    EdgeTracker(const std::function<cdouble(cdouble)>& f, cdouble a, cdouble b, cdouble y_a)
        : f_(f), a_(a), b_(b) {
        known_[0.0] = y_a;
    }
    cdouble at(double t) {
        auto it = known_.find(t);
        if (it != known_.end()) return it->second;
        auto up = known_.upper_bound(t);
        // nearest known anchor
        double tb = -1;
        if (up != known_.end()) tb = up->first;
        double ta = -1;
        if (up != known_.begin()) ta = std::prev(up)->first;
        double t0 = (ta >= 0 && (tb < 0 || t - ta <= tb - t)) ? ta : tb;
        cdouble y = continue_branch(f_, x(t0), known_[t0], x(t));
        known_[t] = y;
        return y;
    }
    cdouble x(double t) const { return a_ + t * (b_ - a_); }

private:
    std::function<cdouble(cdouble)> f_;
    cdouble a_, b_;
    std::map<double, cdouble> known_;
};

} // namespace

HyperellipticCurve::HyperellipticCurve(std::vector<cdouble> branch_points, CurveModel model,
                                       double tol)
    : model_(model), tol_(tol), branch_(std::move(branch_points)) {
    const int nb = static_cast<int>(branch_.size());
    if (model_ == CurveModel::Odd) {
        if (nb % 2 != 1) throw InvalidCurve("odd model needs an odd number of finite branch points");
        genus_ = (nb - 1) / 2;
    } else {
        if (nb % 2 != 0) throw InvalidCurve("even model needs an even number of finite branch points");
        genus_ = (nb - 2) / 2;
    }
    if (genus_ < 1 || genus_ > 3) throw UnsupportedGenus("supported genus range is 1..3");

    scale_ = 0.0;
    double min_sep = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) {
            double d = std::abs(branch_[i] - branch_[j]);
            scale_ = std::max(scale_, d);
            min_sep = std::min(min_sep, d);
        }
    if (!(min_sep > 1e-12 * scale_))
        throw InvalidCurve("branch points are not pairwise distinct within separation tolerance");

    build_chain();
    build_loops();
    build_homology();
    build_periods();
    build_anchor();
    build_riemann_constants();
}

cdouble HyperellipticCurve::P(cdouble x) const {
    cdouble v = 1.0;
    for (const auto& e : branch_) v *= (x - e);
    return v;
}

cdouble HyperellipticCurve::dP(cdouble x) const {
    cdouble s = 0.0;
    for (size_t i = 0; i < branch_.size(); ++i) {
        cdouble t = 1.0;
        for (size_t j = 0; j < branch_.size(); ++j)
            if (j != i) t *= (x - branch_[j]);
        s += t;
    }
    return s;
}

cdouble HyperellipticCurve::ddP(cdouble x) const {
    cdouble s = 0.0;
    const size_t n = branch_.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            cdouble t = 2.0;
            for (size_t k = 0; k < n; ++k)
                if (k != i && k != j) t *= (x - branch_[k]);
            s += t;
        }
    return s;
}

cdouble HyperellipticCurve::y_of(const SurfacePoint& p) const {
    if (p.at_infinity) throw ChartFailure("no x-chart value at infinity");
    if (p.is_branch()) return 0.0;
    return static_cast<double>(p.sheet) * psqrt(P(p.x));
}

cdouble HyperellipticCurve::continue_y(cdouble x_from, cdouble y_from, cdouble x_to) const {
    return continue_branch([this](cdouble x) { return P(x); }, x_from, y_from, x_to);
}

void HyperellipticCurve::build_chain() {
    // greedy nearest-neighbor chain from the lexicographically smallest point
    std::vector<cdouble> rest = branch_;
    std::sort(rest.begin(), rest.end(), [](cdouble a, cdouble b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    chain_.clear();
    chain_.push_back(rest.front());
    rest.erase(rest.begin());
    while (!rest.empty()) {
        const cdouble cur = chain_.back();
        size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < rest.size(); ++i) {
            double d = std::abs(rest[i] - cur);
            if (d < bd - 1e-15 * scale_) {
                bd = d;
                best = i;
            }
        }
        chain_.push_back(rest[best]);
        rest.erase(rest.begin() + static_cast<long>(best));
    }
}

void HyperellipticCurve::build_loops() {
    // one stadium-shaped loop per consecutive chain pair; for the even model the
    // last pair is included too (2g+1 loops, rank 2g), for the odd model the 2g
    // finite pairs already span the homology
    const int nloops = static_cast<int>(chain_.size()) - 1;
    loops_.clear();
    loops_.reserve(nloops);
    auto pf = [this](cdouble x) { return P(x); };
    for (int k = 0; k < nloops; ++k) {
        const cdouble ea = chain_[k], eb = chain_[k + 1];
        const cdouble d = eb - ea;
        const double len = std::abs(d);
        double clear = 0.5 * len;
        for (const auto& e : branch_) {
            if (e == ea || e == eb) continue;
            clear = std::min(clear, dist_point_segment(e, ea, eb));
        }
        const double factor = (k % 2 == 0 ? 0.22 : 0.31) * (1.0 + 1e-3 * k);
        const double eps = factor * clear;
        const cdouble u = d / len, n = kI * u;

        std::vector<cdouble> pts;
        auto arc = [&](cdouble center, double a0, double a1, int steps) {
            for (int i = 1; i <= steps; ++i) {
                double a = a0 + (a1 - a0) * i / steps;
                pts.push_back(center + eps * std::exp(kI * a) * u);
            }
        };
        const cdouble m = 0.5 * (ea + eb);
        const int side_steps = 12, circ_steps = 48;
        pts.push_back(m - eps * n);
        for (int i = 1; i <= side_steps; ++i)
            pts.push_back(m - eps * n + (static_cast<double>(i) / side_steps) * (eb - m));
        // angles measured relative to the segment direction u
        arc(eb, -0.5 * kPi, 0.5 * kPi, circ_steps);
        for (int i = 1; i <= 2 * side_steps; ++i)
            pts.push_back(eb + eps * n + (static_cast<double>(i) / (2 * side_steps)) * (ea - eb));
        arc(ea, 0.5 * kPi, 1.5 * kPi, circ_steps);
        for (int i = 1; i <= side_steps; ++i)
            pts.push_back(ea - eps * n + (static_cast<double>(i) / side_steps) * (m - ea));

        LiftedLoop loop;
        loop.x.push_back(pts.front());
        loop.y.push_back(psqrt(P(pts.front())));
        for (size_t i = 1; i < pts.size(); ++i)
            continue_branch_trace(pf, loop.x.back(), loop.y.back(), pts[i], loop.x, loop.y);
        if (std::abs(loop.y.back() - loop.y.front()) >
            1e-6 * (std::abs(loop.y.front()) + 1e-300))
            throw SheetTrackingLoss("loop lift failed to close");
        loop.x.back() = loop.x.front();
        loop.y.back() = loop.y.front();
        loops_.push_back(std::move(loop));
    }
}

void HyperellipticCurve::build_homology() {
    const int m = static_cast<int>(loops_.size());
    Eigen::MatrixXi jmat = Eigen::MatrixXi::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            int v = intersection_number(loops_[i], loops_[j]);
            int w = intersection_number(loops_[j], loops_[i]);
            if (v != -w || std::abs(v) > 2)
                throw InvalidCurve("inconsistent numerical intersection pairing");
            jmat(i, j) = v;
            jmat(j, i) = -v;
        }
    SymplecticBasis basis = symplectic_reduce(jmat);
    if (basis.rank_pairs != genus_)
        throw InvalidCurve("homology rank does not match the genus");
    cycles_ = basis.transform.topRows(2 * genus_);
}

void HyperellipticCurve::build_periods() {
    const int m = static_cast<int>(loops_.size());
    const int g = genus_;
    loop_periods_.resize(m, g);

    for (int k = 0; k < m; ++k) {
        const cdouble ea = chain_[k], eb = chain_[k + 1];
        const cdouble c = 0.5 * (ea + eb), rho = 0.5 * (eb - ea);
        std::vector<cdouble> others;
        for (const auto& e : branch_)
            if (e != ea && e != eb) others.push_back(e);
        auto qf = [&others](cdouble x) {
            cdouble v = 1.0;
            for (const auto& r : others) v *= (x - r);
            return v;
        };
        // determination matched to the loop start value at the offset midpoint
        const cdouble y_loop = loops_[k].y.front();
        const cdouble base = kI * rho * psqrt(qf(c));
        const double sgn = (std::abs(base - y_loop) <= std::abs(base + y_loop)) ? 1.0 : -1.0;

        CVector prev = CVector::Zero(g);
        bool converged = false;
        for (int N = 32; N <= (1 << 16); N *= 2) {
            // Gauss-Chebyshev nodes, tracked sqrt(Q) from the midpoint outward
            std::vector<double> ts(N);
            for (int i = 0; i < N; ++i) ts[i] = std::cos((2.0 * i + 1.0) * kPi / (2.0 * N));
            std::sort(ts.begin(), ts.end());
            std::vector<cdouble> qv(N);
            int i0 = static_cast<int>(std::lower_bound(ts.begin(), ts.end(), 0.0) - ts.begin());
            cdouble qcur = psqrt(qf(c));
            cdouble xprev = c;
            for (int i = i0; i < N; ++i) {
                qcur = continue_branch(qf, xprev, qcur, c + rho * ts[i]);
                xprev = c + rho * ts[i];
                qv[i] = qcur;
            }
            qcur = psqrt(qf(c));
            xprev = c;
            for (int i = i0 - 1; i >= 0; --i) {
                qcur = continue_branch(qf, xprev, qcur, c + rho * ts[i]);
                xprev = c + rho * ts[i];
                qv[i] = qcur;
            }
            CVector acc = CVector::Zero(g);
            for (int i = 0; i < N; ++i) {
                const cdouble x = c + rho * ts[i];
                cdouble mono = 1.0;
                for (int j = 0; j < g; ++j) {
                    acc[j] += mono / qv[i];
                    mono *= x;
                }
            }
            acc *= kPi / N / (sgn * kI);
            if (N > 32 && (acc - prev).cwiseAbs().maxCoeff() <
                              tol_ * std::max(1.0, acc.cwiseAbs().maxCoeff())) {
                prev = acc;
                converged = true;
                break;
            }
            prev = acc;
        }
        if (!converged) throw QuadratureFailure("period quadrature did not converge");
        loop_periods_.row(k) = 2.0 * prev.transpose();
    }

    auto assemble = [&](const Eigen::MatrixXi& cyc) {
        CMatrix ap(g, g), bp(g, g);
        for (int i = 0; i < g; ++i) {
            CVector ra = CVector::Zero(g), rb = CVector::Zero(g);
            for (int k = 0; k < m; ++k) {
                ra += static_cast<double>(cyc(i, k)) * loop_periods_.row(k).transpose();
                rb += static_cast<double>(cyc(g + i, k)) * loop_periods_.row(k).transpose();
            }
            ap.row(i) = ra.transpose();
            bp.row(i) = rb.transpose();
        }
        return std::make_pair(ap, bp);
    };

    auto finish = [&](const CMatrix& ap, const CMatrix& bp) -> bool {
        Eigen::JacobiSVD<CMatrix> svd(ap);
        if (svd.singularValues()(g - 1) < 1e-13 * svd.singularValues()(0))
            throw IllConditioned("a-period matrix is numerically singular");
        CMatrix omega = bp * ap.inverse();
        const double sym = (omega - omega.transpose()).cwiseAbs().maxCoeff();
        if (sym > 1e-8 * std::max(1.0, omega.cwiseAbs().maxCoeff()))
            throw InvalidCurve("period matrix failed the symmetry check");
        Eigen::LLT<RMatrix> llt(omega.imag());
        if (llt.info() != Eigen::Success) return false;
        a_periods_ = ap;
        b_periods_ = bp;
        omega_ = std::make_shared<PeriodMatrix>(omega);
        norm_ = ap.inverse().transpose();
        return true;
    };

    auto [ap, bp] = assemble(cycles_);
    if (!finish(ap, bp)) {
        // orientation flip: rerun the reduction on -J
        Eigen::MatrixXi jmat = Eigen::MatrixXi::Zero(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) jmat(i, j) = -intersection_number(loops_[i], loops_[j]);
        SymplecticBasis basis = symplectic_reduce(jmat);
        cycles_ = basis.transform.topRows(2 * genus_);
        auto [ap2, bp2] = assemble(cycles_);
        if (!finish(ap2, bp2))
            throw NonPositiveDefinite("Im(Omega) is not definite under either orientation");
    }
}

void HyperellipticCurve::build_anchor() {
    cdouble center = 0.0;
    for (const auto& e : branch_) center += e;
    center /= static_cast<double>(branch_.size());
    double radius = 0.0;
    for (const auto& e : branch_) radius = std::max(radius, std::abs(e - center));
    radius = 1.9 * std::max(radius, 0.5 * scale_);
    for (int k = 0; k < 16; ++k) {
        const double phi = 0.37 + 2.0 * kPi * k / 16.0;
        const cdouble cand = center + radius * std::exp(kI * phi);
        double dmin = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < chain_.size(); ++i)
            dmin = std::min(dmin, dist_point_segment(cand, chain_[i], chain_[i + 1]));
        if (dmin > 0.4 * radius) {
            anchor_ = SurfacePoint(cand, +1);
            return;
        }
    }
    anchor_ = SurfacePoint(center + radius * cdouble(1.1, 1.3), +1);
}

PathSpec HyperellipticCurve::route(cdouble from, cdouble to) const {
    const double clear = std::min(0.06 * scale_, 0.33 * [&] {
        double ms = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < branch_.size(); ++i)
            for (size_t j = i + 1; j < branch_.size(); ++j)
                ms = std::min(ms, std::abs(branch_[i] - branch_[j]));
        return ms;
    }());
    std::vector<cdouble> pts{from, to};
    for (int round = 0; round < 12; ++round) {
        bool changed = false;
        for (size_t i = 0; i + 1 < pts.size() && !changed; ++i) {
            const cdouble a = pts[i], b = pts[i + 1];
            for (const auto& e : branch_) {
                if (std::abs(e - a) < 1e-14 * scale_ || std::abs(e - b) < 1e-14 * scale_)
                    continue;  // endpoint at a branch point is allowed (chart handled separately)
                if (dist_point_segment(e, a, b) < clear) {
                    const cdouble d = b - a;
                    double t = std::clamp(((e - a).real() * d.real() + (e - a).imag() * d.imag()) /
                                              std::norm(d), 0.0, 1.0);
                    const cdouble proj = a + t * d;
                    cdouble dir = proj - e;
                    if (std::abs(dir) < 1e-12 * scale_) dir = kI * d / std::abs(d);
                    dir /= std::abs(dir);
                    pts.insert(pts.begin() + static_cast<long>(i) + 1, e + 2.2 * clear * dir);
                    changed = true;
                    break;
                }
            }
        }
        if (!changed) break;
    }
    PathSpec path;
    path.points = std::move(pts);
    path.clearance = 0.9 * clear;
    return path;
}

void HyperellipticCurve::validate_path(const PathSpec& path) const {
    if (path.points.size() < 2) throw InvalidInput("path needs at least two points");
    for (size_t i = 0; i + 1 < path.points.size(); ++i) {
        for (const auto& e : branch_) {
            if (std::abs(e - path.points[i]) < 1e-14 * scale_ ||
                std::abs(e - path.points[i + 1]) < 1e-14 * scale_)
                continue;
            if (dist_point_segment(e, path.points[i], path.points[i + 1]) < 1e-9 * scale_)
                throw SheetTrackingLoss("path passes through a branch point");
        }
    }
}

CVector HyperellipticCurve::normalized_differentials(const SurfacePoint& p) const {
    const cdouble y = y_of(p);
    if (p.is_branch() || std::abs(y) == 0.0)
        throw ChartFailure("normalized differentials need a regular x-chart point");
    CVector f(genus_);
    cdouble mono = 1.0;
    for (int k = 0; k < genus_; ++k) {
        f[k] = mono;
        mono *= p.x;
    }
    return norm_ * f / y;
}

CVector HyperellipticCurve::normalized_differentials_branch_chart(cdouble e) const {
    bool found = false;
    for (const auto& b : branch_)
        if (std::abs(b - e) < 1e-12 * scale_) { found = true; e = b; }
    if (!found) throw ChartFailure("not a finite branch point");
    cdouble r = 1.0;
    for (const auto& b : branch_)
        if (b != e) r *= (e - b);
    // v_i = f_i dx with x = e + u^2: value 2 * sum_k norm(i,k) e^{k-1} / sqrt(P'(e))
    CVector mono(genus_);
    cdouble acc = 1.0;
    for (int k = 0; k < genus_; ++k) {
        mono[k] = acc;
        acc *= e;
    }
    return 2.0 * (norm_ * mono) / psqrt(r);
}

void HyperellipticCurve::differential_jets(const SurfacePoint& p, CVector& f, CVector& df,
                                           CVector& ddf) const {
    const cdouble y = y_of(p);
    if (std::abs(y) == 0.0) throw ChartFailure("jets need a regular x-chart point");
    const int g = genus_;
    CVector mono(g), dmono(g), ddmono(g);
    cdouble x = p.x;
    for (int k = 0; k < g; ++k) {
        mono[k] = std::pow(x, k);
        dmono[k] = (k >= 1) ? static_cast<double>(k) * std::pow(x, k - 1) : cdouble(0.0);
        ddmono[k] = (k >= 2) ? static_cast<double>(k * (k - 1)) * std::pow(x, k - 2) : cdouble(0.0);
    }
    const cdouble dp = dP(x), ddp = ddP(x);
    const cdouble yp = dp / (2.0 * y);
    const cdouble ypp = ddp / (2.0 * y) - dp * dp / (4.0 * y * y * y);
    CVector n0 = norm_ * mono, n1 = norm_ * dmono, n2 = norm_ * ddmono;
    f = n0 / y;
    df = n1 / y - n0 * yp / (y * y);
    ddf = n2 / y - 2.0 * n1 * yp / (y * y) + n0 * (2.0 * yp * yp / (y * y * y) - ypp / (y * y));
}

cdouble HyperellipticCurve::wronskian(const SurfacePoint& p) const {
    const int g = genus_;
    CVector f(g), df(g), ddf(g);
    differential_jets(p, f, df, ddf);
    CMatrix w(g, g);
    w.row(0) = f.transpose();
    if (g >= 2) w.row(1) = df.transpose();
    if (g >= 3) w.row(2) = ddf.transpose();
    return w.determinant();
}

CVector HyperellipticCurve::abel_map(const PathSpec& path) const {
    validate_path(path);
    const int g = genus_;
    auto pf = [this](cdouble x) { return P(x); };
    CVector total = CVector::Zero(g);
    cdouble ycur = 0.0;
    bool have_y = false;

    // split any branch-to-branch edge at its midpoint
    std::vector<cdouble> points;
    points.push_back(path.points.front());
    auto is_branch_pt = [&](cdouble z) {
        for (const auto& e : branch_)
            if (std::abs(z - e) < 1e-14 * scale_) return true;
        return false;
    };
    for (size_t i = 1; i < path.points.size(); ++i) {
        if (is_branch_pt(points.back()) && is_branch_pt(path.points[i]))
            points.push_back(0.5 * (points.back() + path.points[i]));
        points.push_back(path.points[i]);
    }

    for (size_t i = 0; i + 1 < points.size(); ++i) {
        const cdouble a = points[i], b = points[i + 1];
        if (std::abs(b - a) < 1e-300) continue;
        const bool a_branch = is_branch_pt(a);
        const bool b_branch = is_branch_pt(b);

        if (!have_y && !a_branch) {
            ycur = static_cast<double>(path.start_sheet) * psqrt(P(a));
            have_y = true;
        }

        if (!a_branch && !b_branch) {
            EdgeTracker tracker(pf, a, b, ycur);
            CVector seg = integrate_gk_vec(
                [&](double t) -> CVector {
                    const cdouble x = tracker.x(t);
                    const cdouble y = tracker.at(t);
                    CVector mono(g);
                    cdouble acc = 1.0;
                    for (int k = 0; k < g; ++k) {
                        mono[k] = acc;
                        acc *= x;
                    }
                    return (norm_ * mono) * ((b - a) / y);
                },
                g, tol_);
            total += seg;
            ycur = tracker.at(1.0);
        } else {
            // one endpoint at a branch point e: substitute x = e + s^2 (w - e)
            const cdouble e = a_branch ? a : b;
            const cdouble w = a_branch ? b : a;
            std::vector<cdouble> others;
            for (const auto& bb : branch_)
                if (std::abs(bb - e) >= 1e-14 * scale_) others.push_back(bb);
            auto rf = [&others](cdouble x) {
                cdouble v = 1.0;
                for (const auto& r : others) v *= (x - r);
                return v;
            };
            const cdouble sq = psqrt(w - e);
            // y(s) = sgn * s * sqrt(w-e) * sqrtR(x(s)); match at x = w (s = 1)
            cdouble sr_w = psqrt(rf(w));
            double sgn = 1.0;
            if (!a_branch) {
                // path arrives at e; determination known at w from tracking
                const cdouble yw = ycur;
                sgn = (std::abs(sq * sr_w - yw) <= std::abs(sq * sr_w + yw)) ? 1.0 : -1.0;
            }
            // tracked sqrt(R) along s in [0,1]
            auto xof = [&](double s) { return e + s * s * (w - e); };
            std::map<double, cdouble> known{{1.0, sr_w}};
            auto sr_at = [&](double s) {
                auto it = known.lower_bound(s);
                double t0;
                if (it == known.end()) t0 = std::prev(it)->first;
                else if (it == known.begin()) t0 = it->first;
                else t0 = (std::abs(it->first - s) < std::abs(std::prev(it)->first - s))
                              ? it->first : std::prev(it)->first;
                cdouble v = continue_branch(rf, xof(t0), known[t0], xof(s));
                known[s] = v;
                return v;
            };
            CVector seg = integrate_gk_vec(
                [&](double s) -> CVector {
                    const cdouble x = xof(s);
                    CVector mono(g);
                    cdouble acc = 1.0;
                    for (int k = 0; k < g; ++k) {
                        mono[k] = acc;
                        acc *= x;
                    }
                    // f = norm*mono / y, dx = 2 s (w-e) ds
                    return (norm_ * mono) * (2.0 * (w - e) / (sgn * sq * sr_at(s)));
                },
                g, tol_);
            if (a_branch) {
                total += seg;
                ycur = sgn * sq * sr_w;  // y at w
                have_y = true;
            } else {
                total -= seg;  // integral was taken from e to w; reverse
                have_y = false;  // next edge must start at the branch point
            }
        }
    }
    return total;
}

PathSpec HyperellipticCurve::canonical_path(const SurfacePoint& p) const {
    if (p.at_infinity) throw ChartFailure("points at infinity are not supported as path targets");
    PathSpec main = route(anchor_.x, p.x);
    if (p.is_branch()) return main;

    // check arrival sheet; prepend a sheet-flip circuit around the first chain
    // branch point when needed
    cdouble y = psqrt(P(anchor_.x));
    for (size_t i = 0; i + 1 < main.points.size(); ++i)
        y = continue_y(main.points[i], y, main.points[i + 1]);
    const cdouble want = y_of(p);
    if (std::abs(y - want) <= std::abs(y + want)) return main;

    const cdouble e = chain_.front();
    double ering = 0.45 * [&] {
        double md = std::numeric_limits<double>::infinity();
        for (const auto& b : branch_)
            if (b != e) md = std::min(md, std::abs(b - e));
        return md;
    }();
    PathSpec to_ring = route(anchor_.x, e + ering);
    std::vector<cdouble> pts = to_ring.points;
    for (int i = 1; i <= 24; ++i)
        pts.push_back(e + ering * std::exp(kTwoPiI * (static_cast<double>(i) / 24.0)));
    for (size_t i = to_ring.points.size() - 1; i-- > 0;) pts.push_back(to_ring.points[i]);
    for (size_t i = 1; i < main.points.size(); ++i) pts.push_back(main.points[i]);
    PathSpec out;
    out.points = std::move(pts);
    out.clearance = std::min(main.clearance, 0.4 * ering);
    return out;
}

CVector HyperellipticCurve::abel_point(const SurfacePoint& p) const {
    return abel_map(canonical_path(p));
}

PathSpec HyperellipticCurve::realize_cycle(const Eigen::RowVectorXi& coeffs) const {
    // single closed curve: the component loops are chained by connectors that
    // are each traversed once (doubled connectors would spoil double integrals
    // of the Riemann-constant kind)
    std::vector<cdouble> pts{anchor_.x};
    cdouble y = psqrt(P(anchor_.x));
    for (int k = 0; k < coeffs.size(); ++k) {
        int c = coeffs[k];
        if (c == 0) continue;
        const auto& loop = loops_[k];
        PathSpec conn = route(pts.back(), loop.x.front());
        cdouble yc = y;
        for (size_t i = 0; i + 1 < conn.points.size(); ++i)
            yc = continue_y(conn.points[i], yc, conn.points[i + 1]);
        const bool matches = std::abs(yc - loop.y.front()) <= std::abs(yc + loop.y.front());
        const bool forward = (c > 0) == matches;
        for (size_t i = 1; i < conn.points.size(); ++i) pts.push_back(conn.points[i]);
        for (int rep = 0; rep < std::abs(c); ++rep) {
            if (forward)
                for (size_t i = 1; i < loop.x.size(); ++i) pts.push_back(loop.x[i]);
            else
                for (size_t i = loop.x.size() - 1; i-- > 0;) pts.push_back(loop.x[i]);
        }
        y = yc;  // loops have trivial monodromy
    }
    PathSpec back = route(pts.back(), anchor_.x);
    for (size_t i = 1; i < back.points.size(); ++i) pts.push_back(back.points[i]);
    PathSpec path;
    path.points = std::move(pts);
    path.start_sheet = +1;
    return path;
}

PathSpec HyperellipticCurve::cycle_path(char kind, int index) const {
    if (index < 1 || index > genus_) throw InvalidInput("cycle index out of range");
    if (kind != 'a' && kind != 'b') throw InvalidInput("cycle kind must be 'a' or 'b'");
    const int row = (kind == 'a') ? index - 1 : genus_ + index - 1;
    return realize_cycle(cycles_.row(row));
}

cdouble HyperellipticCurve::integrate_over_path(
    const PathSpec& path, const std::function<cdouble(cdouble, cdouble)>& w_chart,
    double abs_tol) const {
    validate_path(path);
    auto pf = [this](cdouble x) { return P(x); };
    cdouble total = 0.0;
    cdouble ycur = static_cast<double>(path.start_sheet) * psqrt(P(path.points.front()));
    for (size_t i = 0; i + 1 < path.points.size(); ++i) {
        const cdouble a = path.points[i], b = path.points[i + 1];
        if (std::abs(b - a) < 1e-300) continue;
        EdgeTracker tracker(pf, a, b, ycur);
        total += integrate_gk(
            [&](double t) { return w_chart(tracker.x(t), tracker.at(t)) * (b - a); }, abs_tol);
        ycur = tracker.at(1.0);
    }
    return total;
}

cdouble HyperellipticCurve::integrate_over_cycle(
    char kind, int index, const std::function<cdouble(cdouble, cdouble)>& w_chart,
    double abs_tol) const {
    return integrate_over_path(cycle_path(kind, index), w_chart, abs_tol);
}

// The anchored vector of Riemann constants. At genus 1 the closed form
// (1+Omega)/2 is exact. At higher genus the double-integral formula is only
// unambiguous over a canonical polygon dissection (loop representatives based
// at one point, disjoint away from it); anchored loop products pick up
// iterated-integral corrections instead. We use the equivalent hyperelliptic
// characterization: 2 K^x = -A_x(canonical divisor) modulo the lattice, which
// fixes K up to one of 4^g half-periods, and the Riemann vanishing property
// theta(sum_{l<g} A(q_l) + K) = 0 selects the right one.
void HyperellipticCurve::build_riemann_constants() {
    const int g = genus_;
    k_anchor_.resize(g);
    for (int j = 0; j < g; ++j) k_anchor_[j] = 0.5 * (1.0 + (*omega_)(j, j));
    if (g == 1) return;

    // canonical divisor of (x - c0)^{g-1} dx / y: the two points over c0, each
    // with multiplicity g-1
    cdouble c0(0.0, 0.0);
    for (int attempt = 0; attempt < 32; ++attempt) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& e : branch_) dmin = std::min(dmin, std::abs(c0 - e));
        if (dmin > 0.15 * scale_) break;
        c0 += scale_ * cdouble(0.11, 0.067);
    }
    const CVector a_plus = abel_point(SurfacePoint(c0, +1));
    const CVector a_minus = abel_point(SurfacePoint(c0, -1));
    const CVector k_base = -0.5 * static_cast<double>(g - 1) * (a_plus + a_minus);

    // deterministic probe tuples of g-1 points for the vanishing test
    std::vector<CVector> probe_sums;
    cdouble center = 0.0;
    for (const auto& e : branch_) center += e;
    center /= static_cast<double>(branch_.size());
    double rad = 1.3 * scale_;
    for (int t = 0; t < 6; ++t) {
        CVector sum = CVector::Zero(g);
        for (int l = 0; l < g - 1; ++l) {
            const double phi = 0.41 + 2.0 * kPi * (t + 3.1 * l) / 6.7;
            SurfacePoint q(center + rad * std::exp(kI * phi), (t + l) % 2 ? +1 : -1);
            sum += abel_point(q);
        }
        probe_sums.push_back(sum);
    }

    const PeriodMatrix& pm = *omega_;
    double best = std::numeric_limits<double>::infinity(), second = best;
    CVector best_k = k_base;
    for (int code = 0; code < (1 << (2 * g)); ++code) {
        CVector h = CVector::Zero(g);
        for (int j = 0; j < g; ++j) {
            if (code & (1 << j)) h[j] += 0.5;
            if (code & (1 << (g + j)))
                for (int l = 0; l < g; ++l) h[l] += 0.5 * pm(l, j);
        }
        CVector cand = k_base + h;
        double score = 0.0;
        for (const auto& s : probe_sums) {
            CVector arg = cand + s;
            score = std::max(score,
                             std::abs(theta(arg, pm, ThetaChar::zero(g))) / theta_scale(arg, pm));
        }
        if (score < best) {
            second = best;
            best = score;
            best_k = cand;
        } else {
            second = std::min(second, score);
        }
    }
    if (!(best < 1e-6 && second > 1e-3))
        throw QuadratureFailure("Riemann constant half-period selection is ambiguous");
    k_anchor_ = best_k;
}

CVector HyperellipticCurve::riemann_constants(const SurfacePoint& basepoint) const {
    if (genus_ == 1) return k_anchor_;
    return k_anchor_ + static_cast<double>(genus_ - 1) * abel_point(basepoint);
}

HyperellipticCurve HyperellipticCurve::remarked(const Eigen::MatrixXi& sp_g) const {
    const int g = genus_;
    if (sp_g.rows() != 2 * g || sp_g.cols() != 2 * g)
        throw NotSymplectic("wrong size for a symplectic matrix");
    Eigen::MatrixXi form = Eigen::MatrixXi::Zero(2 * g, 2 * g);
    for (int i = 0; i < g; ++i) {
        form(i, g + i) = -1;  // b_i . a_j = -delta
        form(g + i, i) = 1;   // a_i . b_j = +delta
    }
    if ((sp_g * form * sp_g.transpose() - form).cwiseAbs().maxCoeff() != 0)
        throw NotSymplectic("matrix does not preserve the symplectic form");

    const Eigen::MatrixXi a_blk = sp_g.topLeftCorner(g, g);
    const Eigen::MatrixXi b_blk = sp_g.topRightCorner(g, g);
    const Eigen::MatrixXi c_blk = sp_g.bottomLeftCorner(g, g);
    const Eigen::MatrixXi d_blk = sp_g.bottomRightCorner(g, g);

    HyperellipticCurve out;
    out.genus_ = genus_;
    out.model_ = model_;
    out.tol_ = tol_;
    out.scale_ = scale_;
    out.branch_ = branch_;
    out.chain_ = chain_;
    out.loops_ = loops_;
    out.loop_periods_ = loop_periods_;
    out.anchor_ = anchor_;
    const Eigen::MatrixXi a_rows = cycles_.topRows(g);
    const Eigen::MatrixXi b_rows = cycles_.bottomRows(g);
    Eigen::MatrixXi nc(2 * g, cycles_.cols());
    nc.topRows(g) = c_blk * b_rows + d_blk * a_rows;     // new a-cycles
    nc.bottomRows(g) = a_blk * b_rows + b_blk * a_rows;  // new b-cycles
    out.cycles_ = nc;

    const int m = static_cast<int>(loops_.size());
    CMatrix ap(g, g), bp(g, g);
    for (int i = 0; i < g; ++i) {
        CVector ra = CVector::Zero(g), rb = CVector::Zero(g);
        for (int k = 0; k < m; ++k) {
            ra += static_cast<double>(nc(i, k)) * loop_periods_.row(k).transpose();
            rb += static_cast<double>(nc(g + i, k)) * loop_periods_.row(k).transpose();
        }
        ap.row(i) = ra.transpose();
        bp.row(i) = rb.transpose();
    }
    Eigen::JacobiSVD<CMatrix> svd(ap);
    if (svd.singularValues()(g - 1) < 1e-13 * svd.singularValues()(0))
        throw IllConditioned("remarked a-period matrix is numerically singular");
    CMatrix omega = bp * ap.inverse();
    out.a_periods_ = ap;
    out.b_periods_ = bp;
    out.omega_ = std::make_shared<PeriodMatrix>(omega);
    out.norm_ = ap.inverse().transpose();
    out.build_riemann_constants();
    return out;
}

HyperellipticCurve legendre_curve(double lambda, double tol) {
    return HyperellipticCurve({cdouble(0.0), cdouble(lambda), cdouble(1.0)}, CurveModel::Odd, tol);
}

} // namespace tauforms
