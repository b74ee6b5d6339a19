#include "fbp/solvers.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <limits>

#include "fbp/linear_algebra.hpp"

namespace fbp {

void SolveConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
    positive(eps, "eps");
    positive(cg_tol, "cg.tol");
    positive(descent_tol, "descent.tol");
    positive(armijo_c, "armijo c");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0)) throw std::invalid_argument("armijo shrink must lie in (0, 1)");
    if (cg_max_iter < 1 || max_outer_iter < 0 || mp_max_iter < 0 || newton_max_iter < 0) {
        throw std::invalid_argument("iteration caps must be nonnegative");
    }
    if (path_nodes < 3) throw std::invalid_argument("mp.path_nodes must be at least 3");
}

namespace {

double max_abs_interior(const Grid& grid, const ScalarField& r) {
    double m = 0.0;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (!grid.is_boundary(k)) m = std::max(m, std::abs(r[k]));
    }
    return m;
}

// <u, v>_S = <-L^h u, v>, assembled once per solve.
struct SobolevMetric {
    explicit SobolevMetric(const HorizontalOperators& ops)
        : system(assemble_neg_laplacian(ops)), cell_volume(ops.grid().cell_volume()) {}

    double inner(const ScalarField& a, const ScalarField& b) const {
        std::vector<double> ka(a.size());
        system.apply(a.span(), ka);
        return dot(ka, b.span()) * cell_volume;
    }

    SpdSystem system;
    double cell_volume;
};

}  // namespace

// ---------------------------------------------------------------------------
// Linear solves

ScalarField solve_linear(const ScalarField& rhs, const HorizontalOperators& ops, const SolveConfig& cfg,
                         LinearSolveInfo* info, const ScalarField* initial) {
    const Grid& grid = ops.grid();
    if (rhs.size() != grid.size()) throw std::invalid_argument("solve_linear: rhs does not match the grid");
    ScalarField b = with_zero_trace(grid, rhs);
    for (size_t k = 0; k < b.size(); ++k) {
        if (!std::isfinite(b[k])) throw std::invalid_argument("solve_linear: rhs must be finite");
    }
    ScalarField x = initial ? with_zero_trace(grid, *initial) : ScalarField(grid.size());
    const SpdSystem system(assemble_neg_laplacian(ops));
    const KrylovResult res = system.solve(b.span(), x.span(), cfg.cg_tol, cfg.cg_max_iter);
    if (info) {
        info->iterations = res.iterations;
        info->relative_residual = res.relative_residual;
    }
    if (!res.converged) {
        throw SolverError("conjugate gradients did not converge: relative residual " +
                          std::to_string(res.relative_residual) + " after " + std::to_string(res.iterations) +
                          " iterations");
    }
    return x;
}

ScalarField solve_linear(const ScalarField& rhs, const Grid& grid, const GroupSpec& spec, const SolveConfig& cfg) {
    const HorizontalOperators ops(spec, grid);
    return solve_linear(rhs, ops, cfg);
}

ScalarField solve_linear_dirichlet(const ScalarField& rhs, const ScalarField& boundary, const HorizontalOperators& ops,
                                   const SolveConfig& cfg) {
    const Grid& grid = ops.grid();
    if (boundary.size() != grid.size()) throw std::invalid_argument("solve_linear_dirichlet: boundary data size mismatch");
    ScalarField lift(grid.size());
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) lift[k] = boundary[k];
    }
    // -L (w + lift) = rhs on the interior  =>  -L w = rhs + L lift.
    ScalarField b = rhs + ops.sub_laplacian(lift);
    ScalarField w = solve_linear(b, ops, cfg);
    return w + lift;
}

ScalarField barrier_phi0(double A0, double lambda, const HorizontalOperators& ops, const SolveConfig& cfg) {
    if (!(A0 >= 0.0) || !(lambda >= 0.0)) throw std::invalid_argument("barrier_phi0: A0 and lambda must be nonnegative");
    ScalarField rhs = with_zero_trace(ops.grid(), ScalarField(ops.grid().size(), lambda * A0));
    return solve_linear(rhs, ops, cfg);
}

ScalarField barrier_phi0(double A0, double lambda, const Grid& grid, const GroupSpec& spec, const SolveConfig& cfg) {
    const HorizontalOperators ops(spec, grid);
    return barrier_phi0(A0, lambda, ops, cfg);
}

double barrier_constant(const SmoothedEnergy& energy, const ScalarField& u, const SolveConfig& cfg) {
    const Grid& grid = energy.grid();
    const Point none{};
    auto sup_over = [&](double top) {
        // g_eps is nondecreasing for the supported families only up to table
        // wiggles, so sample the whole range.
        double m = 0.0;
        const int samples = 256;
        for (int k = 0; k <= samples; ++k) {
            const double s = top * k / samples;
            m = std::max(m, g_eps_val(energy.nonlinearity(), none, s, energy.eps()));
        }
        return m;
    };
    double top = 0.0;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (!grid.is_boundary(k)) top = std::max(top, u[k] - 1.0);
    }
    double A0 = 1.1 * sup_over(std::max(top, 0.0));
    if (A0 == 0.0) return 0.0;
    const ScalarField phi = barrier_phi0(A0, energy.lambda(), energy.operators(), cfg);
    const double enlarged = 1.1 * sup_over(std::max(phi.max() - 1.0, 0.0));
    if (enlarged > A0) A0 = enlarged;
    return A0;
}

// ---------------------------------------------------------------------------
// Descent

DescentResult minimize_energy(const ScalarField& u0, const SmoothedEnergy& energy, const SolveConfig& cfg) {
    cfg.validate();
    const Grid& grid = energy.grid();
    const SpdSystem metric(assemble_neg_laplacian(energy.operators()));
    DescentResult out;
    out.u = u0;
    double e = energy.energy(out.u).total;
    out.energies.push_back(e);
    ScalarField dir(grid.size());
    while (true) {
        const ScalarField r = energy.residual(out.u);
        out.residual_norm = max_abs_interior(grid, r);
        if (out.residual_norm <= cfg.descent_tol) {
            out.converged = true;
            break;
        }
        if (out.iterations >= cfg.max_outer_iter) break;
        metric.solve(r.span(), dir.span(), 1e-6, cfg.cg_max_iter);
        const double slope = -dot(r.span(), dir.span()) * grid.cell_volume();
        if (!(slope < 0.0)) break;
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            ScalarField trial = out.u;
            trial.axpy(-step, dir);
            const double et = energy.energy(trial).total;
            if (et <= e + cfg.armijo_c * step * slope) {
                out.u = std::move(trial);
                e = et;
                accepted = true;
                break;
            }
            step *= cfg.armijo_shrink;
        }
        if (!accepted) break;
        ++out.iterations;
        out.energies.push_back(e);
    }
    return out;
}

ScalarField trial_bump(const Grid& grid) {
    const BoxDomain& box = grid.domain();
    return with_zero_trace(grid, sample(grid, [&](const Point& x) {
                               double v = 1.0;
                               for (size_t a = 0; a < x.size(); ++a) {
                                   const double c = 0.5 * (box.lower[a] + box.upper[a]);
                                   const double half = 0.5 * (box.upper[a] - box.lower[a]);
                                   const double s = std::abs(x[a] - c) / half;
                                   v *= B_val((1.0 - s) / (2.0 / 3.0));
                               }
                               return v;
                           }));
}

ScalarField find_negative_endpoint(const SmoothedEnergy& energy) {
    const ScalarField psi = trial_bump(energy.grid());
    for (int p = 1; p <= 16; ++p) {
        const double t = std::ldexp(1.0, p);
        ScalarField u = t * psi;
        if (energy.energy(u).total < 0.0) return u;
    }
    throw InoperableLambda("lambda below operable range: no negative energy up to amplitude 2^16");
}

// ---------------------------------------------------------------------------
// Path search

namespace {

double metric_norm(const Landscape& L, const ScalarField& v) { return std::sqrt(std::max(L.inner(v, v), 0.0)); }

// Redistributes nodes[0..] to m + 1 nodes equally spaced in metric arclength of
// the piecewise linear path.
std::vector<ScalarField> redistribute(const Landscape& L, const std::vector<ScalarField>& nodes, int m) {
    std::vector<double> cum{0.0};
    for (size_t i = 0; i + 1 < nodes.size(); ++i) cum.push_back(cum.back() + metric_norm(L, nodes[i + 1] - nodes[i]));
    std::vector<ScalarField> out;
    out.reserve(static_cast<size_t>(m) + 1);
    const double total = cum.back();
    size_t seg = 0;
    for (int j = 0; j <= m; ++j) {
        if (j == 0) {
            out.push_back(nodes.front());
            continue;
        }
        if (j == m) {
            out.push_back(nodes.back());
            continue;
        }
        const double s = total * j / m;
        while (seg + 2 < cum.size() && cum[seg + 1] < s) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double w = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
        ScalarField v = nodes[seg];
        v *= 1.0 - w;
        v.axpy(w, nodes[seg + 1]);
        out.push_back(std::move(v));
    }
    return out;
}

// Respreads both sides of nodes[keep] separately so that node stays on the path.
std::vector<ScalarField> respread_around(const Landscape& L, const std::vector<ScalarField>& nodes, size_t keep, int m) {
    double left = 0.0;
    double right = 0.0;
    for (size_t i = 0; i + 1 < nodes.size(); ++i) (i < keep ? left : right) += metric_norm(L, nodes[i + 1] - nodes[i]);
    if (!(left + right > 0.0)) return redistribute(L, nodes, m);
    int ml = static_cast<int>(std::lround(m * left / (left + right)));
    ml = std::clamp(ml, 1, m - 1);
    const std::vector<ScalarField> a(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(keep) + 1);
    const std::vector<ScalarField> b(nodes.begin() + static_cast<std::ptrdiff_t>(keep), nodes.end());
    std::vector<ScalarField> out = redistribute(L, a, ml);
    std::vector<ScalarField> tail = redistribute(L, b, m - ml);
    out.insert(out.end(), std::make_move_iterator(tail.begin() + 1), std::make_move_iterator(tail.end()));
    return out;
}

size_t argmax_interior(const std::vector<double>& e) {
    size_t k = 1;
    for (size_t j = 1; j + 1 < e.size(); ++j) {
        if (e[j] > e[k]) k = j;
    }
    return k;
}

// Damped Newton on R = 0 from u, globalized on the Euclidean residual norm.
ScalarField newton_refine(const Landscape& L, ScalarField u, const SolveConfig& cfg, int max_iter,
                          const std::function<void(int, const ScalarField&, double)>& report = {}) {
    ScalarField r = L.residual(u);
    double rn2 = std::sqrt(dot(r.span(), r.span()));
    for (int it = 0; it < max_iter; ++it) {
        if (r.max_abs() <= cfg.descent_tol) break;
        const ScalarField d = L.newton_step(u, r);
        if (d.size() == 0) break;
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            ScalarField trial = u;
            trial.axpy(step, d);
            const ScalarField rt = L.residual(trial);
            const double tn = std::sqrt(dot(rt.span(), rt.span()));
            if (tn < (1.0 - 1e-4 * step) * rn2) {
                u = std::move(trial);
                r = rt;
                rn2 = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (report) report(it, u, r.max_abs());
    }
    return u;
}

// Action of the metric-preconditioned Hessian, A v = S^{-1} H v, by central
// differences of the residual.
ScalarField hessian_action(const Landscape& L, const ScalarField& u, const ScalarField& v) {
    const double vn = v.max_abs();
    if (vn == 0.0) return ScalarField(u.size());
    const double h = 1e-6 * std::max(1.0, u.max_abs()) / vn;
    ScalarField up = u;
    up.axpy(h, v);
    ScalarField um = u;
    um.axpy(-h, v);
    ScalarField hv = L.residual(up) - L.residual(um);
    hv *= 0.5 / h;
    return L.precondition(hv);
}

// Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations; columns
// of vecs are the eigenvectors.
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& vals, std::vector<std::vector<double>>& vecs) {
    const size_t n = a.size();
    vecs.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) vecs[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double vkp = vecs[k][p];
                    const double vkq = vecs[k][q];
                    vecs[k][p] = c * vkp - sn * vkq;
                    vecs[k][q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    vals.resize(n);
    for (size_t i = 0; i < n; ++i) vals[i] = a[i][i];
}

// Lowest eigenpair of A = S^{-1} H (self-adjoint in the metric) by Lanczos
// with full reorthogonalization, started from v. v is returned with unit norm.
double lowest_mode(const Landscape& L, const ScalarField& u, ScalarField& v, int steps) {
    std::vector<ScalarField> q;
    q.push_back((1.0 / metric_norm(L, v)) * v);
    std::vector<double> alpha;
    std::vector<double> beta;
    for (int k = 0; k < steps; ++k) {
        ScalarField w = hessian_action(L, u, q.back());
        alpha.push_back(L.inner(w, q.back()));
        for (int pass = 0; pass < 2; ++pass) {
            for (const ScalarField& qj : q) w.axpy(-L.inner(w, qj), qj);
        }
        const double b = metric_norm(L, w);
        if (k + 1 == steps || !(b > 1e-10 * std::abs(alpha.back()))) break;
        beta.push_back(b);
        q.push_back((1.0 / b) * w);
    }
    const size_t m = alpha.size();
    std::vector<std::vector<double>> t(m, std::vector<double>(m, 0.0));
    for (size_t i = 0; i < m; ++i) {
        t[i][i] = alpha[i];
        if (i + 1 < m) t[i][i + 1] = t[i + 1][i] = beta[i];
    }
    std::vector<double> vals;
    std::vector<std::vector<double>> vecs;
    jacobi_eigen(t, vals, vecs);
    const size_t lo = static_cast<size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    ScalarField out(u.size());
    for (size_t i = 0; i < m; ++i) out.axpy(vecs[i][lo], q[i]);
    v = (1.0 / metric_norm(L, out)) * out;
    return vals[lo];
}

// Min-mode refinement of a peak node: a Newton step along the unstable
// direction plus an energy descent step in its complement, inside a trust
// region. A step is kept when the mode stays unstable and the metric gradient
// shrinks.
ScalarField climb(const Landscape& L, ScalarField u, ScalarField v, const SolveConfig& cfg, int max_iter) {
    ScalarField r = L.residual(u);
    ScalarField g = L.precondition(r);
    double gn = metric_norm(L, g);
    double mu = lowest_mode(L, u, v, 30);
    double radius = 0.05 * metric_norm(L, u);
    const double min_radius = 1e-10 * metric_norm(L, u);
    for (int it = 0; it < max_iter && r.max_abs() > cfg.descent_tol; ++it) {
        if (cfg.progress && it % 10 == 0) cfg.progress(it, L.energy(u), r.max_abs());
        if (!(mu < 0.0) || radius < min_radius) break;
        const double gv = L.inner(g, v);
        ScalarField perp = g;
        perp.axpy(-gv, v);
        ScalarField base = u;
        base.axpy(-gv / mu, v);
        const double e0 = L.energy(base);
        const double slope = L.inner(perp, perp);
        double step = 1.0;
        for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
            ScalarField trial = base;
            trial.axpy(-step, perp);
            if (L.energy(trial) <= e0 - 1e-4 * step * slope) break;
        }
        ScalarField delta = (-gv / mu) * v;
        delta.axpy(-step, perp);
        const double dn = metric_norm(L, delta);
        if (dn > radius) delta *= radius / dn;
        ScalarField trial = u + delta;
        ScalarField rt = L.residual(trial);
        ScalarField gt = L.precondition(rt);
        const double gtn = metric_norm(L, gt);
        ScalarField vt = v;
        const double mut = gtn < gn ? lowest_mode(L, trial, vt, 10) : 0.0;
        if (gtn < gn && mut < 0.0) {
            u = std::move(trial);
            r = std::move(rt);
            g = std::move(gt);
            gn = gtn;
            v = std::move(vt);
            mu = mut;
            radius = std::max(radius, 2.0 * std::min(dn, radius));
        } else {
            radius = 0.25 * std::min(dn, radius);
        }
    }
    return u;
}

}  // namespace

SaddleResult mountain_pass(const Landscape& L, const ScalarField& start, const ScalarField& end, const SolveConfig& cfg) {
    return mountain_pass(L, std::vector<ScalarField>{start, end}, cfg);
}

SaddleResult mountain_pass(const Landscape& L, const std::vector<ScalarField>& polyline, const SolveConfig& cfg) {
    cfg.validate();
    if (polyline.size() < 2) throw std::invalid_argument("mountain_pass: path needs two endpoints");
    const int P = cfg.path_nodes - 1;
    SaddleResult res;
    std::vector<ScalarField> path = redistribute(L, polyline, P);
    const double e_start = L.energy(polyline.front());
    const double e_end = L.energy(polyline.back());
    std::vector<double> energies(path.size());
    for (size_t j = 0; j < path.size(); ++j) energies[j] = L.energy(path[j]);

    double scale = 1.0;
    double best_residual = std::numeric_limits<double>::infinity();
    double best_peak = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int it = 0; it < cfg.mp_max_iter; ++it) {
        const size_t k = argmax_interior(energies);
        const double peak = energies[k];
        res.peak_history.push_back(peak);
        const ScalarField rk = L.residual(path[k]);
        const double rnorm = rk.max_abs();
        res.iterations = it;
        if (cfg.progress) cfg.progress(it, peak, rnorm);
        if (rnorm <= cfg.descent_tol) {
            res.converged = true;
            break;
        }
        if (rnorm < 0.98 * best_residual || peak < best_peak - 1e-3 * std::abs(best_peak)) {
            best_residual = std::min(best_residual, rnorm);
            best_peak = std::min(best_peak, peak);
            since_best = 0;
        } else if (++since_best > 40) {
            break;
        }
        if (peak <= std::max(e_start, e_end)) {
            res.status = "no separating barrier at this lambda, eps";
            break;
        }
        // Steepest descent directions with the tangent component removed.
        std::vector<ScalarField> dirs(path.size());
        std::vector<double> caps(path.size(), 0.0);
        for (size_t j = 1; j + 1 < path.size(); ++j) {
            const ScalarField g = L.precondition(j == k ? rk : L.residual(path[j]));
            ScalarField tau = path[j + 1] - path[j - 1];
            const double tn = metric_norm(L, tau);
            if (tn > 0.0) tau *= 1.0 / tn;
            ScalarField d = g;
            d.axpy(-L.inner(g, tau), tau);
            d *= -1.0;
            const double spacing =
                std::min(metric_norm(L, path[j + 1] - path[j]), metric_norm(L, path[j] - path[j - 1]));
            const double dn = metric_norm(L, d);
            caps[j] = dn > 0.0 ? std::min(1.0, 0.3 * spacing / dn) : 0.0;
            dirs[j] = std::move(d);
        }
        // Damped update: halve the step until the peak does not rise.
        bool accepted = false;
        while (scale > 1e-6) {
            std::vector<ScalarField> moved = path;
            for (size_t j = 1; j + 1 < path.size(); ++j) moved[j].axpy(scale * caps[j], dirs[j]);
            std::vector<double> me(moved.size());
            for (size_t j = 0; j < moved.size(); ++j) me[j] = L.energy(moved[j]);
            // Cut at the first node past the peak below E(start), then
            // respread P + 1 nodes by arclength keeping the peak node.
            const size_t kk = argmax_interior(me);
            size_t cut = moved.size() - 1;
            for (size_t j = kk + 1; j + 1 < moved.size(); ++j) {
                if (me[j] < e_start) {
                    cut = j;
                    break;
                }
            }
            moved.resize(cut + 1);
            std::vector<ScalarField> next = respread_around(L, moved, kk, P);
            std::vector<double> ne(next.size());
            for (size_t j = 0; j < next.size(); ++j) ne[j] = L.energy(next[j]);
            if (ne[argmax_interior(ne)] <= peak) {
                path = std::move(next);
                energies = std::move(ne);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;
        scale = std::min(1.0, 2.0 * scale);
    }
    size_t k = argmax_interior(energies);
    res.u_mp = path[k];
    res.c_eps = energies[k];
    res.residual_norm = L.residual(res.u_mp).max_abs();

    const double e_floor = std::max(e_start, e_end);
    if (!res.converged && res.status.empty()) {
        ScalarField tau = path[k + 1] - path[k - 1];
        const double tn = metric_norm(L, tau);
        if (tn > 0.0) {
            tau *= 1.0 / tn;
            const ScalarField u = climb(L, res.u_mp, tau, cfg, cfg.mp_max_iter);
            const double rmax = L.residual(u).max_abs();
            if (rmax < res.residual_norm && L.energy(u) > e_floor) {
                res.u_mp = u;
                res.residual_norm = rmax;
                res.c_eps = L.energy(u);
                path[k] = u;
                energies[k] = res.c_eps;
            }
            res.converged = res.residual_norm <= cfg.descent_tol;
        }
    }
    if (!res.converged && L.newton_step && res.status.empty()) {
        const auto report = [&](int it, const ScalarField& u, double r) {
            if (cfg.progress) cfg.progress(-1 - it, L.energy(u), r);
        };
        const ScalarField u = newton_refine(L, res.u_mp, cfg, cfg.newton_max_iter, report);
        const double rmax = L.residual(u).max_abs();
        // A Newton run that slides off the barrier lands on a critical point
        // below the endpoints (the start itself, typically).
        if (rmax < res.residual_norm && L.energy(u) > e_floor) {
            res.u_mp = u;
            res.residual_norm = rmax;
            res.c_eps = L.energy(u);
            path[k] = u;
            energies[k] = res.c_eps;
        }
        res.converged = rmax <= cfg.descent_tol;
    }
    res.path.nodes = std::move(path);
    res.path.energies = std::move(energies);
    if (res.status.empty()) res.status = res.converged ? "converged" : "iteration cap reached";
    return res;
}

namespace {

Landscape pde_landscape(const SmoothedEnergy& energy, const SobolevMetric& metric) {
    const Grid& grid = energy.grid();
    Landscape L;
    L.energy = [&energy](const ScalarField& u) { return energy.energy(u).total; };
    L.residual = [&energy](const ScalarField& u) { return energy.residual(u); };
    L.precondition = [&metric, &grid](const ScalarField& r) {
        ScalarField g(grid.size());
        metric.system.solve(r.span(), g.span(), 1e-6, 2000);
        return g;
    };
    L.inner = [&metric](const ScalarField& a, const ScalarField& b) { return metric.inner(a, b); };
    L.newton_step = [&energy, &grid, &metric](const ScalarField& u, const ScalarField& r) {
        const ScalarField curv = energy.curvature(u);
        const LinearOperator H = [&energy, &curv](std::span<const double> in, std::span<double> out) {
            energy.hessian_apply(curv, in, out);
        };
        ScalarField rhs = r;
        rhs *= -1.0;
        ScalarField d(grid.size());
        minres(H, metric.system.preconditioner(), rhs.span(), d.span(), 1e-8, 3000);
        return d;
    };
    return L;
}

// Interior nodes grouped by the connected components of -L^h. The energy is a
// sum of independent terms over these classes.
struct NodeClasses {
    explicit NodeClasses(const SobolevMetric& metric, const Grid& grid) {
        int n = 0;
        const std::vector<int> raw = connected_components(metric.system.matrix(), n);
        std::vector<int> remap(static_cast<size_t>(n), -1);
        label.assign(grid.size(), -1);
        for (size_t k = 0; k < grid.size(); ++k) {
            if (grid.is_boundary(k)) continue;
            int& c = remap[static_cast<size_t>(raw[k])];
            if (c < 0) c = count++;
            label[k] = c;
        }
    }

    ScalarField restrict_to(const ScalarField& u, int c) const {
        ScalarField out(u.size());
        for (size_t k = 0; k < u.size(); ++k) {
            if (label[k] == c) out[k] = u[k];
        }
        return out;
    }

    std::vector<int> label;
    int count = 0;
};

// The landscape seen by fields supported on one class.
Landscape restricted(const Landscape& L, const NodeClasses& classes, int c) {
    Landscape out;
    out.energy = L.energy;
    out.inner = L.inner;
    out.residual = [&L, &classes, c](const ScalarField& u) { return classes.restrict_to(L.residual(u), c); };
    out.precondition = [&L, &classes, c](const ScalarField& r) {
        return classes.restrict_to(L.precondition(classes.restrict_to(r, c)), c);
    };
    if (L.newton_step) {
        out.newton_step = [&L, &classes, c](const ScalarField& u, const ScalarField& r) {
            const ScalarField d = L.newton_step(u, classes.restrict_to(r, c));
            return d.size() == 0 ? d : classes.restrict_to(d, c);
        };
    }
    return out;
}

// Path search run separately on every class and superposed. A search over all
// nodes at once settles on a field that vanishes on all classes but one.
SaddleResult split_mountain_pass(const Landscape& L, const NodeClasses& classes,
                                 const std::vector<ScalarField>& polyline, const SolveConfig& cfg) {
    const size_t n = polyline.front().size();
    SaddleResult out;
    out.u_mp = ScalarField(n);
    out.converged = true;
    std::vector<ScalarField> nodes;
    bool any = false;
    for (int c = 0; c < classes.count; ++c) {
        std::vector<ScalarField> poly;
        for (const ScalarField& v : polyline) poly.push_back(classes.restrict_to(v, c));
        if (!(L.energy(poly.back()) < L.energy(poly.front()))) continue;
        any = true;
        const Landscape Lc = restricted(L, classes, c);
        SaddleResult r = mountain_pass(Lc, poly, cfg);
        out.u_mp += r.u_mp;
        out.iterations += r.iterations;
        out.converged = out.converged && r.converged;
        if (out.status.empty() || !r.converged) out.status = r.status;
        if (nodes.empty()) nodes.assign(r.path.nodes.size(), ScalarField(n));
        for (size_t j = 0; j < nodes.size() && j < r.path.nodes.size(); ++j) nodes[j] += r.path.nodes[j];
        const size_t len = std::max(out.peak_history.size(), r.peak_history.size());
        const double last_out = out.peak_history.empty() ? 0.0 : out.peak_history.back();
        const double last_r = r.peak_history.empty() ? 0.0 : r.peak_history.back();
        out.peak_history.resize(len, last_out);
        for (size_t j = 0; j < len; ++j) out.peak_history[j] += j < r.peak_history.size() ? r.peak_history[j] : last_r;
    }
    if (!any) throw InoperableLambda("no class of the grid reaches negative energy along the endpoint");
    out.c_eps = L.energy(out.u_mp);
    out.residual_norm = L.residual(out.u_mp).max_abs();
    out.converged = out.converged && out.residual_norm <= cfg.descent_tol;
    out.path.nodes = std::move(nodes);
    for (const ScalarField& v : out.path.nodes) out.path.energies.push_back(L.energy(v));
    return out;
}

// Newton on every class separately. A class that slides down to a critical
// point of nonpositive energy (the origin) keeps its input. If the whole field
// ends below the threshold it has fallen to the trivial solution: the input
// is returned so the caller sees an unconverged residual.
ScalarField newton_by_class(const Landscape& L, const NodeClasses& classes, const ScalarField& u0,
                            const SolveConfig& cfg) {
    ScalarField out(u0.size());
    for (int c = 0; c < classes.count; ++c) {
        const ScalarField uc = classes.restrict_to(u0, c);
        if (uc.max_abs() == 0.0) continue;
        const Landscape Lc = restricted(L, classes, c);
        ScalarField u = newton_refine(Lc, uc, cfg, cfg.newton_max_iter);
        out += Lc.energy(u) > 0.0 ? u : uc;
    }
    if (u0.max() > 1.0 && out.max() <= 1.0) return u0;
    return out;
}

struct Homotopy {
    const HorizontalOperators& ops;
    const NonlinearitySpec& nl;
    const SobolevMetric& metric;
    const NodeClasses& classes;
    SolveConfig cfg;
    int substeps = 0;

    // Critical point at eps_to followed from one at eps_from; the eps interval
    // is split geometrically while Newton fails.
    std::optional<ScalarField> track(const ScalarField& u, double eps_from, double eps_to, int depth) {
        SolveConfig c = cfg;
        c.eps = eps_to;
        const SmoothedEnergy energy(ops, nl, c.lambda, eps_to);
        const Landscape L = pde_landscape(energy, metric);
        ++substeps;
        ScalarField v = newton_by_class(L, classes, u, c);
        if (L.residual(v).max_abs() <= c.descent_tol) return v;
        if (depth == 0) return std::nullopt;
        const double mid = std::sqrt(eps_from * eps_to);
        const std::optional<ScalarField> w = track(u, eps_from, mid, depth - 1);
        if (!w) return std::nullopt;
        return track(*w, mid, eps_to, depth - 1);
    }
};

}  // namespace

SaddleResult refine_saddle(const ScalarField& u0, const SmoothedEnergy& energy, const SolveConfig& cfg) {
    cfg.validate();
    const SobolevMetric metric(energy.operators());
    const NodeClasses classes(metric, energy.grid());
    const Landscape L = pde_landscape(energy, metric);
    SaddleResult out;
    out.u_mp = newton_by_class(L, classes, u0, cfg);
    out.c_eps = L.energy(out.u_mp);
    out.residual_norm = L.residual(out.u_mp).max_abs();
    out.converged = out.residual_norm <= cfg.descent_tol;
    out.status = out.converged ? "converged" : "iteration cap reached";
    return out;
}

SaddleResult mountain_pass(const ScalarField& u_end, const SmoothedEnergy& energy, const SolveConfig& cfg) {
    if (!(energy.energy(u_end).total < 0.0)) throw std::invalid_argument("mountain_pass: E_eps(u_end) must be negative");
    const SobolevMetric metric(energy.operators());
    const NodeClasses classes(metric, energy.grid());
    const Landscape L = pde_landscape(energy, metric);
    return split_mountain_pass(L, classes, {ScalarField(energy.grid().size()), u_end}, cfg);
}

// ---------------------------------------------------------------------------
// Continuation

ContinuationResult eps_continuation(const std::vector<double>& schedule, const HorizontalOperators& ops,
                                    const NonlinearitySpec& nl, const SolveConfig& cfg) {
    if (schedule.empty()) throw std::invalid_argument("eps_continuation: empty schedule");
    for (size_t j = 0; j < schedule.size(); ++j) {
        if (!(schedule[j] > 0.0)) throw std::invalid_argument("eps_continuation: eps must be positive");
        if (j > 0 && !(schedule[j] < schedule[j - 1])) {
            throw std::invalid_argument("eps_continuation: schedule must be strictly decreasing");
        }
    }
    const SobolevMetric metric(ops);
    const NodeClasses classes(metric, ops.grid());
    Homotopy homotopy{ops, nl, metric, classes, cfg};
    ContinuationResult out;
    for (size_t j = 0; j < schedule.size(); ++j) {
        SolveConfig c = cfg;
        c.eps = schedule[j];
        homotopy.cfg = c;
        const SmoothedEnergy energy(ops, nl, cfg.lambda, c.eps);
        const Landscape L = pde_landscape(energy, metric);
        ContinuationStep step;
        step.eps = c.eps;
        try {
            if (j == 0) {
                const ScalarField u_end = find_negative_endpoint(energy);
                step.saddle = split_mountain_pass(L, classes, {ScalarField(ops.grid().size()), u_end}, c);
                step.u = step.saddle.u_mp;
                step.method = "mountain_pass";
                // Larger eps smooths the landscape: find the saddle there and
                // follow it back down.
                for (int lift = 1; lift <= 2 && !step.saddle.converged; ++lift) {
                    SolveConfig cl = c;
                    cl.eps = c.eps * std::pow(2.0, lift);
                    const SmoothedEnergy el(ops, nl, cfg.lambda, cl.eps);
                    const Landscape Ll = pde_landscape(el, metric);
                    const ScalarField ul = find_negative_endpoint(el);
                    const SaddleResult high = split_mountain_pass(Ll, classes, {ScalarField(ops.grid().size()), ul}, cl);
                    if (!high.converged) continue;
                    const std::optional<ScalarField> v = homotopy.track(high.u_mp, cl.eps, c.eps, 4);
                    if (!v) continue;
                    step.saddle.u_mp = *v;
                    step.saddle.c_eps = L.energy(*v);
                    step.saddle.residual_norm = L.residual(*v).max_abs();
                    step.saddle.converged = true;
                    step.saddle.status = "converged";
                    step.saddle.iterations += high.iterations;
                    step.u = *v;
                    step.method = "eps_homotopy";
                }
            } else {
                const ScalarField& prev = out.steps.back().u;
                const std::optional<ScalarField> v = homotopy.track(prev, schedule[j - 1], c.eps, 4);
                step.u = v ? *v : newton_refine(L, prev, c, c.newton_max_iter);
                step.method = "warm_start_newton";
                // a field that never reaches the threshold is the trivial solution
                if (step.u.max() <= 1.0 || L.residual(step.u).max_abs() > c.descent_tol) {
                    // Path from 0 through the previous critical point to a
                    // negative state, then an unseeded path if that fails.
                    const ScalarField u_end = find_negative_endpoint(energy);
                    const ScalarField zero(ops.grid().size());
                    step.saddle = split_mountain_pass(L, classes, {zero, prev, u_end}, c);
                    step.method = "seeded_mountain_pass";
                    if (!step.saddle.converged) {
                        SaddleResult fresh = split_mountain_pass(L, classes, {zero, u_end}, c);
                        if (fresh.residual_norm < step.saddle.residual_norm) {
                            step.saddle = std::move(fresh);
                            step.method = "mountain_pass";
                        }
                    }
                    step.u = step.saddle.u_mp;
                }
            }
        } catch (const SolverError& e) {
            out.failure = e.what();
            return out;
        }
        step.residual_norm = L.residual(step.u).max_abs();
        step.converged = step.residual_norm <= c.descent_tol;
        step.energy_eps = energy.energy(step.u);
        step.energy_limit = energy_limit(step.u, cfg.lambda, nl, ops);
        if (step.saddle.u_mp.size() == 0) {
            step.saddle.u_mp = step.u;
            step.saddle.c_eps = step.energy_eps.total;
            step.saddle.residual_norm = step.residual_norm;
            step.saddle.converged = step.converged;
            step.saddle.status = step.converged ? "converged" : "warm start did not converge";
        }
        out.steps.push_back(std::move(step));
        if (!out.steps.back().converged) {
            out.failure = "step eps = " + std::to_string(c.eps) + " did not reach descent.tol";
            return out;
        }
    }
    out.completed = true;
    return out;
}

}  // namespace fbp
