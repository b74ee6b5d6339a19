#include "fbp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbp {

namespace {

bool is_cell_corner(const Grid& grid, size_t node) {
    for (int a = 0; a < grid.dim(); ++a) {
        if (grid.axis_index(node, a) >= grid.nodes(a) - 1) return false;
    }
    return true;
}

size_t vertex(const Grid& grid, size_t corner, unsigned mask) {
    size_t k = corner;
    for (int a = 0; a < grid.dim(); ++a) {
        if (mask & (1u << a)) k += grid.stride(a);
    }
    return k;
}

// Horizontal gradient as a vector of R^N: sum_i (Z_i u) a_i.
std::vector<double> horizontal_vector(const HorizontalOperators& ops, const HorizontalField& g, size_t node) {
    const int dim = ops.grid().dim();
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    for (int i = 0; i < ops.horizontal_dim(); ++i) {
        for (const auto& s : ops.stencil(i, node)) v[static_cast<size_t>(s.axis)] += g.components[static_cast<size_t>(i)][node] * s.coefficient;
    }
    return v;
}

double min_spacing(const Grid& grid) {
    double h = std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid.dim(); ++a) h = std::min(h, grid.spacing(a));
    return h;
}

double max_spacing(const Grid& grid) {
    double h = 0.0;
    for (int a = 0; a < grid.dim(); ++a) h = std::max(h, grid.spacing(a));
    return h;
}

}  // namespace

FreeBoundaryCells extract_free_boundary(const ScalarField& u, const Grid& grid) {
    if (u.size() != grid.size()) throw std::invalid_argument("extract_free_boundary: field does not match the grid");
    FreeBoundaryCells out;
    const int dim = grid.dim();
    const unsigned corners = 1u << dim;
    for (size_t c = 0; c < grid.size(); ++c) {
        if (!is_cell_corner(grid, c)) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (unsigned m = 0; m < corners; ++m) {
            const double v = u[vertex(grid, c, m)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(lo <= 1.0 && 1.0 <= hi && lo < hi)) continue;
        CellCrossing cell;
        cell.corner = c;
        cell.location.assign(static_cast<size_t>(dim), 0.0);
        int crossings = 0;
        for (unsigned m = 0; m < corners; ++m) {
            for (int a = 0; a < dim; ++a) {
                if (m & (1u << a)) continue;
                const size_t ka = vertex(grid, c, m);
                const size_t kb = ka + grid.stride(a);
                const double ua = u[ka];
                const double ub = u[kb];
                if ((ua - 1.0) * (ub - 1.0) > 0.0 || ua == ub) continue;
                const double t = (1.0 - ua) / (ub - ua);
                const Point xa = grid.point(ka);
                for (int b = 0; b < dim; ++b) cell.location[static_cast<size_t>(b)] += xa[static_cast<size_t>(b)];
                cell.location[static_cast<size_t>(a)] += t * grid.spacing(a);
                ++crossings;
            }
        }
        for (double& x : cell.location) x /= crossings;
        out.cells.push_back(std::move(cell));
    }
    return out;
}

FreeBoundaryCells extract_free_boundary(const ScalarField& u, const HorizontalOperators& ops) {
    const Grid& grid = ops.grid();
    FreeBoundaryCells out = extract_free_boundary(u, grid);
    const HorizontalField g = ops.gradient(u);
    const int dim = grid.dim();
    const unsigned corners = 1u << dim;
    for (CellCrossing& cell : out.cells) {
        // multilinear interpolation of the vertex vectors at the crossing
        std::vector<double> n(static_cast<size_t>(dim), 0.0);
        const Point x0 = grid.point(cell.corner);
        for (unsigned m = 0; m < corners; ++m) {
            double w = 1.0;
            for (int a = 0; a < dim; ++a) {
                const double t = (cell.location[static_cast<size_t>(a)] - x0[static_cast<size_t>(a)]) / grid.spacing(a);
                w *= (m & (1u << a)) ? t : 1.0 - t;
            }
            if (w == 0.0) continue;
            const std::vector<double> v = horizontal_vector(ops, g, vertex(grid, cell.corner, m));
            for (int a = 0; a < dim; ++a) n[static_cast<size_t>(a)] += w * v[static_cast<size_t>(a)];
        }
        double len = 0.0;
        for (double c : n) len += c * c;
        len = std::sqrt(len);
        if (len > 0.0) {
            for (double& c : n) c /= len;
            cell.normal = std::move(n);
        }
    }
    return out;
}

OneSidedGradients one_sided_gradients(const ScalarField& u, const FreeBoundaryCells& cells,
                                      const HorizontalOperators& ops) {
    if (cells.cells.empty()) throw std::invalid_argument("one_sided_gradients: no free-boundary cells");
    const Grid& grid = ops.grid();
    const int dim = grid.dim();
    const unsigned corners = 1u << dim;
    const HorizontalField g = ops.gradient(u);
    const double h = max_spacing(grid);
    const double dt = 0.25 * min_spacing(grid);
    const int reach = 3;
    OneSidedGradients out;

    // Walks from the crossing along side * normal; first interior node meeting
    // the test within the cell's reach window.
    auto walk = [&](const CellCrossing& cell, int side, auto&& accept, size_t& found) {
        std::vector<int> lo(static_cast<size_t>(dim));
        std::vector<int> hi(static_cast<size_t>(dim));
        for (int a = 0; a < dim; ++a) {
            const int c = grid.axis_index(cell.corner, a);
            lo[static_cast<size_t>(a)] = c - reach;
            hi[static_cast<size_t>(a)] = c + 1 + reach;
        }
        std::vector<int> idx(static_cast<size_t>(dim));
        for (int step = 1;; ++step) {
            bool inside = true;
            for (int a = 0; a < dim; ++a) {
                const double x = cell.location[static_cast<size_t>(a)] + side * step * dt * cell.normal[static_cast<size_t>(a)];
                const int i = static_cast<int>(std::lround((x - grid.domain().lower[static_cast<size_t>(a)]) / grid.spacing(a)));
                if (i < lo[static_cast<size_t>(a)] || i > hi[static_cast<size_t>(a)] || i < 0 || i >= grid.nodes(a)) {
                    inside = false;
                    break;
                }
                idx[static_cast<size_t>(a)] = i;
            }
            if (!inside) return false;
            const size_t k = grid.node_at(idx);
            if (!grid.is_boundary(k) && accept(u[k])) {
                found = k;
                return true;
            }
        }
    };

    for (size_t c = 0; c < cells.cells.size(); ++c) {
        const CellCrossing& cell = cells.cells[c];
        if (cell.normal.empty()) {
            ++out.dropped;
            continue;
        }
        double lip = 0.0;
        for (unsigned m = 0; m < corners; ++m) lip = std::max(lip, g.magnitude(vertex(grid, cell.corner, m)));
        const double band = 2.0 * h * lip;
        OneSidedSample s;
        s.cell = c;
        const bool plus = walk(cell, +1, [&](double v) { return v > 1.0 + band; }, s.plus_node);
        const bool minus = walk(cell, -1, [&](double v) { return v < 1.0 - band; }, s.minus_node);
        if (!plus || !minus) {
            ++out.dropped;
            continue;
        }
        s.plus = g.magnitude(s.plus_node);
        s.minus = g.magnitude(s.minus_node);
        out.samples.push_back(s);
    }
    if (out.samples.empty()) {
        throw UnresolvedFreeBoundary("free boundary unresolved: all " + std::to_string(out.dropped) +
                                     " cells lack nodes on both sides");
    }
    return out;
}

double quantile(std::vector<double> data, double q) {
    if (data.empty()) throw std::invalid_argument("quantile of empty data");
    std::sort(data.begin(), data.end());
    const double pos = q * static_cast<double>(data.size() - 1);
    const size_t i = static_cast<size_t>(std::floor(pos));
    if (i + 1 >= data.size()) return data.back();
    const double w = pos - static_cast<double>(i);
    return data[i] + w * (data[i + 1] - data[i]);
}

JumpStats jump_statistics(const ScalarField& u, const HorizontalOperators& ops) {
    JumpStats st;
    const FreeBoundaryCells cells = extract_free_boundary(u, ops);
    if (cells.cells.empty()) return st;
    st.empty = false;
    const OneSidedGradients one = one_sided_gradients(u, cells, ops);
    st.dropped = one.dropped;
    for (const OneSidedSample& s : one.samples) {
        st.values.push_back(s.jump());
        st.locations.push_back(cells.cells[s.cell].location);
    }
    st.count = st.values.size();
    st.median = quantile(st.values, 0.5);
    st.iqr = quantile(st.values, 0.75) - quantile(st.values, 0.25);
    CompensatedSum sum;
    for (double v : st.values) sum.add(v);
    st.mean = sum.value() / static_cast<double>(st.count);
    return st;
}

SetMeasures set_measures(const ScalarField& u, const Grid& grid, double band) {
    if (!(band >= 0.0)) throw std::invalid_argument("set_measures: band must be nonnegative");
    if (u.size() != grid.size()) throw std::invalid_argument("set_measures: field does not match the grid");
    size_t above = 0;
    size_t near = 0;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) continue;
        if (u[k] > 1.0) ++above;
        if (std::abs(u[k] - 1.0) <= band) ++near;
    }
    return {static_cast<double>(above) * grid.cell_volume(), static_cast<double>(near) * grid.cell_volume()};
}

SubharmonicityReport subharmonicity_check(const ScalarField& u, const HorizontalOperators& ops, double band) {
    const Grid& grid = ops.grid();
    if (u.size() != grid.size()) throw std::invalid_argument("subharmonicity_check: field does not match the grid");
    const ScalarField Lu = ops.sub_laplacian(u);
    const double hmin = min_spacing(grid);
    const double hmax = max_spacing(grid);
    SubharmonicityReport rep;
    rep.tol = 1e-6 * u.max_abs() / (hmin * hmin);
    rep.harmonic_bound = u.max_abs() * hmax * hmax / (hmin * hmin);
    rep.min_Lu = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.depth(k) < 2) continue;
        if (u[k] < 1.0 - band) {
            ++rep.positivity_nodes;
            rep.min_Lu = std::min(rep.min_Lu, Lu[k]);
        }
        if (u[k] < 1.0 - 3.0 * band) {
            ++rep.harmonic_nodes;
            rep.max_abs_Lu = std::max(rep.max_abs_Lu, std::abs(Lu[k]));
        }
    }
    if (rep.positivity_nodes == 0) rep.min_Lu = 0.0;
    rep.positivity_pass = rep.min_Lu >= -rep.tol;
    rep.harmonic_pass = rep.max_abs_Lu <= rep.harmonic_bound;
    return rep;
}

EnergyBracketReport energy_bracket_check(const std::vector<std::pair<double, ScalarField>>& steps, double lambda,
                                         const NonlinearitySpec& nl, const HorizontalOperators& ops) {
    if (steps.size() < 3) throw std::invalid_argument("energy_bracket_check: needs at least three steps");
    EnergyBracketReport rep;
    const ScalarField& uh = steps.back().second;
    const double finest = steps.back().first;
    rep.energy_limit = energy_limit(uh, lambda, nl, ops).total;
    rep.band = finest;
    rep.band_measure = set_measures(uh, ops.grid(), finest).band;
    rep.delta = 0.05 * (1.0 + std::abs(rep.energy_limit));
    rep.pass = true;
    for (size_t j = steps.size() - 3; j < steps.size(); ++j) {
        BracketEntry e;
        e.eps = steps[j].first;
        e.energy_eps = SmoothedEnergy(ops, nl, lambda, e.eps).energy(steps[j].second).total;
        e.lower = rep.energy_limit - rep.delta;
        e.upper = rep.energy_limit + rep.band_measure + rep.delta;
        e.pass = e.lower <= e.energy_eps && e.energy_eps <= e.upper;
        if (e.energy_eps < e.lower) e.violation = "below E(u_h) - delta";
        if (e.energy_eps > e.upper) e.violation = "above E(u_h) + band measure + delta";
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(std::move(e));
    }
    rep.smoothed_final = SmoothedEnergy(ops, nl, lambda, finest).energy(uh).total;
    rep.smoothed_below_limit = rep.smoothed_final <= rep.energy_limit;
    rep.pass = rep.pass && rep.smoothed_below_limit;
    return rep;
}

MaxPrincipleReport max_principle_check(const ScalarField& u, const SmoothedEnergy& energy, const SolveConfig& cfg) {
    MaxPrincipleReport rep;
    rep.A0 = barrier_constant(energy, u, cfg);
    const ScalarField phi = barrier_phi0(rep.A0, energy.lambda(), energy.operators(), cfg);
    rep.min_u = u.min();
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < u.size(); ++k) rep.max_excess = std::max(rep.max_excess, u[k] - phi[k]);
    rep.pass = rep.min_u >= -1e-8 && rep.max_excess <= 1e-8;
    return rep;
}

double lipschitz_sup(const ScalarField& u, const HorizontalOperators& ops, const Point& center, double radius) {
    const Grid& grid = ops.grid();
    const HorizontalField g = ops.gradient(u);
    double m = 0.0;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) continue;
        if (gauge_distance(ops.spec(), center, grid.point(k)) < radius) m = std::max(m, g.magnitude(k));
    }
    return m;
}

LipschitzProfile lipschitz_profile(const std::vector<ScalarField>& fields, const HorizontalOperators& ops) {
    const BoxDomain& box = ops.grid().domain();
    LipschitzProfile p;
    double width = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < box.lower.size(); ++a) {
        p.center.push_back(0.5 * (box.lower[a] + box.upper[a]));
        width = std::min(width, box.upper[a] - box.lower[a]);
    }
    p.radius = 0.25 * width;
    for (const ScalarField& u : fields) p.sups.push_back(lipschitz_sup(u, ops, p.center, p.radius));
    if (p.sups.empty()) return p;
    const auto [lo, hi] = std::minmax_element(p.sups.begin(), p.sups.end());
    p.ratio = *lo > 0.0 ? *hi / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    p.pass = p.ratio < 2.0;
    return p;
}

}  // namespace fbp
