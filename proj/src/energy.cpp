#include "fracmin/energy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fracmin/quad.hpp"

namespace fracmin {

namespace {

void require_match(const CellSet& e, const KernelTable& k) {
    if (!e.domain.same_layout(k.domain()))
        throw std::invalid_argument("kernel table and set domains do not match");
}

std::vector<std::size_t> window_cells(const GridDomain& d, const std::function<bool(const Vec&)>& p) {
    std::vector<std::size_t> out;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f)
        if (p(d.cell_center(d.unflat(f)))) out.push_back(f);
    return out;
}

} // namespace

Window Window::ball(const GridDomain& d, const Vec& center, double r) {
    Window w;
    w.shape = Shape::Ball;
    w.center = center;
    w.r = r;
    Box b = d.box();
    for (int k = 0; k < d.n; ++k)
        if (center[k] - r < b.lo[k] - 1e-12 || center[k] + r > b.hi[k] + 1e-12)
            throw std::invalid_argument("window exceeds the computational box");
    w.cells = window_cells(d, [&](const Vec& c) { return dist(c, center) <= r; });
    w.in_window.assign(d.cell_count(), 0);
    for (auto f : w.cells) w.in_window[f] = 1;
    return w;
}

Window Window::box(const GridDomain& d, const Vec& lo, const Vec& hi) {
    Window w;
    w.shape = Shape::Box;
    w.lo = lo;
    w.hi = hi;
    w.cells = window_cells(d, [&](const Vec& c) {
        for (int k = 0; k < d.n; ++k)
            if (c[k] < lo[k] || c[k] > hi[k]) return false;
        return true;
    });
    w.in_window.assign(d.cell_count(), 0);
    for (auto f : w.cells) w.in_window[f] = 1;
    return w;
}

Window Window::whole(const GridDomain& d) {
    Window w;
    w.shape = Shape::Whole;
    w.cells.resize(d.cell_count());
    for (std::size_t f = 0; f < w.cells.size(); ++f) w.cells[f] = f;
    w.in_window.assign(d.cell_count(), 1);
    return w;
}

std::string EnergyReport::to_json() const {
    nlohmann::json j;
    j["total"] = total;
    j["term_in_out"] = term_in_out;
    j["term_out_in"] = term_out_in;
    j["tail_share"] = tail_share;
    return j.dump();
}

EnergyReport localized_energy(const CellSet& e, const Window& w, const KernelTable& k) {
    require_match(e, k);
    k.ensure_exterior(e.exterior);
    std::size_t count = e.domain.cell_count();
    SetPart e_in_w, e_out_w, ec_in_w, ec_cells;
    for (std::size_t f = 0; f < count; ++f) {
        bool in_e = e.in_set_flat(f);
        bool in_w = w.contains(f);
        if (in_e && in_w) e_in_w.cells.push_back(f);
        if (in_e && !in_w) e_out_w.cells.push_back(f);
        if (!in_e && in_w) ec_in_w.cells.push_back(f);
        if (!in_e) ec_cells.cells.push_back(f);
    }
    ec_cells.ext = -1;
    e_out_w.ext = +1;
    EnergyReport rep;
    rep.term_in_out = k.interaction(e_in_w, ec_cells, e.exterior);
    rep.term_out_in = k.interaction(e_out_w, ec_in_w, e.exterior);
    rep.total = rep.term_in_out + rep.term_out_in;
    ExteriorDescriptor comp = e.exterior.complemented();
    std::vector<double> tails;
    tails.reserve(e_in_w.cells.size() + ec_in_w.cells.size());
    for (auto f : e_in_w.cells) tails.push_back(k.tail(f, comp));
    for (auto f : ec_in_w.cells) tails.push_back(k.tail(f, e.exterior));
    rep.tail_share = pairwise_sum(tails);
    return rep;
}

EnergyDelta energy_delta(const CellSet& e, const CellSet& f, const Window& w, const KernelTable& k) {
    require_match(e, k);
    require_match(f, k);
    if (e.exterior.hash() != f.exterior.hash())
        throw std::invalid_argument("sets must share exterior data");
    std::size_t count = e.domain.cell_count();
    SetPart a_plus, a_minus;
    for (std::size_t f2 = 0; f2 < count; ++f2) {
        bool in_e = e.in_set_flat(f2), in_f = f.in_set_flat(f2);
        if (in_e == in_f) continue;
        if (!w.contains(f2))
            throw std::invalid_argument("F delta E must lie inside the window");
        (in_f ? a_plus : a_minus).cells.push_back(f2);
    }
    k.ensure_exterior(e.exterior);
    EnergyDelta out;
    out.delta = localized_energy(f, w, k).total - localized_energy(e, w, k).total;
    out.cross_term = k.interaction(a_minus, a_plus, e.exterior);

    SetPart e_minus_a, ec, ec_minus_a, e_full;
    for (std::size_t f2 = 0; f2 < count; ++f2) {
        bool in_e = e.in_set_flat(f2);
        bool in_am = std::binary_search(a_minus.cells.begin(), a_minus.cells.end(), f2);
        bool in_ap = std::binary_search(a_plus.cells.begin(), a_plus.cells.end(), f2);
        if (in_e) e_full.cells.push_back(f2);
        if (in_e && !in_am) e_minus_a.cells.push_back(f2);
        if (!in_e) ec.cells.push_back(f2);
        if (!in_e && !in_ap) ec_minus_a.cells.push_back(f2);
    }
    e_full.ext = e_minus_a.ext = +1;
    ec.ext = ec_minus_a.ext = -1;
    out.sub_part = k.interaction(a_minus, e_minus_a, e.exterior) -
                   k.interaction(a_minus, ec, e.exterior);
    out.super_part = k.interaction(a_plus, e_full, e.exterior) -
                     k.interaction(a_plus, ec_minus_a, e.exterior);
    return out;
}

namespace {

double shape_term(const Modulus& rho, double r, int n, double s) {
    return rho.eval(r) * std::pow(r, n - s);
}

void validate_perturbation(const CellSet& e, const std::vector<std::size_t>& a, const Vec& x0,
                           double r, const Modulus& rho, bool inside_e) {
    Box b = e.domain.box();
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    double dwall = std::numeric_limits<double>::infinity();
    for (int k = 0; k < b.n; ++k) {
        dwall = std::min(dwall, x0[k] - b.lo[k]);
        dwall = std::min(dwall, b.hi[k] - x0[k]);
    }
    if (!(r < std::min(rho.delta(), dwall) + 1e-12))
        throw std::invalid_argument("radius must stay below min(delta, dist(x0, wall))");
    for (auto f : a) {
        if (e.in_set_flat(f) != inside_e)
            throw std::invalid_argument(inside_e ? "A must lie in E" : "A must lie in E^c");
        if (dist(e.domain.cell_center(e.domain.unflat(f)), x0) > r)
            throw std::invalid_argument("A must lie inside B_r(x0)");
    }
}

} // namespace

double supersolution_gap(const CellSet& e, const std::vector<std::size_t>& a, const Vec& x0,
                         double r, const Modulus& rho, const KernelTable& k) {
    require_match(e, k);
    validate_perturbation(e, a, x0, r, rho, false);
    k.ensure_exterior(e.exterior);
    double rr = shape_term(rho, r, e.domain.n, k.s());
    if (a.empty()) return -rr;
    SetPart pa;
    pa.cells = a;
    std::sort(pa.cells.begin(), pa.cells.end());
    std::size_t count = e.domain.cell_count();
    SetPart e_full, ec_minus_a;
    for (std::size_t f = 0; f < count; ++f) {
        if (e.in_set_flat(f)) {
            e_full.cells.push_back(f);
        } else if (!std::binary_search(pa.cells.begin(), pa.cells.end(), f)) {
            ec_minus_a.cells.push_back(f);
        }
    }
    e_full.ext = +1;
    ec_minus_a.ext = -1;
    return k.interaction(pa, e_full, e.exterior) - k.interaction(pa, ec_minus_a, e.exterior) - rr;
}

double subsolution_gap(const CellSet& e, const std::vector<std::size_t>& a, const Vec& x0, double r,
                       const Modulus& rho, const KernelTable& k) {
    require_match(e, k);
    validate_perturbation(e, a, x0, r, rho, true);
    k.ensure_exterior(e.exterior);
    double rr = shape_term(rho, r, e.domain.n, k.s());
    if (a.empty()) return -rr;
    SetPart pa;
    pa.cells = a;
    std::sort(pa.cells.begin(), pa.cells.end());
    std::size_t count = e.domain.cell_count();
    SetPart e_minus_a, ec;
    for (std::size_t f = 0; f < count; ++f) {
        if (e.in_set_flat(f)) {
            if (!std::binary_search(pa.cells.begin(), pa.cells.end(), f))
                e_minus_a.cells.push_back(f);
        } else {
            ec.cells.push_back(f);
        }
    }
    e_minus_a.ext = +1;
    ec.ext = -1;
    return -(k.interaction(pa, e_minus_a, e.exterior) - k.interaction(pa, ec, e.exterior)) - rr;
}

ResidualWitness almost_minimality_residual(const CellSet& e, const Vec& x0, double r,
                                           const Modulus& rho, const KernelTable& k, int budget,
                                           std::uint64_t seed) {
    require_match(e, k);
    const GridDomain& d = e.domain;
    std::vector<std::size_t> ball_in, ball_out;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        if (dist(d.cell_center(d.unflat(f)), x0) > r) continue;
        (e.in_set_flat(f) ? ball_in : ball_out).push_back(f);
    }
    ResidualWitness best;
    int used = 0;
    auto consider = [&](const std::vector<std::size_t>& a, bool super, const std::string& kind) {
        if (a.empty() || used >= budget) return;
        ++used;
        double g = super ? supersolution_gap(e, a, x0, r, rho, k)
                         : subsolution_gap(e, a, x0, r, rho, k);
        if (g > best.gap) {
            best.gap = g;
            best.super_side = super;
            best.kind = kind;
            best.cells = a;
        }
    };
    for (auto f : ball_out) consider({f}, true, "singleton");
    for (auto f : ball_in) consider({f}, false, "singleton");
    // face-connected pairs
    auto pairs_of = [&](const std::vector<std::size_t>& src, bool super) {
        for (auto f : src) {
            Idx i = d.unflat(f);
            for (int kk = 0; kk < d.n; ++kk) {
                Idx j = i;
                j[kk] += 1;
                if (!d.in_bounds(j)) continue;
                std::size_t fj = d.flat(j);
                bool member = std::binary_search(src.begin(), src.end(), fj);
                if (member) consider({std::min(f, fj), std::max(f, fj)}, super, "pair");
            }
        }
    };
    pairs_of(ball_out, true);
    pairs_of(ball_in, false);
    // random connected 3-4 clusters
    std::mt19937_64 rng(seed);
    auto grow = [&](const std::vector<std::size_t>& src, bool super) {
        if (src.empty()) return;
        std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);
        for (int trial = 0; trial < budget / 8 + 1; ++trial) {
            std::vector<std::size_t> cl{src[pick(rng)]};
            int target = 3 + static_cast<int>(rng() % 2);
            for (int grow_step = 0; grow_step < 8 && static_cast<int>(cl.size()) < target;
                 ++grow_step) {
                Idx i = d.unflat(cl[rng() % cl.size()]);
                Idx j = i;
                j[rng() % d.n] += (rng() % 2) ? 1 : -1;
                if (!d.in_bounds(j)) continue;
                std::size_t fj = d.flat(j);
                if (!std::binary_search(src.begin(), src.end(), fj)) continue;
                if (std::find(cl.begin(), cl.end(), fj) != cl.end()) continue;
                cl.push_back(fj);
            }
            std::sort(cl.begin(), cl.end());
            consider(cl, super, "cluster");
        }
    };
    grow(ball_out, true);
    grow(ball_in, false);
    // axis-aligned slab caps
    for (int kk = 0; kk < d.n; ++kk) {
        for (int sign = -1; sign <= 1; sign += 2) {
            for (int level = 1; level <= 3; ++level) {
                double t = r * level / 4.0;
                auto cap = [&](const std::vector<std::size_t>& src) {
                    std::vector<std::size_t> a;
                    for (auto f : src) {
                        Vec c = d.cell_center(d.unflat(f));
                        if (sign * (c[kk] - x0[kk]) >= t) a.push_back(f);
                    }
                    return a;
                };
                consider(cap(ball_out), true, "slab");
                consider(cap(ball_in), false, "slab");
            }
        }
    }
    return best;
}

} // namespace fracmin
