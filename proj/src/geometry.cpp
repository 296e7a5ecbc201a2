#include "fracmin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracmin/quad.hpp"
#include "fracmin/util.hpp"

namespace fracmin {

namespace {

std::vector<Vec> faces_in_ball(const CellSet& e, const Vec& x0, double r) {
    std::vector<Vec> pts;
    for (const auto& bf : boundary_faces(e))
        if (dist(bf.midpoint, x0) <= r) pts.push_back(bf.midpoint);
    return pts;
}

double slab_width(const std::vector<Vec>& pts, const Vec& x0, const Vec& dir) {
    double w = 0.0;
    for (const auto& p : pts) w = std::max(w, std::abs(dot(sub(p, x0), dir)));
    return w;
}

} // namespace

FlatnessReport flatness(const CellSet& e, const Vec& x0, double r) {
    Box b = e.domain.box();
    for (int k = 0; k < b.n; ++k)
        if (x0[k] - r < b.lo[k] - 1e-12 || x0[k] + r > b.hi[k] + 1e-12)
            throw std::invalid_argument("ball exceeds the computational box");
    std::vector<Vec> pts = faces_in_ball(e, x0, r);
    if (pts.empty()) throw std::invalid_argument("no interface");
    FlatnessReport rep;
    rep.x0 = x0;
    rep.r = r;
    int n = e.domain.n;
    if (n == 2) {
        // Exact sweep: the optimum direction is perpendicular to v_i +- v_j
        // for some face pair (or any single normal for degenerate clouds).
        std::vector<double> cand;
        cand.reserve(pts.size() * pts.size() + 4);
        cand.push_back(0.0);
        cand.push_back(0.5 * M_PI);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            Vec vi = sub(pts[i], x0);
            for (std::size_t j = i; j < pts.size(); ++j) {
                Vec vj = sub(pts[j], x0);
                Vec sum = add(vi, vj), dif = sub(vi, vj);
                if (norm(sum) > 1e-14) cand.push_back(std::atan2(sum[1], sum[0]) + 0.5 * M_PI);
                if (norm(dif) > 1e-14) cand.push_back(std::atan2(dif[1], dif[0]) + 0.5 * M_PI);
            }
        }
        double best = std::numeric_limits<double>::infinity();
        double best_theta = 0.0;
        for (double th : cand) {
            Vec dir = vec2(std::cos(th), std::sin(th));
            double w = slab_width(pts, x0, dir);
            if (w < best - 1e-18) {
                best = w;
                best_theta = th;
            }
        }
        rep.direction = vec2(std::cos(best_theta), std::sin(best_theta));
        rep.width = best / r;
        return rep;
    }
    // n = 3: Fibonacci net then local golden-section refinement in the two
    // spherical angles.
    int net = 1200;
    double best = std::numeric_limits<double>::infinity();
    double bt = 0.0, bp = 0.0;
    double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < net; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / net;
        double theta = std::acos(z);
        double phi = golden * i;
        Vec dir = vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), z);
        double w = slab_width(pts, x0, dir);
        if (w < best) {
            best = w;
            bt = theta;
            bp = phi;
        }
    }
    double span = 2.0 * M_PI / std::sqrt(static_cast<double>(net));
    for (int iter = 0; iter < 40; ++iter) {
        bool improved = false;
        for (int dt = -1; dt <= 1; ++dt)
            for (int dp = -1; dp <= 1; ++dp) {
                if (!dt && !dp) continue;
                double t = bt + dt * span, p = bp + dp * span;
                Vec dir = vec3(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
                double w = slab_width(pts, x0, dir);
                if (w < best) {
                    best = w;
                    bt = t;
                    bp = p;
                    improved = true;
                }
            }
        if (!improved) span *= 0.618;
        if (span < 1e-10) break;
    }
    rep.direction = vec3(std::sin(bt) * std::cos(bp), std::sin(bt) * std::sin(bp), std::cos(bt));
    rep.width = best / r;
    return rep;
}

FlatOrderSequence flat_order_sequence(const CellSet& e, const Vec& x0, int k, const Modulus& rho,
                                      double r0) {
    Box b = e.domain.box();
    int feasible = -1;
    for (int l = 0; l <= k; ++l) {
        double r = r0 * std::pow(2.0, l);
        bool fits = true;
        for (int kk = 0; kk < b.n; ++kk)
            if (x0[kk] - r < b.lo[kk] - 1e-12 || x0[kk] + r > b.hi[kk] + 1e-12) fits = false;
        if (fits)
            feasible = l;
        else
            break;
    }
    if (feasible < k)
        throw std::invalid_argument("window stack exceeds the box; max feasible k = " +
                                    std::to_string(feasible));
    FlatOrderSequence seq;
    seq.k = k;
    seq.r0 = r0;
    seq.all_hold = true;
    for (int l = 0; l <= k; ++l) {
        double r = r0 * std::pow(2.0, l);
        FlatnessReport rep = flatness(e, x0, r);
        double bound = rho.is_zero() ? 0.0 : rho.hat(std::pow(2.0, l - k));
        bool ok = rep.width <= bound;
        seq.directions.push_back(rep.direction);
        seq.widths.push_back(rep.width);
        seq.gamma_bound.push_back(bound);
        seq.holds.push_back(ok);
        if (!ok && seq.first_failure < 0) seq.first_failure = l;
        seq.all_hold = seq.all_hold && ok;
    }
    return seq;
}

double density_ratio(const CellSet& e, const Vec& x0, double r) {
    if (r < 2.0 * e.domain.h) throw std::invalid_argument("under-resolved");
    Box b = e.domain.box();
    for (int k = 0; k < b.n; ++k)
        if (x0[k] - r < b.lo[k] - 1e-12 || x0[k] + r > b.hi[k] + 1e-12)
            throw std::invalid_argument("ball exceeds the computational box");
    const GridDomain& d = e.domain;
    std::size_t inside = 0, total = 0;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        if (dist(d.cell_center(d.unflat(f)), x0) > r) continue;
        ++total;
        if (e.in_set_flat(f)) ++inside;
    }
    if (total == 0) throw std::invalid_argument("under-resolved");
    return static_cast<double>(inside) / static_cast<double>(total);
}

CurvatureReport nonlocal_mean_curvature(const CellSet& e, const Vec& x0, const KernelTable& k,
                                        double delta_cut) {
    const GridDomain& d = e.domain;
    if (delta_cut < 2.0 * d.h) throw std::invalid_argument("cutoff must be at least 2h");
    bool on_boundary = false;
    for (const auto& bf : boundary_faces(e))
        if (dist(bf.midpoint, x0) < 1e-9 * d.h) on_boundary = true;
    if (!on_boundary) throw std::invalid_argument("x0 is not a boundary face midpoint");
    double s = k.s();

    auto pv_at = [&](double cut) {
        std::size_t count = d.cell_count();
        std::vector<double> terms(count, 0.0);
        parallel_for(0, count, [&](std::size_t f) {
            Idx i = d.unflat(f);
            Vec c = d.cell_center(i);
            if (dist(c, x0) <= cut) return;
            double v = cell_point_integral(i, x0, d, s, 0.1 * k.quad_tol());
            terms[f] = e.in_set_flat(f) ? v : -v;
        });
        double interior = pairwise_sum(terms);
        double tail = exterior_point_signed(x0, e.exterior, d, s, 0.1 * k.quad_tol());
        return -(interior + tail);
    };

    CurvatureReport rep;
    rep.cutoff = delta_cut;
    std::vector<double> cuts{delta_cut, 2.0 * delta_cut, 4.0 * delta_cut};
    for (double c : cuts) rep.per_cutoff.push_back(pv_at(c));
    rep.value = rep.per_cutoff[0];
    // leading cutoff error is O(cut^{1-s}); eliminate it from the two
    // finest cutoffs
    double q = std::pow(2.0, -(1.0 - s));
    rep.extrapolated = (rep.per_cutoff[0] - q * rep.per_cutoff[1]) / (1.0 - q);
    return rep;
}

CellSet blow_up(const CellSet& e, const Vec& x0, double r) {
    return rescale(translate(e, scale(x0, -1.0)), 1.0 / r);
}

namespace {

bool ball_fits(const CellSet& e, const Vec& center, double r, bool inside_e) {
    const GridDomain& d = e.domain;
    Box b = d.box();
    // sample only cells overlapping the ball's bounding box
    Idx lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < d.n; ++k) {
        lo[k] = std::max(0, static_cast<int>(std::floor((center[k] - r - d.origin[k]) / d.h)) - 1);
        hi[k] = std::min(d.dims[k] - 1,
                         static_cast<int>(std::floor((center[k] + r - d.origin[k]) / d.h)) + 1);
        if (lo[k] > hi[k]) return false;
    }
    Idx i{0, 0, 0};
    int zlo = (d.n == 3) ? lo[2] : 0, zhi = (d.n == 3) ? hi[2] : 0;
    for (int z = zlo; z <= zhi; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x) {
                i = {x, y, z};
                Vec c = d.cell_center(i);
                if (dist(c, center) > r) continue;
                if (e.in_set(i) != inside_e) return false;
            }
    // if part of the ball leaves the box, consult the exterior
    for (int k = 0; k < d.n; ++k)
        if (center[k] - r < b.lo[k] || center[k] + r > b.hi[k]) {
            // sample a few exterior probes along the offending directions
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Vec probe = center;
                probe[k] += sgn * r * 0.99;
                if (!b.contains(probe) && e.exterior.contains(probe) != inside_e) return false;
            }
        }
    return true;
}

} // namespace

bool has_interior_tangent_ball(const CellSet& e, const BoundaryFace& face, double r) {
    Vec center = face.midpoint;
    center[face.axis] += (face.outward ? -1.0 : 1.0) * r;
    return ball_fits(e, center, r * (1.0 - 1e-9), true);
}

bool has_exterior_tangent_ball(const CellSet& e, const BoundaryFace& face, double r) {
    Vec center = face.midpoint;
    center[face.axis] += (face.outward ? 1.0 : -1.0) * r;
    return ball_fits(e, center, r * (1.0 - 1e-9), false);
}

bool harnack_inclusion_check(const CellSet& e, const Vec& x0, const Vec& e0, double a,
                             double delta0) {
    const GridDomain& d = e.domain;
    double cap = a * (1.0 - delta0 * delta0);
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        Vec c = d.cell_center(d.unflat(f));
        if (dist(c, x0) > delta0) continue;
        double t = dot(sub(c, x0), e0);
        if (e.in_set_flat(f) && !(t < cap)) return false;
        if (t < -cap && !e.in_set_flat(f)) return false;
    }
    return true;
}

double harnack_delta0_sweep(const CellSet& e, const Vec& x0, const Vec& e0, double a,
                            const std::vector<double>& ladder) {
    double best = 0.0;
    for (double d0 : ladder)
        if (harnack_inclusion_check(e, x0, e0, a, d0)) best = std::max(best, d0);
    return best;
}

} // namespace fracmin
