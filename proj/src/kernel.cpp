#include "fracmin/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "fracmin/quad.hpp"
#include "fracmin/util.hpp"

namespace fracmin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinFactor {
    double a, b; // a + b*z
    double at(double z) const { return a + b * z; }
};

// Tensor Gauss for prod_k(a_k + b_k z_k) * |z|^{-(n+s)} on an axis box.
double gauss_box(const double* lo, const double* hi, const LinFactor* f, int n, double s, int p) {
    const GaussRule& rule = gauss_rule(p);
    double sum = 0.0;
    double expo = -0.5 * (n + s);
    if (n == 2) {
        for (int i = 0; i < p; ++i) {
            double z0 = 0.5 * (lo[0] + hi[0]) + 0.5 * (hi[0] - lo[0]) * rule.nodes[i];
            double w0 = rule.weights[i] * f[0].at(z0);
            for (int j = 0; j < p; ++j) {
                double z1 = 0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * rule.nodes[j];
                sum += w0 * rule.weights[j] * f[1].at(z1) * std::pow(z0 * z0 + z1 * z1, expo);
            }
        }
        return sum * 0.25 * (hi[0] - lo[0]) * (hi[1] - lo[1]);
    }
    for (int i = 0; i < p; ++i) {
        double z0 = 0.5 * (lo[0] + hi[0]) + 0.5 * (hi[0] - lo[0]) * rule.nodes[i];
        double w0 = rule.weights[i] * f[0].at(z0);
        for (int j = 0; j < p; ++j) {
            double z1 = 0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * rule.nodes[j];
            double w1 = w0 * rule.weights[j] * f[1].at(z1);
            for (int k = 0; k < p; ++k) {
                double z2 = 0.5 * (lo[2] + hi[2]) + 0.5 * (hi[2] - lo[2]) * rule.nodes[k];
                sum += w1 * rule.weights[k] * f[2].at(z2) *
                       std::pow(z0 * z0 + z1 * z1 + z2 * z2, expo);
            }
        }
    }
    return sum * 0.125 * (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
}

double smooth_box(const double* lo, const double* hi, const LinFactor* f, int n, double s,
                  double rel_tol, double abs_tol, int depth) {
    double v1 = gauss_box(lo, hi, f, n, s, 10);
    double v2 = gauss_box(lo, hi, f, n, s, 16);
    if (depth <= 0 || std::abs(v2 - v1) <= abs_tol + rel_tol * std::abs(v2)) return v2;
    double sum = 0.0;
    int children = 1 << n;
    for (int c = 0; c < children; ++c) {
        double clo[3], chi[3];
        for (int k = 0; k < n; ++k) {
            double mid = 0.5 * (lo[k] + hi[k]);
            clo[k] = (c & (1 << k)) ? mid : lo[k];
            chi[k] = (c & (1 << k)) ? hi[k] : mid;
        }
        sum += smooth_box(clo, chi, f, n, s, rel_tol, abs_tol / children, depth - 1);
    }
    return sum;
}

// Box [0,1]^n, kernel singular at the origin corner, linear factors given
// in corner coordinates. Duffy pyramids u_j = t, u_i = t v_i make |u| a
// product t*M(v), so each radial moment integrates exactly: the remaining
// v-integral is smooth and handled by Gauss.
double duffy_box_p(const LinFactor* f, int n, double s, int p) {
    const GaussRule& rule = gauss_rule(p);
    double total = 0.0;
    double expo = -0.5 * (n + s);
    if (n == 2) {
        for (int pyr = 0; pyr < 2; ++pyr) {
            int o = 1 - pyr;
            double sum = 0.0;
            for (int i = 0; i < p; ++i) {
                double v = 0.5 + 0.5 * rule.nodes[i];
                // (a_p + b_p t)(a_o + (b_o v) t): coefficients in t
                double c1 = f[pyr].a * (f[o].b * v) + f[pyr].b * f[o].a;
                double c2 = f[pyr].b * (f[o].b * v);
                double radial = c1 / (1.0 - s) + c2 / (2.0 - s);
                sum += 0.5 * rule.weights[i] * std::pow(1.0 + v * v, expo) * radial;
            }
            total += sum;
        }
        return total;
    }
    for (int pyr = 0; pyr < 3; ++pyr) {
        int o1 = (pyr + 1) % 3, o2 = (pyr + 2) % 3;
        double sum = 0.0;
        for (int i = 0; i < p; ++i) {
            double v1 = 0.5 + 0.5 * rule.nodes[i];
            for (int j = 0; j < p; ++j) {
                double v2 = 0.5 + 0.5 * rule.nodes[j];
                // (a_p + b_p t)(a_1 + (b_1 v1) t)(a_2 + (b_2 v2) t)
                double b1 = f[o1].b * v1, b2 = f[o2].b * v2;
                double c1 = f[pyr].a * f[o1].a * b2 + f[pyr].a * b1 * f[o2].a +
                            f[pyr].b * f[o1].a * f[o2].a;
                double c2 = f[pyr].a * b1 * b2 + f[pyr].b * f[o1].a * b2 + f[pyr].b * b1 * f[o2].a;
                double c3 = f[pyr].b * b1 * b2;
                double radial = c1 / (1.0 - s) + c2 / (2.0 - s) + c3 / (3.0 - s);
                sum += 0.25 * rule.weights[i] * rule.weights[j] *
                       std::pow(1.0 + v1 * v1 + v2 * v2, expo) * radial;
            }
        }
        total += sum;
    }
    return total;
}

double duffy_box(const LinFactor* f, int n, double s, double rel_tol) {
    int p = (n == 2) ? 24 : 16;
    double v1 = duffy_box_p(f, n, s, p);
    double v2 = duffy_box_p(f, n, s, p + 8);
    if (std::abs(v2 - v1) <= rel_tol * std::abs(v2)) return v2;
    return duffy_box_p(f, n, s, p + 24);
}

} // namespace

double unit_offset_weight(const Idx& delta, int n, double s, double rel_tol) {
    int d[3] = {std::abs(delta[0]), std::abs(delta[1]), n == 3 ? std::abs(delta[2]) : 0};
    if (d[0] == 0 && d[1] == 0 && d[2] == 0)
        throw std::invalid_argument("self-pair undefined");
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("order s must be in (0,1)");
    double total = 0.0;
    int orthants = 1 << n;
    for (int orth = 0; orth < orthants; ++orth) {
        double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        LinFactor fz[3] = {{1, 0}, {1, 0}, {1, 0}};
        bool corner0 = true; // 0 an endpoint of every axis interval
        for (int k = 0; k < n; ++k) {
            bool plus = orth & (1 << k);
            if (plus) {
                lo[k] = d[k];
                hi[k] = d[k] + 1;
                fz[k] = {1.0 + d[k], -1.0}; // 1 - (z - d)
            } else {
                lo[k] = d[k] - 1;
                hi[k] = d[k];
                fz[k] = {1.0 - d[k], 1.0}; // 1 + (z - d)
            }
            if (!(lo[k] == 0.0 || hi[k] == 0.0)) corner0 = false;
        }
        if (corner0) {
            // Map each axis onto [0,1] with the singular corner at 0.
            LinFactor fu[3];
            for (int k = 0; k < n; ++k) {
                if (lo[k] == 0.0) {
                    fu[k] = fz[k]; // u = z
                } else {
                    fu[k] = {fz[k].at(0.0), fz[k].at(-1.0) - fz[k].at(0.0)}; // u = -z
                }
            }
            total += duffy_box(fu, n, s, rel_tol);
        } else {
            total += smooth_box(lo, hi, fz, n, s, rel_tol, 0.0, 30);
        }
    }
    return (1.0 - s) * total;
}

double cell_pair_weight(const Idx& i, const Idx& j, const GridDomain& domain, double s,
                        double quad_tol) {
    Idx delta{0, 0, 0};
    for (int k = 0; k < domain.n; ++k) delta[k] = i[k] - j[k];
    return std::pow(domain.h, domain.n - s) * unit_offset_weight(delta, domain.n, s, quad_tol);
}

// ---------------------------------------------------------------------------
// Exterior (tail) quadrature: exact radial integration along rays, adaptive
// angular integration, graded cell integration toward touching box faces.
// ---------------------------------------------------------------------------

namespace {

// Per-ray radial factor of the set part: sum over segments of r^{-s}
// differences, already divided by s. Segments start at the box exit radius.
double ray_value_set(const Vec& p, const Vec& dir, const ExteriorDescriptor& d, const Box& box,
                     double s) {
    double t0 = box.exit_radius(p, dir);
    if (!(t0 > 0.0)) return 0.0;
    double v = 0.0;
    for (const auto& seg : ray_segments(d, p, dir, t0, box.n)) {
        v += std::pow(seg.r0, -s);
        if (std::isfinite(seg.r1)) v -= std::pow(seg.r1, -s);
    }
    return v / s;
}

// Signed density chi_D - chi_{D^c} outside the box: 2*set - full.
double ray_value_signed(const Vec& p, const Vec& dir, const ExteriorDescriptor& d, const Box& box,
                        double s) {
    double t0 = box.exit_radius(p, dir);
    if (!(t0 > 0.0)) return 0.0;
    double full = std::pow(t0, -s) / s;
    return 2.0 * ray_value_set(p, dir, d, box, s) - full;
}

std::vector<double> critical_angles_2d(const Vec& p, const ExteriorDescriptor& d, const Box& box) {
    std::vector<double> th;
    auto push = [&](double a) {
        a = std::fmod(a, 2.0 * M_PI);
        if (a < 0.0) a += 2.0 * M_PI;
        th.push_back(a);
    };
    push(0.0);
    // wall-grazing directions: the exit radius has |sin|^s-type kinks there
    push(0.5 * M_PI);
    push(M_PI);
    push(1.5 * M_PI);
    // box corners
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy)
            push(std::atan2((cy ? box.hi[1] : box.lo[1]) - p[1], (cx ? box.hi[0] : box.lo[0]) - p[0]));
    auto push_toward = [&](double x, double y) { push(std::atan2(y - p[1], x - p[0])); };
    // rays through a point where the descriptor boundary crosses a wall line
    // see a kink; enumerate those crossings per kind
    auto wall_crossings_line = [&](const Vec& q, const Vec& dir) {
        // line q + t dir against the four wall lines
        for (int ax = 0; ax < 2; ++ax)
            for (double w : {box.lo[ax], box.hi[ax]}) {
                if (std::abs(dir[ax]) < 1e-300) continue;
                double t = (w - q[ax]) / dir[ax];
                Vec pt = add(q, scale(dir, t));
                push_toward(pt[0], pt[1]);
            }
    };
    switch (d.kind) {
    case ExteriorDescriptor::Kind::HalfSpace: {
        double a = std::atan2(d.e[1], d.e[0]);
        push(a + 0.5 * M_PI);
        push(a - 0.5 * M_PI);
        wall_crossings_line(scale(d.e, d.c), vec2(-d.e[1], d.e[0]));
        break;
    }
    case ExteriorDescriptor::Kind::Ball: {
        Vec w = sub(d.center, p);
        double dist = norm(w);
        double a = std::atan2(w[1], w[0]);
        push(a);
        push(a + M_PI);
        if (dist > d.radius) {
            double t = std::asin(std::min(1.0, d.radius / dist));
            push(a + t);
            push(a - t);
        }
        for (int ax = 0; ax < 2; ++ax)
            for (double wv : {box.lo[ax], box.hi[ax]}) {
                double off = wv - d.center[ax];
                double rem = d.radius * d.radius - off * off;
                if (rem <= 0.0) continue;
                double sq = std::sqrt(rem);
                if (ax == 0) {
                    push_toward(wv, d.center[1] + sq);
                    push_toward(wv, d.center[1] - sq);
                } else {
                    push_toward(d.center[0] + sq, wv);
                    push_toward(d.center[0] - sq, wv);
                }
            }
        break;
    }
    case ExteriorDescriptor::Kind::Cone: {
        Vec w = sub(d.center, p);
        push(std::atan2(w[1], w[0]));
        double ax = std::atan2(d.e[1], d.e[0]);
        for (double edge : {ax + d.aperture, ax - d.aperture}) {
            push(edge);
            push(edge + M_PI);
            wall_crossings_line(d.center, vec2(std::cos(edge), std::sin(edge)));
        }
        break;
    }
    default: break;
    }
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             th.end());
    return th;
}

double angular_integral_2d(const Vec& p, const ExteriorDescriptor& d, const Box& box, double s,
                           double rel_tol, bool is_signed) {
    auto f = [&](double theta) {
        Vec dir = vec2(std::cos(theta), std::sin(theta));
        return is_signed ? ray_value_signed(p, dir, d, box, s) : ray_value_set(p, dir, d, box, s);
    };
    std::vector<double> th = critical_angles_2d(p, d, box);
    // magnitude scale for the absolute floor
    double scale = 0.0;
    for (int k = 0; k < 8; ++k) {
        Vec dir = vec2(std::cos(k * M_PI / 4.0 + 0.21), std::sin(k * M_PI / 4.0 + 0.21));
        scale = std::max(scale, std::abs(ray_value_set(p, dir, d.kind == ExteriorDescriptor::Kind::Empty
                                                               ? ExteriorDescriptor::full()
                                                               : d,
                                                       box, s)));
        scale = std::max(scale, std::pow(box.exit_radius(p, dir), -s) / s);
    }
    double abs_tol = rel_tol * scale * 2.0 * M_PI;
    double total = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) {
        double a = th[k];
        double b = (k + 1 < th.size()) ? th[k + 1] : th[0] + 2.0 * M_PI;
        if (b - a < 1e-14) continue;
        total += tanh_sinh_integrate(f, a, b, rel_tol, abs_tol * (b - a) / (2.0 * M_PI), 5);
    }
    return total;
}

// Spherical version for n = 3: omega(theta, phi), integrand has the sin
// factor of the area element; plain recursive adaptivity on rectangles.
double sphere_patch(const std::function<double(double, double)>& f, double ta, double tb, double pa,
                    double pb, double rel_tol, double abs_tol, int depth) {
    const GaussRule& rule = gauss_rule(7);
    auto estimate = [&](double t0, double t1, double p0, double p1) {
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            double th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * rule.nodes[i];
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                double ph = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * rule.nodes[j];
                sum += rule.weights[i] * rule.weights[j] * f(th, ph) * std::sin(th);
            }
        }
        return sum * 0.25 * (t1 - t0) * (p1 - p0);
    };
    double whole = estimate(ta, tb, pa, pb);
    double tm = 0.5 * (ta + tb), pm = 0.5 * (pa + pb);
    double parts = estimate(ta, tm, pa, pm) + estimate(ta, tm, pm, pb) + estimate(tm, tb, pa, pm) +
                   estimate(tm, tb, pm, pb);
    if (depth <= 0 || std::abs(parts - whole) <= abs_tol + rel_tol * std::abs(parts)) return parts;
    return sphere_patch(f, ta, tm, pa, pm, rel_tol, abs_tol / 4.0, depth - 1) +
           sphere_patch(f, ta, tm, pm, pb, rel_tol, abs_tol / 4.0, depth - 1) +
           sphere_patch(f, tm, tb, pa, pm, rel_tol, abs_tol / 4.0, depth - 1) +
           sphere_patch(f, tm, tb, pm, pb, rel_tol, abs_tol / 4.0, depth - 1);
}

double angular_integral_3d(const Vec& p, const ExteriorDescriptor& d, const Box& box, double s,
                           double rel_tol, bool is_signed) {
    auto f = [&](double th, double ph) {
        Vec dir = vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        return is_signed ? ray_value_signed(p, dir, d, box, s) : ray_value_set(p, dir, d, box, s);
    };
    double scale = std::pow(box.exit_radius(p, vec3(1, 0, 0)), -s) / s + 1e-30;
    double abs_tol = rel_tol * scale * 4.0 * M_PI;
    double total = 0.0;
    // split at the equator and in four phi quadrants to catch box-face kinks
    for (int q = 0; q < 4; ++q) {
        total += sphere_patch(f, 0.0, 0.5 * M_PI, q * 0.5 * M_PI, (q + 1) * 0.5 * M_PI, rel_tol,
                              abs_tol / 8.0, 14);
        total += sphere_patch(f, 0.5 * M_PI, M_PI, q * 0.5 * M_PI, (q + 1) * 0.5 * M_PI, rel_tol,
                              abs_tol / 8.0, 14);
    }
    return total;
}

double exterior_point_unnormalized(const Vec& p, const ExteriorDescriptor& d, const Box& box,
                                   double s, double rel_tol, bool is_signed) {
    if (box.n == 2) return angular_integral_2d(p, d, box, s, rel_tol, is_signed);
    return angular_integral_3d(p, d, box, s, rel_tol, is_signed);
}

} // namespace

double exterior_point_integral(const Vec& p, const ExteriorDescriptor& d, const GridDomain& domain,
                               double s, double rel_tol) {
    Box box = domain.box();
    if (!box.contains(p)) throw std::invalid_argument("point must lie inside the box");
    return (1.0 - s) * exterior_point_unnormalized(p, d, box, s, rel_tol, false);
}

double exterior_point_signed(const Vec& p, const ExteriorDescriptor& d, const GridDomain& domain,
                             double s, double rel_tol) {
    Box box = domain.box();
    if (!box.contains(p)) throw std::invalid_argument("point must lie inside the box");
    return (1.0 - s) * exterior_point_unnormalized(p, d, box, s, rel_tol, true);
}

namespace {

// Points where the descriptor boundary crosses a wall line (2d). A cell near
// such a point sees Holder kinks in its tangential directions.
std::vector<Vec> descriptor_wall_crossings(const ExteriorDescriptor& d, const Box& box) {
    std::vector<Vec> pts;
    auto line_walls = [&](const Vec& q, const Vec& dir) {
        for (int ax = 0; ax < 2; ++ax)
            for (double w : {box.lo[ax], box.hi[ax]}) {
                if (std::abs(dir[ax]) < 1e-300) continue;
                double t = (w - q[ax]) / dir[ax];
                pts.push_back(add(q, scale(dir, t)));
            }
    };
    switch (d.kind) {
    case ExteriorDescriptor::Kind::HalfSpace:
        line_walls(scale(d.e, d.c), vec2(-d.e[1], d.e[0]));
        break;
    case ExteriorDescriptor::Kind::Ball:
        for (int ax = 0; ax < 2; ++ax)
            for (double w : {box.lo[ax], box.hi[ax]}) {
                double off = w - d.center[ax];
                double rem = d.radius * d.radius - off * off;
                if (rem <= 0.0) continue;
                double sq = std::sqrt(rem);
                if (ax == 0) {
                    pts.push_back(vec2(w, d.center[1] + sq));
                    pts.push_back(vec2(w, d.center[1] - sq));
                } else {
                    pts.push_back(vec2(d.center[0] + sq, w));
                    pts.push_back(vec2(d.center[0] - sq, w));
                }
            }
        break;
    case ExteriorDescriptor::Kind::Cone: {
        double ax0 = std::atan2(d.e[1], d.e[0]);
        for (double edge : {ax0 + d.aperture, ax0 - d.aperture})
            line_walls(d.center, vec2(std::cos(edge), std::sin(edge)));
        break;
    }
    default: break;
    }
    return pts;
}

} // namespace

double tail_weight(const Idx& i, const ExteriorDescriptor& exterior, const GridDomain& domain,
                   double s, double quad_tol) {
    if (exterior.kind == ExteriorDescriptor::Kind::Empty && !exterior.complement) return 0.0;
    Box box = domain.box();
    Vec low = domain.cell_low(i);
    int n = domain.n;
    double h = domain.h;
    // The inner field behaves like dist^{-s} against faces the cell shares
    // with the box boundary; tanh-sinh absorbs that, Gauss handles the rest.
    bool touch_lo[3] = {false, false, false}, touch_hi[3] = {false, false, false};
    int graded_count = 0;
    for (int k = 0; k < n; ++k) {
        touch_lo[k] = i[k] == 0;
        touch_hi[k] = i[k] == domain.dims[k] - 1;
        if (touch_lo[k] || touch_hi[k]) ++graded_count;
    }
    double inner_tol = std::max(0.2 * quad_tol, 1e-7);
    int ts_levels = graded_count > 1 ? 4 : 5;
    // a descriptor boundary crossing a wall near this cell puts Holder kinks
    // into the tangential directions; switch the offending axis to an
    // adaptive rule
    bool kink_axis[3] = {false, false, false};
    if (n == 2 && graded_count > 0) {
        for (const Vec& pt : descriptor_wall_crossings(exterior, box)) {
            double gap[3] = {0, 0, 0};
            for (int k = 0; k < n; ++k)
                gap[k] = std::max({low[k] - pt[k], 0.0, pt[k] - (low[k] + h)});
            for (int k = 0; k < n; ++k) {
                int other = 1 - k;
                if (gap[k] <= 0.5 * h && gap[other] <= 2.0 * h) kink_axis[k] = true;
            }
        }
    }

    std::function<double(int, Vec&)> recurse = [&](int k, Vec& x) -> double {
        if (k == n)
            return exterior_point_unnormalized(x, exterior, box, s, inner_tol, false);
        auto axis_f = [&](double t) {
            Vec y = x;
            y[k] = t;
            return recurse(k + 1, y);
        };
        if (touch_lo[k] || touch_hi[k])
            return tanh_sinh_integrate(axis_f, low[k], low[k] + h, quad_tol, 0.0, ts_levels,
                                       touch_lo[k] ? s : 0.0, touch_hi[k] ? s : 0.0);
        if (kink_axis[k])
            return adaptive_integrate(axis_f, low[k], low[k] + h, quad_tol, 0.0, 18);
        return gauss_integrate(axis_f, low[k], low[k] + h, 8);
    };
    Vec x{0, 0, 0};
    return (1.0 - s) * recurse(0, x);
}

double cell_point_integral(const Idx& i, const Vec& p, const GridDomain& domain, double s,
                           double rel_tol) {
    int n = domain.n;
    double h = domain.h;
    Vec center = domain.cell_center(i);
    // canonical |offset| components, sorted, so mirror images agree bitwise
    double off[3] = {0, 0, 0};
    for (int k = 0; k < n; ++k) off[k] = std::abs(center[k] - p[k]);
    std::sort(off, off + n, std::greater<double>());
    if (off[0] <= 0.5 * h) {
        bool inside = true;
        for (int k = 0; k < n; ++k)
            if (off[k] > 0.5 * h) inside = false;
        if (inside) throw std::invalid_argument("point inside cell");
    }
    double lo[3], hi[3];
    LinFactor f[3] = {{1, 0}, {1, 0}, {1, 0}};
    for (int k = 0; k < n; ++k) {
        lo[k] = off[k] - 0.5 * h;
        hi[k] = off[k] + 0.5 * h;
    }
    return (1.0 - s) * smooth_box(lo, hi, f, n, s, rel_tol, 0.0, 24);
}

// ---------------------------------------------------------------------------
// KernelTable
// ---------------------------------------------------------------------------

KernelTable::KernelTable(GridDomain domain, double s, double quad_tol)
    : domain_(domain), s_(s), quad_tol_(quad_tol) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("order s must be in (0,1)");
    h_pow_ = std::pow(domain_.h, domain_.n - s);
    for (int k = 0; k < domain_.n; ++k) maxd_[k] = domain_.dims[k];

    std::size_t tab = 1;
    for (int k = 0; k < domain_.n; ++k) tab *= static_cast<std::size_t>(maxd_[k]);
    unit_.assign(tab, 0.0);

    // distinct sorted |delta| keys
    std::map<Idx, std::size_t> canon;
    std::vector<Idx> keys;
    int md = *std::max_element(maxd_.begin(), maxd_.begin() + domain_.n);
    Idx key{0, 0, 0};
    if (domain_.n == 2) {
        for (int a = 0; a < md; ++a)
            for (int b = a; b < md; ++b) {
                key = {a, b, 0};
                if (!canon.count(key)) {
                    canon[key] = keys.size();
                    keys.push_back(key);
                }
            }
    } else {
        for (int a = 0; a < md; ++a)
            for (int b = a; b < md; ++b)
                for (int c = b; c < md; ++c) {
                    key = {a, b, c};
                    if (!canon.count(key)) {
                        canon[key] = keys.size();
                        keys.push_back(key);
                    }
                }
    }
    std::vector<double> vals(keys.size(), 0.0);
    parallel_for(0, keys.size(), [&](std::size_t k) {
        if (keys[k][0] == 0 && keys[k][1] == 0 && keys[k][2] == 0) return;
        vals[k] = unit_offset_weight(keys[k], domain_.n, s_, quad_tol_);
    });
    // scatter into the dense |delta| lookup
    for (int a = 0; a < maxd_[0]; ++a)
        for (int b = 0; b < maxd_[1]; ++b) {
            int cmax = domain_.n == 3 ? maxd_[2] : 1;
            for (int c = 0; c < cmax; ++c) {
                Idx srt{a, b, domain_.n == 3 ? c : 0};
                std::sort(srt.begin(), srt.begin() + domain_.n);
                if (domain_.n == 2) srt = {srt[0], srt[1], 0};
                std::size_t slot = static_cast<std::size_t>(a) +
                                   static_cast<std::size_t>(maxd_[0]) *
                                       (static_cast<std::size_t>(b) +
                                        static_cast<std::size_t>(domain_.n == 3 ? maxd_[1] : 1) *
                                            static_cast<std::size_t>(domain_.n == 3 ? c : 0));
                if (domain_.n == 2)
                    slot = static_cast<std::size_t>(a) +
                           static_cast<std::size_t>(maxd_[0]) * static_cast<std::size_t>(b);
                auto it = canon.find(srt);
                unit_[slot] = (it == canon.end()) ? 0.0 : vals[it->second];
            }
        }

    // tails against the whole outside-box region
    tail_full_.assign(domain_.cell_count(), 0.0);
    ExteriorDescriptor full = ExteriorDescriptor::full();
    parallel_for(0, tail_full_.size(), [&](std::size_t f) {
        tail_full_[f] = tail_weight(domain_.unflat(f), full, domain_, s_, quad_tol_);
    });
}

double KernelTable::unit_at(const Idx& delta_abs) const {
    std::size_t slot;
    if (domain_.n == 2)
        slot = static_cast<std::size_t>(delta_abs[0]) +
               static_cast<std::size_t>(maxd_[0]) * static_cast<std::size_t>(delta_abs[1]);
    else
        slot = static_cast<std::size_t>(delta_abs[0]) +
               static_cast<std::size_t>(maxd_[0]) *
                   (static_cast<std::size_t>(delta_abs[1]) +
                    static_cast<std::size_t>(maxd_[1]) * static_cast<std::size_t>(delta_abs[2]));
    return unit_[slot];
}

double KernelTable::pair_weight(const Idx& i, const Idx& j) const {
    Idx d{0, 0, 0};
    bool same = true;
    for (int k = 0; k < domain_.n; ++k) {
        d[k] = std::abs(i[k] - j[k]);
        if (d[k] != 0) same = false;
    }
    if (same) throw std::invalid_argument("self-pair undefined");
    return h_pow_ * unit_at(d);
}

double KernelTable::pair_weight_flat(std::size_t fi, std::size_t fj) const {
    return pair_weight(domain_.unflat(fi), domain_.unflat(fj));
}

void KernelTable::ensure_exterior(const ExteriorDescriptor& d) const {
    if (has_exterior(d)) return;
    TailBlock blk;
    blk.set_hash = d.hash();
    blk.comp_hash = d.complemented().hash();
    blk.set_tail.assign(domain_.cell_count(), 0.0);
    parallel_for(0, blk.set_tail.size(), [&](std::size_t f) {
        blk.set_tail[f] = tail_weight(domain_.unflat(f), d, domain_, s_, quad_tol_);
    });
    std::lock_guard<std::mutex> lock(blocks_mutex_);
    if (!find_block(d.hash())) blocks_.push_back(std::move(blk));
}

bool KernelTable::has_exterior(const ExteriorDescriptor& d) const {
    std::lock_guard<std::mutex> lock(blocks_mutex_);
    return find_block(d.hash()) != nullptr;
}

const KernelTable::TailBlock* KernelTable::find_block(std::uint64_t h) const {
    for (const auto& b : blocks_)
        if (b.set_hash == h || b.comp_hash == h) return &b;
    return nullptr;
}

double KernelTable::tail(std::size_t flat_cell, const ExteriorDescriptor& d) const {
    std::uint64_t h = d.hash();
    const TailBlock* b;
    {
        std::lock_guard<std::mutex> lock(blocks_mutex_);
        b = find_block(h);
    }
    if (!b) throw std::logic_error("exterior tails not prepared; call ensure_exterior first");
    if (b->set_hash == h) return b->set_tail[flat_cell];
    return tail_full_[flat_cell] - b->set_tail[flat_cell];
}

double KernelTable::interaction(const SetPart& a, const SetPart& b,
                                const ExteriorDescriptor& d) const {
    // canonical argument order makes interaction(A,B) == interaction(B,A)
    // bitwise: the summation tree is then identical
    if (std::lexicographical_compare(b.cells.begin(), b.cells.end(), a.cells.begin(),
                                     a.cells.end()))
        return interaction(b, a, d);
    // disjointness of the cell parts (inputs are sorted)
    {
        std::size_t ia = 0, ib = 0;
        while (ia < a.cells.size() && ib < b.cells.size()) {
            if (a.cells[ia] == b.cells[ib])
                throw std::invalid_argument("interaction of non-disjoint sets");
            if (a.cells[ia] < b.cells[ib])
                ++ia;
            else
                ++ib;
        }
    }
    if (a.ext != 0 && b.ext != 0) {
        if (a.ext == b.ext) throw std::invalid_argument("interaction of non-disjoint sets");
        throw std::invalid_argument("exterior-exterior interactions are not supported");
    }
    std::vector<double> rows(a.cells.size() + (b.ext != 0 ? a.cells.size() : 0) +
                                 (a.ext != 0 ? b.cells.size() : 0),
                             0.0);
    std::size_t pos = 0;
    ExteriorDescriptor dset = d;
    parallel_for(0, a.cells.size(), [&](std::size_t ia) {
        Idx ci = domain_.unflat(a.cells[ia]);
        double sum = 0.0;
        for (std::size_t ib = 0; ib < b.cells.size(); ++ib) {
            Idx cj = domain_.unflat(b.cells[ib]);
            Idx dd{0, 0, 0};
            for (int k = 0; k < domain_.n; ++k) dd[k] = std::abs(ci[k] - cj[k]);
            sum += unit_at(dd);
        }
        rows[ia] = sum * h_pow_;
    });
    pos = a.cells.size();
    if (b.ext != 0) {
        ExteriorDescriptor side = (b.ext > 0) ? dset : dset.complemented();
        for (std::size_t ia = 0; ia < a.cells.size(); ++ia) rows[pos++] = tail(a.cells[ia], side);
    }
    if (a.ext != 0) {
        ExteriorDescriptor side = (a.ext > 0) ? dset : dset.complemented();
        for (std::size_t ib = 0; ib < b.cells.size(); ++ib) rows[pos++] = tail(b.cells[ib], side);
    }
    rows.resize(pos > a.cells.size() ? pos : a.cells.size());
    return pairwise_sum(rows);
}

// ---------------------------------------------------------------------------
// cache file: magic, layout key, unit table, tail blocks
// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[6] = {'F', 'R', 'A', 'C', 'K', '1'};

template <typename T>
void put(std::ofstream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return bool(in);
}
} // namespace

void KernelTable::save_cache(const std::string& path) const {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + path);
    o.write(kMagic, 6);
    put(o, domain_.n);
    for (int k = 0; k < 3; ++k) put(o, domain_.dims[k]);
    put(o, domain_.h);
    for (int k = 0; k < 3; ++k) put(o, domain_.origin[k]);
    put(o, s_);
    put(o, quad_tol_);
    std::uint64_t un = unit_.size();
    put(o, un);
    o.write(reinterpret_cast<const char*>(unit_.data()), unit_.size() * sizeof(double));
    std::uint64_t tn = tail_full_.size();
    put(o, tn);
    o.write(reinterpret_cast<const char*>(tail_full_.data()), tail_full_.size() * sizeof(double));
    std::uint64_t bn = blocks_.size();
    put(o, bn);
    for (const auto& b : blocks_) {
        put(o, b.set_hash);
        put(o, b.comp_hash);
        o.write(reinterpret_cast<const char*>(b.set_tail.data()), b.set_tail.size() * sizeof(double));
    }
}

bool KernelTable::load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0) return false;
    int n;
    Idx dims;
    double h, s, tol;
    Vec origin;
    if (!get(in, n)) return false;
    for (int k = 0; k < 3; ++k)
        if (!get(in, dims[k])) return false;
    if (!get(in, h)) return false;
    for (int k = 0; k < 3; ++k)
        if (!get(in, origin[k])) return false;
    if (!get(in, s) || !get(in, tol)) return false;
    if (n != domain_.n || h != domain_.h || s != s_ || tol != quad_tol_) return false;
    for (int k = 0; k < domain_.n; ++k)
        if (dims[k] != domain_.dims[k] || origin[k] != domain_.origin[k]) return false;
    std::uint64_t un;
    if (!get(in, un) || un != unit_.size()) return false;
    in.read(reinterpret_cast<char*>(unit_.data()), un * sizeof(double));
    std::uint64_t tn;
    if (!get(in, tn) || tn != tail_full_.size()) return false;
    in.read(reinterpret_cast<char*>(tail_full_.data()), tn * sizeof(double));
    std::uint64_t bn;
    if (!get(in, bn)) return false;
    blocks_.clear();
    for (std::uint64_t k = 0; k < bn; ++k) {
        TailBlock b;
        if (!get(in, b.set_hash) || !get(in, b.comp_hash)) return false;
        b.set_tail.resize(domain_.cell_count());
        in.read(reinterpret_cast<char*>(b.set_tail.data()), b.set_tail.size() * sizeof(double));
        if (!in) return false;
        blocks_.push_back(std::move(b));
    }
    return true;
}

} // namespace fracmin
