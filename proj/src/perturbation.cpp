#include "fracmin/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracmin/quad.hpp"

namespace fracmin {

namespace {

Vec mat_apply(const Mat& m, const Vec& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

Vec mat_apply_t(const Mat& m, const Vec& v) {
    return {m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2]};
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            c[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
        }
    return c;
}

Mat mat_transpose(const Mat& a) {
    Mat t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
    return t;
}

} // namespace

Frame Frame::from_tangency(const Vec& tangency, const Vec& inward_normal, int n) {
    Frame fr;
    fr.n = n;
    fr.origin = tangency;
    Vec nu = normalized(inward_normal);
    int last = n - 1;
    // column `last` of rot must equal -nu (canonical e_n maps to -inward)
    if (n == 2) {
        Vec t = vec2(nu[1], -nu[0]);
        fr.rot = {{{t[0], -nu[0], 0}, {t[1], -nu[1], 0}, {0, 0, 1}}};
    } else {
        Vec a = std::abs(nu[0]) < 0.9 ? vec3(1, 0, 0) : vec3(0, 1, 0);
        Vec t1 = normalized(vec3(nu[1] * a[2] - nu[2] * a[1], nu[2] * a[0] - nu[0] * a[2],
                                 nu[0] * a[1] - nu[1] * a[0]));
        Vec t2 = vec3(nu[1] * t1[2] - nu[2] * t1[1], nu[2] * t1[0] - nu[0] * t1[2],
                      nu[0] * t1[1] - nu[1] * t1[0]);
        fr.rot = {{{t1[0], t2[0], -nu[0]}, {t1[1], t2[1], -nu[1]}, {t1[2], t2[2], -nu[2]}}};
    }
    (void)last;
    return fr;
}

Vec Frame::to_world(const Vec& canonical) const { return add(origin, mat_apply(rot, canonical)); }

Vec Frame::to_canonical(const Vec& world) const { return mat_apply_t(rot, sub(world, origin)); }

double DeformedBall::deformation(const Vec& xc) const {
    int last = frame.n - 1;
    double rp2 = 0.0;
    for (int k = 0; k < last; ++k) rp2 += xc[k] * xc[k];
    double v = eps * eps - rp2;
    return v > 0.0 ? v / R : 0.0;
}

bool DeformedBall::contains_canonical(const Vec& xc) const {
    Vec shifted = xc;
    shifted[frame.n - 1] += R;
    return norm(shifted) <= R + deformation(xc);
}

double DeformedBall::crossing_radius(const Vec& v_hat) const {
    int last = frame.n - 1;
    double c2 = 0.0;
    for (int k = 0; k < last; ++k) c2 += v_hat[k] * v_hat[k];
    double Q = R * R + eps * eps;
    if (c2 * R * R >= eps * eps) return R; // ray exits the deformation cylinder first
    // sigma = R + (eps^2 - sigma^2 c^2)/R, the root with sigma >= R
    return 2.0 * Q / (R + std::sqrt(R * R + 4.0 * c2 * Q));
}

namespace {

void check_admissible(const DeformedBall& b) {
    if (!(b.R >= 1.0)) throw std::invalid_argument("tangent-ball scale R must be >= 1");
    double cap = 1.0 / (6.0 * b.frame.n);
    if (!(b.eps > 0.0 && b.eps < cap))
        throw std::invalid_argument("eps must lie in (0, 1/(6n))");
}

} // namespace

Vec involution_T(const Vec& x_world, const DeformedBall& ball) {
    check_admissible(ball);
    int n = ball.frame.n;
    Vec xc = ball.frame.to_canonical(x_world);
    Vec v = xc;
    v[n - 1] += ball.R;
    double rho = norm(v);
    if (rho <= 0.0) throw std::domain_error("involution singular at the ball center");
    Vec v_hat = scale(v, 1.0 / rho);
    double sigma = ball.crossing_radius(v_hat);
    double rho_image = 2.0 * sigma - rho;
    if (!(rho > 0.0) || !(rho_image > 0.0))
        throw std::domain_error("outside involution domain");
    Vec yc = scale(v_hat, rho_image);
    yc[n - 1] -= ball.R;
    return ball.frame.to_world(yc);
}

Mat involution_jacobian(const Vec& x_world, const DeformedBall& ball) {
    check_admissible(ball);
    int n = ball.frame.n;
    Vec xc = ball.frame.to_canonical(x_world);
    Vec v = xc;
    v[n - 1] += ball.R;
    double rho = norm(v);
    if (rho <= 0.0) throw std::domain_error("involution singular at the ball center");
    Vec v_hat = scale(v, 1.0 / rho);
    double c2 = 0.0;
    for (int k = 0; k < n - 1; ++k) c2 += v_hat[k] * v_hat[k];

    double sigma, dsigma_dc2;
    double Q = ball.R * ball.R + ball.eps * ball.eps;
    if (c2 * ball.R * ball.R >= ball.eps * ball.eps) {
        sigma = ball.R;
        dsigma_dc2 = 0.0;
    } else {
        double D = std::sqrt(ball.R * ball.R + 4.0 * c2 * Q);
        sigma = 2.0 * Q / (ball.R + D);
        dsigma_dc2 = -4.0 * Q * Q / (D * (ball.R + D) * (ball.R + D));
    }
    // canonical-frame differential of T(x) = -R e_n + (2 sigma(v^) - rho) v^
    // with v = x + R e_n
    Vec en{0, 0, 0};
    en[n - 1] = 1.0;
    double vn = v_hat[n - 1];
    // grad_v sigma = S'(c2) * (-2 vn) (e_n - vn v^)/rho
    Vec grad_sigma = scale(sub(en, scale(v_hat, vn)), -2.0 * vn * dsigma_dc2 / rho);
    Mat dtc{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double proj = (i == j ? 1.0 : 0.0) - v_hat[i] * v_hat[j];
            dtc[i][j] = 2.0 * (v_hat[i] * grad_sigma[j] + sigma * proj / rho) -
                        (i == j ? 1.0 : 0.0);
        }
    if (n == 2) {
        dtc[2][2] = 1.0;
        dtc[0][2] = dtc[1][2] = dtc[2][0] = dtc[2][1] = 0.0;
    }
    return mat_mul(ball.frame.rot, mat_mul(dtc, mat_transpose(ball.frame.rot)));
}

PerturbationSets build_perturbation(const CellSet& e, const Vec& tangency,
                                    const Vec& inward_normal, double R, double eps) {
    const GridDomain& d = e.domain;
    DeformedBall ball;
    ball.R = R;
    ball.eps = eps;
    ball.frame = Frame::from_tangency(tangency, inward_normal, d.n);
    check_admissible(ball);

    // discrete interior tangent ball of scale R behind the tangency point
    {
        double probe_r = R * (1.0 - 2.0 * d.h / R);
        Vec center = add(tangency, scale(normalized(inward_normal), R));
        std::size_t count = d.cell_count();
        for (std::size_t f = 0; f < count; ++f) {
            Vec c = d.cell_center(d.unflat(f));
            if (dist(c, center) <= probe_r && !e.in_set_flat(f))
                throw std::invalid_argument("no interior tangent ball at the tangency point");
        }
    }

    PerturbationSets sets;
    sets.ball = ball;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        if (e.in_set_flat(f)) continue;
        if (ball.contains_world(d.cell_center(d.unflat(f)))) sets.a_minus.push_back(f);
    }
    if (sets.a_minus.empty()) {
        sets.empty_warning = true;
        return sets;
    }
    std::vector<std::size_t> partners(sets.a_minus.size());
    std::vector<char> paired(sets.a_minus.size(), 0);
    Box box = d.box();
    for (std::size_t idx = 0; idx < sets.a_minus.size(); ++idx) {
        std::size_t f = sets.a_minus[idx];
        Vec y = involution_T(d.cell_center(d.unflat(f)), ball);
        if (!box.contains(y)) throw std::invalid_argument("involution image leaves the box");
        Idx j{0, 0, 0};
        for (int k = 0; k < d.n; ++k) {
            j[k] = static_cast<int>(std::floor((y[k] - d.origin[k]) / d.h));
            j[k] = std::clamp(j[k], 0, d.dims[k] - 1);
        }
        std::size_t fj = d.flat(j);
        partners[idx] = fj;
        paired[idx] = e.in_set_flat(fj) ? 0 : 1;
    }
    for (std::size_t idx = 0; idx < sets.a_minus.size(); ++idx) {
        if (paired[idx]) {
            sets.sym.push_back(sets.a_minus[idx]);
            sets.sym.push_back(partners[idx]);
            if (!std::binary_search(sets.a_minus.begin(), sets.a_minus.end(), partners[idx]))
                sets.a_plus.push_back(partners[idx]);
        } else {
            sets.rem.push_back(sets.a_minus[idx]);
        }
    }
    auto dedup = [](std::vector<std::size_t>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedup(sets.a_plus);
    dedup(sets.sym);
    dedup(sets.rem);
    sets.a_all = sets.a_minus;
    sets.a_all.insert(sets.a_all.end(), sets.a_plus.begin(), sets.a_plus.end());
    dedup(sets.a_all);
    return sets;
}

ElResidual euler_lagrange_residual(const CellSet& e, const PerturbationSets& sets, double delta,
                                   const Modulus& rho, const KernelTable& k) {
    const GridDomain& d = e.domain;
    double eps = sets.ball.eps;
    if (!(8.0 * eps < delta)) throw std::invalid_argument("need 8 eps < delta");
    Vec x0 = sets.ball.frame.origin;
    Box b = d.box();
    for (int kk = 0; kk < d.n; ++kk)
        if (x0[kk] - delta < b.lo[kk] || x0[kk] + delta > b.hi[kk])
            throw std::invalid_argument("delta ball exceeds the computational box");
    k.ensure_exterior(e.exterior);

    SetPart a;
    a.cells = sets.a_all;
    SetPart e_far, ec_far;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        if (std::binary_search(a.cells.begin(), a.cells.end(), f)) continue;
        Vec c = d.cell_center(d.unflat(f));
        if (dist(c, x0) <= delta) continue;
        (e.in_set_flat(f) ? e_far : ec_far).cells.push_back(f);
    }
    e_far.ext = +1;
    ec_far.ext = -1;
    ElResidual r;
    r.eps = eps;
    r.lhs = k.interaction(a, e_far, e.exterior) - k.interaction(a, ec_far, e.exterior);
    double rho8 = rho.is_zero() ? 0.0 : rho.eval(std::min(8.0 * eps, rho.delta() * (1.0 - 1e-12)));
    double hn = std::pow(d.h, d.n);
    r.rhs_shape = rho8 * std::pow(eps, d.n - k.s()) +
                  (1.0 / sets.ball.R) * std::pow(delta, 0.5 * (1.0 - k.s())) *
                      (static_cast<double>(sets.a_minus.size()) * hn);
    r.ratio = r.rhs_shape != 0.0 ? r.lhs / r.rhs_shape : 0.0;
    return r;
}

ElResidual el_residual_scan(const CellSet& e, const Vec& tangency, const Vec& inward_normal,
                            double R, double eps_star, double delta, const Modulus& rho,
                            const KernelTable& k) {
    ElResidual best;
    bool have = false;
    for (int i = 0; i < 8; ++i) {
        double eps = eps_star * (1.0 + (i + 0.5) / 8.0);
        PerturbationSets sets = build_perturbation(e, tangency, inward_normal, R, eps);
        if (sets.a_minus.empty()) continue;
        ElResidual r = euler_lagrange_residual(e, sets, delta, rho, k);
        if (!have || r.ratio < best.ratio) {
            best = r;
            have = true;
        }
    }
    if (!have) throw std::runtime_error("all scanned perturbations were empty");
    return best;
}

} // namespace fracmin
