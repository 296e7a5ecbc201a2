#include "fracmin/extension.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fracmin/quad.hpp"
#include "fracmin/util.hpp"

namespace fracmin {

namespace {

struct Operator {
    const GridDomain* base;
    int levels;
    std::vector<double> lat_coeff;   // per level: z_k^a * h^{n-2} * dz_k
    std::vector<double> ver_coeff;   // per interface 1..M-1: z_face^a * h^n / (z_{k+1}-z_k)
    double bot_coeff;                // (1-a)/z_0^{1-a} * h^n
    std::vector<double> diag;        // assembled diagonal

    std::size_t cells() const { return base->cell_count() * levels; }

    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        const GridDomain& d = *base;
        std::size_t nb = d.cell_count();
        parallel_for(0, nb, [&](std::size_t f) {
            Idx i = d.unflat(f);
            for (int k = 0; k < levels; ++k) {
                std::size_t id = f + nb * k;
                double acc = diag[id] * u[id];
                for (int ax = 0; ax < d.n; ++ax) {
                    for (int dir = -1; dir <= 1; dir += 2) {
                        Idx j = i;
                        j[ax] += dir;
                        if (!d.in_bounds(j)) continue;
                        acc -= lat_coeff[k] * u[d.flat(j) + nb * k];
                    }
                }
                if (k > 0) acc -= ver_coeff[k - 1] * u[id - nb];
                if (k + 1 < levels) acc -= ver_coeff[k] * u[id + nb];
                out[id] = acc;
            }
        });
    }
};

} // namespace

ExtensionField solve_extension(const CellSet& e, double s, const ExtensionParams& params) {
    if (params.levels < 16) throw std::invalid_argument("need at least 16 z-levels");
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("order s must be in (0,1]");
    ExtensionField field;
    field.base = e.domain;
    field.a = 1.0 - s;
    const GridDomain& d = e.domain;
    double hz = params.hz > 0.0 ? params.hz : d.h;

    field.z_face.push_back(0.0);
    double thick = hz;
    for (int k = 0; k < params.levels; ++k) {
        if (k >= params.uniform_levels) thick *= params.stretch;
        field.z_thick.push_back(thick);
        field.z_center.push_back(field.z_face.back() + 0.5 * thick);
        field.z_face.push_back(field.z_face.back() + thick);
    }

    std::size_t nb = d.cell_count();
    field.trace.resize(nb);
    for (std::size_t f = 0; f < nb; ++f) field.trace[f] = e.in_set_flat(f) ? 1.0 : -1.0;

    Operator op;
    op.base = &d;
    op.levels = params.levels;
    double a = field.a;
    double hn = std::pow(d.h, d.n);
    for (int k = 0; k < params.levels; ++k)
        op.lat_coeff.push_back(std::pow(field.z_center[k], a) * std::pow(d.h, d.n - 2) *
                               field.z_thick[k]);
    for (int k = 0; k + 1 < params.levels; ++k)
        op.ver_coeff.push_back(std::pow(field.z_face[k + 1], a) * hn /
                               (field.z_center[k + 1] - field.z_center[k]));
    // exact transmissibility of the degenerate half-cell 0 < z < z_0
    double z0 = field.z_center[0];
    op.bot_coeff = (a < 1.0) ? (1.0 - a) / std::pow(z0, 1.0 - a) * hn : hn / z0;

    op.diag.assign(op.cells(), 0.0);
    for (std::size_t f = 0; f < nb; ++f) {
        Idx i = d.unflat(f);
        int neighbors = 0;
        for (int ax = 0; ax < d.n; ++ax)
            for (int dir = -1; dir <= 1; dir += 2) {
                Idx j = i;
                j[ax] += dir;
                if (d.in_bounds(j)) ++neighbors;
            }
        for (int k = 0; k < params.levels; ++k) {
            double v = neighbors * op.lat_coeff[k];
            if (k > 0) v += op.ver_coeff[k - 1];
            if (k + 1 < params.levels) v += op.ver_coeff[k];
            if (k == 0) v += op.bot_coeff;
            op.diag[f + nb * k] = v;
        }
    }

    std::vector<double> b(op.cells(), 0.0);
    for (std::size_t f = 0; f < nb; ++f) b[f] = op.bot_coeff * field.trace[f];

    // preconditioned conjugate gradients, Jacobi preconditioner
    std::vector<double> u(op.cells(), 0.0), r(b), z(op.cells()), p(op.cells()), q(op.cells());
    auto dot_v = [](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> t(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) t[i] = x[i] * y[i];
        return pairwise_sum(t);
    };
    double bnorm = std::sqrt(dot_v(b, b));
    if (bnorm == 0.0) bnorm = 1.0;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / op.diag[i];
    p = z;
    double rz = dot_v(r, z);
    int it = 0;
    double rel = 1.0;
    for (; it < params.max_iterations; ++it) {
        rel = std::sqrt(dot_v(r, r)) / bnorm;
        if (rel <= params.tol) break;
        op.apply(p, q);
        double alpha = rz / dot_v(p, q);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += alpha * p[i];
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / op.diag[i];
        double rz_new = dot_v(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    if (rel > params.tol)
        throw std::runtime_error("extension solver did not reach tolerance; residual " +
                                 std::to_string(rel));
    field.values = std::move(u);
    field.residual = rel;
    field.iterations = it;
    return field;
}

double weighted_energy(const ExtensionField& field, const Vec& x0, double r) {
    const GridDomain& d = field.base;
    Box box = d.box();
    for (int k = 0; k < d.n; ++k)
        if (x0[k] - r < box.lo[k] - 1e-12 || x0[k] + r > box.hi[k] + 1e-12)
            throw std::invalid_argument("half-ball exceeds the lateral domain");
    if (r > field.z_face.back())
        throw std::invalid_argument("half-ball exceeds the truncated height");
    std::size_t nb = d.cell_count();
    int levels = static_cast<int>(field.z_center.size());
    double a = field.a;
    double hn = std::pow(d.h, d.n);
    std::vector<double> terms;

    auto inside = [&](const Vec& xz_point, double z) {
        double dd = z * z;
        for (int k = 0; k < d.n; ++k) dd += (xz_point[k] - x0[k]) * (xz_point[k] - x0[k]);
        return dd <= r * r;
    };

    for (std::size_t f = 0; f < nb; ++f) {
        Idx i = d.unflat(f);
        Vec c = d.cell_center(i);
        // bottom trace segment
        if (inside(c, 0.5 * field.z_center[0])) {
            double bot = (a < 1.0)
                             ? (1.0 - a) / std::pow(field.z_center[0], 1.0 - a) * hn
                             : hn / field.z_center[0];
            double du = field.at(f, 0) - field.trace[f];
            terms.push_back(bot * du * du);
        }
        for (int k = 0; k < levels; ++k) {
            // lateral faces in the +axis directions only (each counted once)
            for (int ax = 0; ax < d.n; ++ax) {
                Idx j = i;
                j[ax] += 1;
                if (!d.in_bounds(j)) continue;
                Vec mid = c;
                mid[ax] += 0.5 * d.h;
                if (!inside(mid, field.z_center[k])) continue;
                double coeff = std::pow(field.z_center[k], a) * std::pow(d.h, d.n - 2) *
                               field.z_thick[k];
                double du = field.at(d.flat(j), k) - field.at(f, k);
                terms.push_back(coeff * du * du);
            }
            // vertical face to level k+1
            if (k + 1 < levels && inside(c, field.z_face[k + 1])) {
                double coeff = std::pow(field.z_face[k + 1], a) * hn /
                               (field.z_center[k + 1] - field.z_center[k]);
                double du = field.at(f, k + 1) - field.at(f, k);
                terms.push_back(coeff * du * du);
            }
        }
    }
    return pairwise_sum(terms);
}

double rho_radial_integral(const Modulus& rho, double r, int n, double s) {
    if (rho.is_zero()) return 0.0;
    double p = n - s;
    if (rho.is_power()) {
        double alpha = rho.alpha();
        return p * rho.coeff() * std::pow(r, alpha + p) / (alpha + p);
    }
    // table: explicit power-law germ below the first sample, quadrature above
    double t1 = std::min(r, rho.points().front().first);
    double a0 = std::log(rho.points()[1].second / rho.points()[0].second) /
                std::log(rho.points()[1].first / rho.points()[0].first);
    double c0 = rho.points()[0].second / std::pow(rho.points()[0].first, a0);
    double germ = c0 * std::pow(t1, a0 + p) / (a0 + p);
    double rest = 0.0;
    if (r > t1)
        rest = adaptive_integrate([&](double t) { return rho.eval(t) * std::pow(t, p - 1.0); }, t1,
                                  r, 1e-10, 1e-14);
    return p * (germ + rest);
}

MonotonicityProfile phi_profile(const ExtensionField& field, const Vec& x0, const Modulus& rho,
                                const std::vector<double>& radii) {
    MonotonicityProfile prof;
    int n = field.base.n;
    double s = 1.0 - field.a;
    for (double r : radii) {
        double en = weighted_energy(field, x0, r) / std::pow(r, n - s);
        double rt = rho_radial_integral(rho, r, n, s);
        prof.radii.push_back(r);
        prof.energy_term.push_back(en);
        prof.rho_term.push_back(rt);
        prof.phi.push_back(en + rt);
    }
    return prof;
}

double total_weighted_energy(const ExtensionField& field) {
    const GridDomain& d = field.base;
    std::size_t nb = d.cell_count();
    int levels = static_cast<int>(field.z_center.size());
    double a = field.a;
    double hn = std::pow(d.h, d.n);
    std::vector<double> terms;
    double bot = (a < 1.0) ? (1.0 - a) / std::pow(field.z_center[0], 1.0 - a) * hn
                           : hn / field.z_center[0];
    for (std::size_t f = 0; f < nb; ++f) {
        Idx i = d.unflat(f);
        double du0 = field.at(f, 0) - field.trace[f];
        terms.push_back(bot * du0 * du0);
        for (int k = 0; k < levels; ++k) {
            for (int ax = 0; ax < d.n; ++ax) {
                Idx j = i;
                j[ax] += 1;
                if (!d.in_bounds(j)) continue;
                double coeff = std::pow(field.z_center[k], a) * std::pow(d.h, d.n - 2) *
                               field.z_thick[k];
                double du = field.at(d.flat(j), k) - field.at(f, k);
                terms.push_back(coeff * du * du);
            }
            if (k + 1 < levels) {
                double coeff = std::pow(field.z_face[k + 1], a) * hn /
                               (field.z_center[k + 1] - field.z_center[k]);
                double du = field.at(f, k + 1) - field.at(f, k);
                terms.push_back(coeff * du * du);
            }
        }
    }
    return pairwise_sum(terms);
}

EnergyRelation energy_relation_experiment(const CellSet& e, const CellSet& f, const Window& w,
                                          const KernelTable& k, const ExtensionParams& params) {
    EnergyRelation rel;
    rel.rhs = localized_energy(f, w, k).total - localized_energy(e, w, k).total;
    ExtensionField fe = solve_extension(e, k.s(), params);
    ExtensionField ff = solve_extension(f, k.s(), params);
    rel.lhs = total_weighted_energy(ff) - total_weighted_energy(fe);
    rel.ratio = rel.rhs != 0.0 ? rel.lhs / rel.rhs : 0.0;
    return rel;
}

void save_field(const ExtensionField& field, const std::string& base_path) {
    std::ofstream bin(base_path + ".f64", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + base_path + ".f64");
    bin.write(reinterpret_cast<const char*>(field.values.data()),
              field.values.size() * sizeof(double));
    nlohmann::json j;
    j["n"] = field.base.n;
    j["dims"] = {field.base.dims[0], field.base.dims[1], field.base.dims[2]};
    j["h"] = field.base.h;
    j["origin"] = {field.base.origin[0], field.base.origin[1], field.base.origin[2]};
    j["a"] = field.a;
    j["z_levels"] = field.z_center;
    j["layout"] = "base-major";
    std::ofstream side(base_path + ".json");
    side << j.dump(2) << "\n";
}

} // namespace fracmin
