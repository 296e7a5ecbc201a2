#pragma once

#include <vector>

#include "fracmin/energy.hpp"
#include "fracmin/grid.hpp"
#include "fracmin/kernel.hpp"
#include "fracmin/modulus.hpp"

namespace fracmin {

// Discrete solution of div(z^a grad u) = 0 on a truncated half-space with
// Dirichlet trace chi_E - chi_{E^c} at z = 0 and homogeneous Neumann on the
// lateral and top boundaries. Cell-centered in z; the first levels are
// uniform, the rest stretch geometrically.
struct ExtensionField {
    GridDomain base;
    double a = 0.5; // weight exponent, 1 - s
    std::vector<double> z_center;
    std::vector<double> z_thick;
    std::vector<double> z_face; // interface heights, size M+1, z_face[0] = 0
    std::vector<double> values; // base-cell-major: values[f + count*k]
    std::vector<double> trace;  // +-1 per base cell
    double residual = 0.0;
    int iterations = 0;

    double at(std::size_t base_flat, int level) const {
        return values[base_flat + base.cell_count() * level];
    }
};

struct ExtensionParams {
    int levels = 32;
    double tol = 1e-10;
    double hz = 0.0; // 0: use the base cell size
    int uniform_levels = 8;
    double stretch = 1.15;
    int max_iterations = 20000;
};

ExtensionField solve_extension(const CellSet& e, double s, const ExtensionParams& params);

// Weighted Dirichlet energy over the half-ball B_r^+ centered at (x0, 0);
// faces clipped by center sampling.
double weighted_energy(const ExtensionField& field, const Vec& x0, double r);

struct MonotonicityProfile {
    std::vector<double> radii;
    std::vector<double> phi;
    std::vector<double> energy_term;
    std::vector<double> rho_term;
};

// Phi_E(r) = energy(B_r^+)/r^{n-s} + (n-s) int_0^r rho(t) t^{n-s-1} dt.
MonotonicityProfile phi_profile(const ExtensionField& field, const Vec& x0, const Modulus& rho,
                                const std::vector<double>& radii);

double rho_radial_integral(const Modulus& rho, double r, int n, double s);

double total_weighted_energy(const ExtensionField& field);

struct EnergyRelation {
    double lhs = 0.0; // extension-energy difference
    double rhs = 0.0; // J_s difference from the kernel table
    double ratio = 0.0;
};

EnergyRelation energy_relation_experiment(const CellSet& e, const CellSet& f, const Window& w,
                                          const KernelTable& k, const ExtensionParams& params);

void save_field(const ExtensionField& field, const std::string& base_path);

} // namespace fracmin
