#pragma once

#include <optional>
#include <vector>

#include "fracmin/grid.hpp"
#include "fracmin/kernel.hpp"
#include "fracmin/modulus.hpp"

namespace fracmin {

struct FlatnessReport {
    Vec direction{0, 0, 1};
    double width = 0.0; // slab half-width divided by r
    Vec x0{0, 0, 0};
    double r = 0.0;
};

// Minimal slab width over a direction net (exact O(F^2) pair sweep in 2d,
// Fibonacci net plus local refinement in 3d).
FlatnessReport flatness(const CellSet& e, const Vec& x0, double r);

struct FlatOrderSequence {
    int k = 0;
    double r0 = 1.0;
    std::vector<Vec> directions;
    std::vector<double> widths;      // dimensionless per dyadic scale l = 0..k
    std::vector<double> gamma_bound; // rho_hat(2^{l-k})
    std::vector<bool> holds;
    bool all_hold = false;
    int first_failure = -1;
};

FlatOrderSequence flat_order_sequence(const CellSet& e, const Vec& x0, int k, const Modulus& rho,
                                      double r0 = 1.0);

double density_ratio(const CellSet& e, const Vec& x0, double r);

struct CurvatureReport {
    double value = 0.0;        // at the smallest cutoff
    double extrapolated = 0.0; // Richardson over delta_cut in {2h, 4h, 8h}
    double cutoff = 0.0;
    std::vector<double> per_cutoff;
};

// Principal-value non-local mean curvature
//   H(x0) = -(1-s) \int (chi_E - chi_{E^c})(x) |x - x0|^{-(n+s)} dx
// with a symmetric inner cutoff; x0 must be a boundary face midpoint.
CurvatureReport nonlocal_mean_curvature(const CellSet& e, const Vec& x0, const KernelTable& k,
                                        double delta_cut);

CellSet blow_up(const CellSet& e, const Vec& x0, double r);

// Discrete tangent-ball probes: a rasterized ball of radius r fits inside E
// (resp. E^c) touching the given boundary face.
bool has_interior_tangent_ball(const CellSet& e, const BoundaryFace& face, double r);
bool has_exterior_tangent_ball(const CellSet& e, const BoundaryFace& face, double r);

bool harnack_inclusion_check(const CellSet& e, const Vec& x0, const Vec& e0, double a,
                             double delta0);
// Largest delta0 in a geometric trial ladder for which both inclusions hold.
double harnack_delta0_sweep(const CellSet& e, const Vec& x0, const Vec& e0, double a,
                            const std::vector<double>& ladder);

} // namespace fracmin
