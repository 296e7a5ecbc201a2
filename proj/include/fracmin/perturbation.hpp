#pragma once

#include <array>
#include <vector>

#include "fracmin/grid.hpp"
#include "fracmin/kernel.hpp"
#include "fracmin/modulus.hpp"

namespace fracmin {

using Mat = std::array<std::array<double, 3>, 3>;

// Rigid motion mapping the canonical frame (tangency at the origin, inward
// normal -e_n, so the tangent ball sits at -2R e_n) to world coordinates.
struct Frame {
    Vec origin{0, 0, 0};
    Mat rot{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; // world = origin + rot * canonical
    int n = 2;

    static Frame from_tangency(const Vec& tangency, const Vec& inward_normal, int n);
    Vec to_world(const Vec& canonical) const;
    Vec to_canonical(const Vec& world) const;
};

// Deformed ball V_{R,eps} = {x : |x + R e_n| <= R + d_eps(x)} with
// d_eps(x) = eps^2 d(x/eps), d(x) = R^{-1}(1 - |x'|^2)_+ (canonical frame).
struct DeformedBall {
    double R = 1.0;
    double eps = 0.0;
    Frame frame;

    // Radius at which the ray from -R e_n in direction v crosses the
    // deformed sphere; closed form, which is what makes the reflection map
    // an exact involution.
    double crossing_radius(const Vec& v_hat) const;
    bool contains_canonical(const Vec& xc) const;
    bool contains_world(const Vec& xw) const { return contains_canonical(frame.to_canonical(xw)); }
    double deformation(const Vec& xc) const; // d_eps in the canonical frame
};

// The reflection-like involution across the deformed sphere: x maps along
// its ray from -R e_n so that the crossing point bisects the radial
// coordinates. Throws outside the open ring 0 < rho < 2 sigma*(v).
Vec involution_T(const Vec& x_world, const DeformedBall& ball);

// Closed-form differential of the same map, world frame.
Mat involution_jacobian(const Vec& x_world, const DeformedBall& ball);

struct PerturbationSets {
    DeformedBall ball;
    std::vector<std::size_t> a_minus; // cells of V_{R,eps} \ E
    std::vector<std::size_t> a_plus;  // cells of T(A-) \ E, minus A-
    std::vector<std::size_t> a_all;   // A- union A+
    std::vector<std::size_t> sym;     // T-symmetric part S (cellwise pairing)
    std::vector<std::size_t> rem;     // D = unpaired remainder, subset of A-
    bool empty_warning = false;
};

PerturbationSets build_perturbation(const CellSet& e, const Vec& tangency,
                                    const Vec& inward_normal, double R, double eps);

struct ElResidual {
    double lhs = 0.0;       // L(A, E\B_delta) - L(A, E^c\B_delta)
    double rhs_shape = 0.0; // rho(8 eps) eps^{n-s} + R^{-1} delta^{(1-s)/2} |A-|
    double ratio = 0.0;
    double eps = 0.0;
};

ElResidual euler_lagrange_residual(const CellSet& e, const PerturbationSets& sets, double delta,
                                   const Modulus& rho, const KernelTable& k);

// Scans 8 equispaced eps values in (eps_star, 2 eps_star) and keeps the
// smallest ratio.
ElResidual el_residual_scan(const CellSet& e, const Vec& tangency, const Vec& inward_normal,
                            double R, double eps_star, double delta, const Modulus& rho,
                            const KernelTable& k);

} // namespace fracmin
