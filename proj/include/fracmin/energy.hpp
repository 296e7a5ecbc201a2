#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracmin/grid.hpp"
#include "fracmin/kernel.hpp"
#include "fracmin/modulus.hpp"

namespace fracmin {

// Cell-resolved window: a cell belongs to Omega iff its center does.
struct Window {
    enum class Shape { Ball, Box, Whole };
    Shape shape = Shape::Whole;
    Vec center{0, 0, 0};
    double r = 0.0;
    Vec lo{0, 0, 0}, hi{0, 0, 0};
    std::vector<std::size_t> cells;      // sorted flat indices
    std::vector<std::uint8_t> in_window; // dense membership

    static Window ball(const GridDomain& d, const Vec& center, double r);
    static Window box(const GridDomain& d, const Vec& lo, const Vec& hi);
    static Window whole(const GridDomain& d);
    bool contains(std::size_t flat) const { return in_window[flat] != 0; }
};

struct EnergyReport {
    double total = 0.0;
    double term_in_out = 0.0; // L(E ∩ Omega, E^c)
    double term_out_in = 0.0; // L(E \ Omega, E^c ∩ Omega)
    double tail_share = 0.0;
    std::string to_json() const;
};

EnergyReport localized_energy(const CellSet& e, const Window& w, const KernelTable& k);

struct EnergyDelta {
    double delta = 0.0; // J(F;Omega) - J(E;Omega), direct route
    double cross_term = 0.0;
    double sub_part = 0.0;   // L(A-, E\A-) - L(A-, E^c)
    double super_part = 0.0; // L(A+, E) - L(A+, E^c\A+)
    double decomposed() const { return cross_term + sub_part - super_part; }
};

EnergyDelta energy_delta(const CellSet& e, const CellSet& f, const Window& w, const KernelTable& k);

// First-variation gaps; the respective property holds at (A, r) iff the
// gap is <= 0.
double supersolution_gap(const CellSet& e, const std::vector<std::size_t>& a, const Vec& x0,
                         double r, const Modulus& rho, const KernelTable& k);
double subsolution_gap(const CellSet& e, const std::vector<std::size_t>& a, const Vec& x0, double r,
                       const Modulus& rho, const KernelTable& k);

struct ResidualWitness {
    double gap = -std::numeric_limits<double>::infinity();
    bool super_side = true;
    std::string kind;
    std::vector<std::size_t> cells;
};

// Worst positive gap over sampled perturbations: singletons, face-connected
// pairs, random small clusters and slab caps inside B_r(x0).
ResidualWitness almost_minimality_residual(const CellSet& e, const Vec& x0, double r,
                                           const Modulus& rho, const KernelTable& k, int budget,
                                           std::uint64_t seed = 1234);

} // namespace fracmin
