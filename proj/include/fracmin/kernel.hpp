#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "fracmin/grid.hpp"

namespace fracmin {

// Interaction weight between two distinct unit cells of the integer
// lattice at offset delta, for the kernel (1-s)|x-y|^{-(n+s)}. Weights on
// a grid with cell size h are h^{n-s} times these, so a table dilated by
// lambda scales by exactly lambda^{n-s}.
double unit_offset_weight(const Idx& delta, int n, double s, double rel_tol);

// (1-s) * integral over Q_i x Q_j of |x-y|^{-(n+s)}.
double cell_pair_weight(const Idx& i, const Idx& j, const GridDomain& domain, double s,
                        double quad_tol);

// (1-s) * integral over Q_i x (exterior-set minus box). Radial integration
// is exact per ray; the angular integral is adaptive; the cell integral
// grades toward box faces the cell touches.
double tail_weight(const Idx& i, const ExteriorDescriptor& exterior, const GridDomain& domain,
                   double s, double quad_tol);

// (1-s) * integral over {descriptor-set minus box} of |x-p|^{-(n+s)} for a
// point p inside the box.
double exterior_point_integral(const Vec& p, const ExteriorDescriptor& d, const GridDomain& domain,
                               double s, double rel_tol);

// Same but with the signed density chi_D - chi_{D^c} over the whole region
// outside the box; the cancellation happens inside one quadrature.
double exterior_point_signed(const Vec& p, const ExteriorDescriptor& d, const GridDomain& domain,
                             double s, double rel_tol);

// (1-s) * integral over one grid cell of |x-p|^{-(n+s)}; p outside the cell.
double cell_point_integral(const Idx& i, const Vec& p, const GridDomain& domain, double s,
                           double rel_tol);

// One side of an interaction: grid cells (sorted flat indices) plus an
// optional exterior part. ext = +1 takes the descriptor set outside the
// box, -1 its complement outside the box.
struct SetPart {
    std::vector<std::size_t> cells;
    int ext = 0;
};

class KernelTable {
  public:
    KernelTable(GridDomain domain, double s, double quad_tol = 1e-8);

    const GridDomain& domain() const { return domain_; }
    double s() const { return s_; }
    double quad_tol() const { return quad_tol_; }

    double pair_weight(const Idx& i, const Idx& j) const;
    double pair_weight_flat(std::size_t fi, std::size_t fj) const;

    // Precompute per-cell tail weights for a descriptor (and implicitly its
    // complement). Safe to call concurrently; other operations never mutate
    // observable state.
    void ensure_exterior(const ExteriorDescriptor& d) const;
    bool has_exterior(const ExteriorDescriptor& d) const;
    double tail(std::size_t flat_cell, const ExteriorDescriptor& d) const;
    double tail_outside_box(std::size_t flat_cell) const { return tail_full_[flat_cell]; }

    // L_s(A, B) from the table; A, B must be disjoint and at most one side
    // may carry exterior material.
    double interaction(const SetPart& a, const SetPart& b, const ExteriorDescriptor& d) const;

    void save_cache(const std::string& path) const;
    // Returns false when the file is absent or keyed differently.
    bool load_cache(const std::string& path);

  private:
    struct TailBlock {
        std::uint64_t set_hash;
        std::uint64_t comp_hash;
        std::vector<double> set_tail;
    };

    double unit_at(const Idx& delta_abs) const;
    const TailBlock* find_block(std::uint64_t h) const;

    GridDomain domain_;
    double s_;
    double quad_tol_;
    double h_pow_; // h^{n-s}
    Idx maxd_{1, 1, 1};
    std::vector<double> unit_;      // canonical |delta| table
    std::vector<double> tail_full_; // per-cell weight against everything outside the box
    mutable std::deque<TailBlock> blocks_;
    mutable std::mutex blocks_mutex_;
};

} // namespace fracmin
