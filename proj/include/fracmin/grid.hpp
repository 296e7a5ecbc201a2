#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fracmin/geom.hpp"

namespace fracmin {

// Uniform Cartesian cell grid. Cell with multi-index i occupies the closed
// box origin + h*[i, i+1] per axis.
struct GridDomain {
    int n = 2;
    Idx dims{1, 1, 1};
    double h = 1.0;
    Vec origin{0, 0, 0};

    GridDomain() = default;
    GridDomain(int n_, Idx dims_, double h_, Vec origin_);

    std::size_t cell_count() const;
    std::size_t flat(const Idx& i) const;
    Idx unflat(std::size_t f) const;
    Vec cell_center(const Idx& i) const;
    Vec cell_low(const Idx& i) const;
    bool in_bounds(const Idx& i) const;
    Box box() const;
    bool same_layout(const GridDomain& o) const;
};

enum class RasterRule { Center, Majority };

// Binary set over grid cells plus an analytic descriptor for the part of
// the set outside the computational box.
struct CellSet {
    GridDomain domain;
    std::vector<std::uint8_t> mask;
    ExteriorDescriptor exterior;

    CellSet() = default;
    CellSet(GridDomain d, ExteriorDescriptor ext);

    bool in_set(const Idx& i) const { return mask[domain.flat(i)] != 0; }
    bool in_set_flat(std::size_t f) const { return mask[f] != 0; }
    void set(const Idx& i, bool v) { mask[domain.flat(i)] = v ? 1 : 0; }
    std::size_t count() const;
    CellSet complemented() const;
};

// A face between an in-cell and an out-cell (the out side may be an
// exterior sample across the box boundary).
struct BoundaryFace {
    Vec midpoint;
    int axis;        // normal axis
    Idx inside_cell; // the E-side cell
    bool outward;    // true when the out side is at +axis from the in cell
};

CellSet rasterize(const ExteriorDescriptor& shape, const GridDomain& domain,
                  RasterRule rule = RasterRule::Center);

// Subgraph {x_n < u(x')} of a supplied function of the first n-1 coordinates.
CellSet rasterize_subgraph(const std::function<double(const Vec&)>& u, const GridDomain& domain,
                           const ExteriorDescriptor& exterior, RasterRule rule = RasterRule::Center);

double symmetric_difference_measure(const CellSet& e, const CellSet& f);

CellSet rescale(const CellSet& e, double lambda);
CellSet translate(const CellSet& e, const Vec& t);

std::vector<BoundaryFace> boundary_faces(const CellSet& e);

// File formats: ".cellset.json" (RLE mask) and plain-text ".grid" for n=2.
void save_cellset_json(const CellSet& e, const std::string& path);
CellSet load_cellset_json(const std::string& path);
void save_grid_text(const CellSet& e, const std::string& path);
CellSet load_grid_text(const std::string& path);

} // namespace fracmin
