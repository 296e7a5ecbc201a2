#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fracmin/energy.hpp"
#include "fracmin/grid.hpp"
#include "fracmin/kernel.hpp"

namespace fracmin {

// Binary minimization of J_s(.;Omega) (+ optional bulk term) with the data
// fixed outside Omega. Every pair weight is positive, so the energy is
// submodular and an s-t min cut solves it exactly.
struct CutProblem {
    const KernelTable* kernel = nullptr;
    Window omega;
    CellSet boundary;
    std::vector<double> gamma; // per free cell, already times h^n; empty if absent
    std::vector<std::uint8_t> forced_in;
    double capacity_scale = 4294967296.0; // 2^32 per unit energy

    std::vector<std::size_t> free_cells;
    std::vector<double> b_in;  // interaction with fixed in-material
    std::vector<double> b_out; // interaction with fixed out-material
    std::size_t arc_count = 0;
};

struct MinimizerResult {
    CellSet minimizer;
    double energy = 0.0; // J_s(E*;Omega) + bulk term, from the table
    long long flow_value = 0;
    double quantization_bound = 0.0;
};

using GammaFn = std::function<double(const Vec&)>;

CutProblem build_cut_problem(const KernelTable& k, const Window& omega, const CellSet& boundary,
                             const GammaFn* gamma = nullptr, const CellSet* obstacle = nullptr,
                             double capacity_scale = 4294967296.0);

MinimizerResult minimize(const CutProblem& problem);

// Real-arithmetic objective of an explicit free-cell labeling; shares the
// kernel table but none of the max-flow machinery.
double cut_objective(const CutProblem& problem, const std::vector<std::uint8_t>& labels);

// Exhaustive minimum over all labelings (free cell count <= 24 enforced).
std::pair<double, std::vector<std::uint8_t>> brute_force_minimum(const CutProblem& problem);

bool maximum_principle_check(const MinimizerResult& result, const Window& omega,
                             const ExteriorDescriptor& plane);

} // namespace fracmin
