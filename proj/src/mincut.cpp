#include "fracmin/mincut.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "fracmin/quad.hpp"
#include "fracmin/util.hpp"

namespace fracmin {

namespace {

// Dinic max-flow on int64 capacities. Adjacency is built in a fixed order,
// which together with the algorithm makes the residual graph (and hence the
// canonical source-side-minimal cut) deterministic.
class MaxFlow {
  public:
    explicit MaxFlow(int nodes) : head_(nodes, -1) {}

    void add_edge(int from, int to, long long cap, long long rev_cap = 0) {
        edges_.push_back({to, head_[from], cap});
        head_[from] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({from, head_[to], rev_cap});
        head_[to] = static_cast<int>(edges_.size()) - 1;
    }

    long long solve(int s, int t) {
        long long flow = 0;
        while (bfs(s, t)) {
            iter_ = head_;
            long long f;
            while ((f = dfs(s, t, std::numeric_limits<long long>::max())) > 0) flow += f;
        }
        return flow;
    }

    // Source side of the canonical minimal cut: residual-reachable set.
    std::vector<std::uint8_t> source_side(int s) const {
        std::vector<std::uint8_t> vis(head_.size(), 0);
        std::queue<int> q;
        q.push(s);
        vis[s] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int e = head_[u]; e != -1; e = edges_[e].next) {
                if (edges_[e].cap > 0 && !vis[edges_[e].to]) {
                    vis[edges_[e].to] = 1;
                    q.push(edges_[e].to);
                }
            }
        }
        return vis;
    }

  private:
    struct Edge {
        int to;
        int next;
        long long cap;
    };

    bool bfs(int s, int t) {
        level_.assign(head_.size(), -1);
        std::queue<int> q;
        q.push(s);
        level_[s] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int e = head_[u]; e != -1; e = edges_[e].next) {
                if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
                    level_[edges_[e].to] = level_[u] + 1;
                    q.push(edges_[e].to);
                }
            }
        }
        return level_[t] >= 0;
    }

    long long dfs(int u, int t, long long limit) {
        if (u == t) return limit;
        for (int& e = iter_[u]; e != -1; e = edges_[e].next) {
            Edge& ed = edges_[e];
            if (ed.cap > 0 && level_[ed.to] == level_[u] + 1) {
                long long got = dfs(ed.to, t, std::min(limit, ed.cap));
                if (got > 0) {
                    ed.cap -= got;
                    edges_[e ^ 1].cap += got;
                    return got;
                }
            }
        }
        return 0;
    }

    std::vector<Edge> edges_;
    std::vector<int> head_;
    std::vector<int> level_;
    std::vector<int> iter_;
};

long long to_cap(double v, double scale) {
    double c = v * scale;
    if (!(c < 9.0e18))
        throw std::overflow_error("capacity overflow; rerun with a smaller --capacity-scale");
    return llround(std::max(c, 0.0));
}

} // namespace

CutProblem build_cut_problem(const KernelTable& k, const Window& omega, const CellSet& boundary,
                             const GammaFn* gamma, const CellSet* obstacle, double capacity_scale) {
    if (!boundary.domain.same_layout(k.domain()))
        throw std::invalid_argument("kernel table and boundary domains do not match");
    k.ensure_exterior(boundary.exterior);
    CutProblem p;
    p.kernel = &k;
    p.omega = omega;
    p.boundary = boundary;
    p.capacity_scale = capacity_scale;
    p.free_cells = omega.cells;

    const GridDomain& d = boundary.domain;
    std::size_t count = d.cell_count();
    std::vector<std::size_t> fixed_in, fixed_out;
    for (std::size_t f = 0; f < count; ++f) {
        if (omega.contains(f)) continue;
        (boundary.in_set_flat(f) ? fixed_in : fixed_out).push_back(f);
    }
    ExteriorDescriptor comp = boundary.exterior.complemented();
    std::size_t nf = p.free_cells.size();
    p.b_in.assign(nf, 0.0);
    p.b_out.assign(nf, 0.0);
    parallel_for(0, nf, [&](std::size_t a) {
        std::size_t fa = p.free_cells[a];
        double sin_sum = k.tail(fa, boundary.exterior);
        for (auto fb : fixed_in) sin_sum += k.pair_weight_flat(fa, fb);
        double sout_sum = k.tail(fa, comp);
        for (auto fb : fixed_out) sout_sum += k.pair_weight_flat(fa, fb);
        p.b_in[a] = sin_sum;
        p.b_out[a] = sout_sum;
    });
    if (gamma && *gamma) {
        double hn = std::pow(d.h, d.n);
        p.gamma.resize(nf);
        for (std::size_t a = 0; a < nf; ++a)
            p.gamma[a] = (*gamma)(d.cell_center(d.unflat(p.free_cells[a]))) * hn;
    }
    p.forced_in.assign(nf, 0);
    if (obstacle) {
        if (!obstacle->domain.same_layout(d))
            throw std::invalid_argument("obstacle domain does not match");
        for (std::size_t a = 0; a < nf; ++a)
            if (obstacle->in_set_flat(p.free_cells[a])) p.forced_in[a] = 1;
    }
    p.arc_count = nf * (nf - 1) / 2 + 2 * nf;
    return p;
}

MinimizerResult minimize(const CutProblem& p) {
    const KernelTable& k = *p.kernel;
    std::size_t nf = p.free_cells.size();
    int source = static_cast<int>(nf), sink = static_cast<int>(nf) + 1;
    MaxFlow g(static_cast<int>(nf) + 2);

    long long big = 0;
    std::vector<long long> caps_in(nf), caps_out(nf);
    for (std::size_t a = 0; a < nf; ++a) {
        double to_e = p.b_in[a];
        double to_ec = p.b_out[a];
        double bulk = p.gamma.empty() ? 0.0 : p.gamma[a];
        if (bulk >= 0.0)
            to_ec += bulk;
        else
            to_e += -bulk;
        caps_in[a] = to_cap(to_e, p.capacity_scale);
        caps_out[a] = to_cap(to_ec, p.capacity_scale);
        big += caps_in[a] + caps_out[a];
    }
    std::vector<std::vector<long long>> pair_caps(nf);
    for (std::size_t a = 0; a < nf; ++a) pair_caps[a].assign(nf - a, 0);
    parallel_for(0, nf, [&](std::size_t a) {
        for (std::size_t b = a + 1; b < nf; ++b) {
            double w = k.pair_weight_flat(p.free_cells[a], p.free_cells[b]);
            pair_caps[a][b - a] = to_cap(w, p.capacity_scale);
        }
    });
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = a + 1; b < nf; ++b) big += pair_caps[a][b - a];
    long long infinite = big + 1;

    for (std::size_t a = 0; a < nf; ++a) {
        long long src_cap = p.forced_in[a] ? infinite : caps_in[a];
        g.add_edge(source, static_cast<int>(a), src_cap);
        g.add_edge(static_cast<int>(a), sink, caps_out[a]);
    }
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = a + 1; b < nf; ++b) {
            long long c = pair_caps[a][b - a];
            g.add_edge(static_cast<int>(a), static_cast<int>(b), c, c);
        }

    MinimizerResult res;
    res.flow_value = g.solve(source, sink);
    std::vector<std::uint8_t> side = g.source_side(source);

    res.minimizer = p.boundary;
    std::vector<std::uint8_t> labels(nf, 0);
    for (std::size_t a = 0; a < nf; ++a) {
        labels[a] = side[a];
        res.minimizer.mask[p.free_cells[a]] = side[a];
    }
    res.quantization_bound = 0.5 * static_cast<double>(p.arc_count) / p.capacity_scale;
    res.energy = cut_objective(p, labels);

    // max-flow/min-cut duality: the cut recomputed from E* must equal the flow
    long long cut = 0;
    for (std::size_t a = 0; a < nf; ++a) {
        if (!labels[a]) cut += p.forced_in[a] ? infinite : caps_in[a];
        if (labels[a]) cut += caps_out[a];
        for (std::size_t b = a + 1; b < nf; ++b)
            if (labels[a] != labels[b]) cut += pair_caps[a][b - a];
    }
    if (cut != res.flow_value) throw std::logic_error("flow/cut duality check failed");
    return res;
}

double cut_objective(const CutProblem& p, const std::vector<std::uint8_t>& labels) {
    const KernelTable& k = *p.kernel;
    std::size_t nf = p.free_cells.size();
    if (labels.size() != nf) throw std::invalid_argument("label vector size mismatch");
    std::vector<double> terms;
    terms.reserve(nf + nf * 4);
    for (std::size_t a = 0; a < nf; ++a) {
        if (labels[a]) {
            terms.push_back(p.b_out[a]);
            if (!p.gamma.empty()) terms.push_back(p.gamma[a]);
        } else {
            terms.push_back(p.b_in[a]);
        }
        for (std::size_t b = a + 1; b < nf; ++b)
            if (labels[a] != labels[b])
                terms.push_back(k.pair_weight_flat(p.free_cells[a], p.free_cells[b]));
    }
    return pairwise_sum(terms);
}

std::pair<double, std::vector<std::uint8_t>> brute_force_minimum(const CutProblem& p) {
    std::size_t nf = p.free_cells.size();
    if (nf > 24) throw std::invalid_argument("brute force limited to 24 free cells");
    const KernelTable& k = *p.kernel;
    // local copies for the exhaustive scan
    std::vector<double> w(nf * nf, 0.0);
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = a + 1; b < nf; ++b)
            w[a * nf + b] = k.pair_weight_flat(p.free_cells[a], p.free_cells[b]);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    std::uint32_t lim = 1u << nf;
    std::uint32_t forced = 0;
    for (std::size_t a = 0; a < nf; ++a)
        if (p.forced_in[a]) forced |= (1u << a);
    for (std::uint32_t m = 0; m < lim; ++m) {
        if ((m & forced) != forced) continue;
        double v = 0.0;
        for (std::size_t a = 0; a < nf; ++a) {
            bool ina = m & (1u << a);
            if (ina) {
                v += p.b_out[a];
                if (!p.gamma.empty()) v += p.gamma[a];
            } else {
                v += p.b_in[a];
            }
            for (std::size_t b = a + 1; b < nf; ++b)
                if (ina != bool(m & (1u << b))) v += w[a * nf + b];
        }
        if (v < best) {
            best = v;
            best_mask = m;
        }
    }
    std::vector<std::uint8_t> labels(nf, 0);
    for (std::size_t a = 0; a < nf; ++a) labels[a] = bool(best_mask & (1u << a));
    return {best, labels};
}

bool maximum_principle_check(const MinimizerResult& result, const Window& omega,
                             const ExteriorDescriptor& plane) {
    if (plane.kind != ExteriorDescriptor::Kind::HalfSpace)
        throw std::invalid_argument("maximum principle check needs a half-space");
    const GridDomain& d = result.minimizer.domain;
    for (auto f : omega.cells) {
        Vec c = d.cell_center(d.unflat(f));
        if (plane.contains(c) && !result.minimizer.in_set_flat(f)) return false;
    }
    return true;
}

} // namespace fracmin
