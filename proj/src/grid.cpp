#include "fracmin/grid.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fracmin {

using nlohmann::json;

GridDomain::GridDomain(int n_, Idx dims_, double h_, Vec origin_)
    : n(n_), dims(dims_), h(h_), origin(origin_) {
    if (n != 2 && n != 3) throw std::invalid_argument("dimension must be 2 or 3");
    if (!(h > 0.0)) throw std::invalid_argument("cell size must be positive");
    for (int k = 0; k < n; ++k)
        if (dims[k] < 1) throw std::invalid_argument("dims must be >= 1");
    if (n == 2) dims[2] = 1;
}

std::size_t GridDomain::cell_count() const {
    std::size_t c = 1;
    for (int k = 0; k < n; ++k) c *= static_cast<std::size_t>(dims[k]);
    return c;
}

std::size_t GridDomain::flat(const Idx& i) const {
    std::size_t f = static_cast<std::size_t>(i[0]);
    std::size_t stride = static_cast<std::size_t>(dims[0]);
    f += static_cast<std::size_t>(i[1]) * stride;
    if (n == 3) f += static_cast<std::size_t>(i[2]) * stride * static_cast<std::size_t>(dims[1]);
    return f;
}

Idx GridDomain::unflat(std::size_t f) const {
    Idx i{0, 0, 0};
    i[0] = static_cast<int>(f % static_cast<std::size_t>(dims[0]));
    f /= static_cast<std::size_t>(dims[0]);
    i[1] = static_cast<int>(f % static_cast<std::size_t>(dims[1]));
    if (n == 3) i[2] = static_cast<int>(f / static_cast<std::size_t>(dims[1]));
    return i;
}

Vec GridDomain::cell_center(const Idx& i) const {
    Vec c{0, 0, 0};
    for (int k = 0; k < n; ++k) c[k] = origin[k] + h * (i[k] + 0.5);
    return c;
}

Vec GridDomain::cell_low(const Idx& i) const {
    Vec c{0, 0, 0};
    for (int k = 0; k < n; ++k) c[k] = origin[k] + h * i[k];
    return c;
}

bool GridDomain::in_bounds(const Idx& i) const {
    for (int k = 0; k < n; ++k)
        if (i[k] < 0 || i[k] >= dims[k]) return false;
    return true;
}

Box GridDomain::box() const {
    Box b;
    b.n = n;
    b.lo = origin;
    for (int k = 0; k < n; ++k) b.hi[k] = origin[k] + h * dims[k];
    return b;
}

bool GridDomain::same_layout(const GridDomain& o) const {
    if (n != o.n || h != o.h) return false;
    for (int k = 0; k < n; ++k)
        if (dims[k] != o.dims[k] || origin[k] != o.origin[k]) return false;
    return true;
}

CellSet::CellSet(GridDomain d, ExteriorDescriptor ext)
    : domain(d), mask(d.cell_count(), 0), exterior(ext) {}

std::size_t CellSet::count() const {
    std::size_t c = 0;
    for (auto v : mask) c += v;
    return c;
}

CellSet CellSet::complemented() const {
    CellSet out(domain, exterior.complemented());
    for (std::size_t f = 0; f < mask.size(); ++f) out.mask[f] = mask[f] ? 0 : 1;
    return out;
}

namespace {

template <typename Pred>
CellSet rasterize_pred(const Pred& pred, const GridDomain& domain, const ExteriorDescriptor& ext,
                       RasterRule rule) {
    CellSet out(domain, ext);
    std::size_t count = domain.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        Idx i = domain.unflat(f);
        bool in;
        if (rule == RasterRule::Center) {
            in = pred(domain.cell_center(i));
        } else {
            int corners = 1 << domain.n;
            int hits = 0;
            Vec low = domain.cell_low(i);
            for (int c = 0; c < corners; ++c) {
                Vec p = low;
                for (int k = 0; k < domain.n; ++k)
                    if (c & (1 << k)) p[k] += domain.h;
                if (pred(p)) ++hits;
            }
            in = 2 * hits >= corners;
        }
        out.mask[f] = in ? 1 : 0;
    }
    return out;
}

} // namespace

CellSet rasterize(const ExteriorDescriptor& shape, const GridDomain& domain, RasterRule rule) {
    return rasterize_pred([&](const Vec& p) { return shape.contains(p); }, domain, shape, rule);
}

CellSet rasterize_subgraph(const std::function<double(const Vec&)>& u, const GridDomain& domain,
                           const ExteriorDescriptor& exterior, RasterRule rule) {
    if (!u) throw std::invalid_argument("shape-domain mismatch");
    int last = domain.n - 1;
    return rasterize_pred([&](const Vec& p) { return p[last] < u(p); }, domain, exterior, rule);
}

double symmetric_difference_measure(const CellSet& e, const CellSet& f) {
    if (!e.domain.same_layout(f.domain) || e.exterior.hash() != f.exterior.hash())
        throw std::invalid_argument("symmetric difference requires matching domain and exterior");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < e.mask.size(); ++i)
        if (e.mask[i] != f.mask[i]) ++diff;
    return static_cast<double>(diff) * std::pow(e.domain.h, e.domain.n);
}

CellSet rescale(const CellSet& e, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("rescale factor must be positive");
    CellSet out = e;
    out.domain.h = e.domain.h * lambda;
    out.domain.origin = scale(e.domain.origin, lambda);
    out.exterior = e.exterior.dilated(lambda);
    return out;
}

CellSet translate(const CellSet& e, const Vec& t) {
    CellSet out = e;
    out.domain.origin = add(e.domain.origin, t);
    out.exterior = e.exterior.translated(t);
    return out;
}

std::vector<BoundaryFace> boundary_faces(const CellSet& e) {
    std::vector<BoundaryFace> faces;
    const GridDomain& d = e.domain;
    std::size_t count = d.cell_count();
    for (std::size_t f = 0; f < count; ++f) {
        if (!e.mask[f]) continue;
        Idx i = d.unflat(f);
        Vec c = d.cell_center(i);
        for (int k = 0; k < d.n; ++k) {
            for (int dir = -1; dir <= 1; dir += 2) {
                Idx j = i;
                j[k] += dir;
                bool neighbor_in;
                if (d.in_bounds(j)) {
                    neighbor_in = e.in_set(j);
                } else {
                    Vec p = c;
                    p[k] += dir * d.h;
                    neighbor_in = e.exterior.contains(p);
                }
                if (!neighbor_in) {
                    BoundaryFace bf;
                    bf.midpoint = c;
                    bf.midpoint[k] += dir * 0.5 * d.h;
                    bf.axis = k;
                    bf.inside_cell = i;
                    bf.outward = dir > 0;
                    faces.push_back(bf);
                }
            }
        }
    }
    return faces;
}

namespace {

json exterior_to_json(const ExteriorDescriptor& d) {
    json j;
    switch (d.kind) {
    case ExteriorDescriptor::Kind::Empty: j["kind"] = "empty"; break;
    case ExteriorDescriptor::Kind::Full: j["kind"] = "full"; break;
    case ExteriorDescriptor::Kind::HalfSpace:
        j["kind"] = "half_space";
        j["e"] = {d.e[0], d.e[1], d.e[2]};
        j["c"] = d.c;
        break;
    case ExteriorDescriptor::Kind::Ball:
        j["kind"] = "ball";
        j["center"] = {d.center[0], d.center[1], d.center[2]};
        j["radius"] = d.radius;
        j["inside"] = d.inside;
        break;
    case ExteriorDescriptor::Kind::Cone:
        j["kind"] = "cone";
        j["vertex"] = {d.center[0], d.center[1], d.center[2]};
        j["axis"] = {d.e[0], d.e[1], d.e[2]};
        j["aperture"] = d.aperture;
        break;
    }
    if (d.complement) j["complement"] = true;
    return j;
}

Vec json_to_vec(const json& j) {
    Vec v{0, 0, 0};
    for (std::size_t k = 0; k < j.size() && k < 3; ++k) v[k] = j[k].get<double>();
    return v;
}

ExteriorDescriptor exterior_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    ExteriorDescriptor d;
    if (kind == "empty") {
        d = ExteriorDescriptor::empty();
    } else if (kind == "full") {
        d = ExteriorDescriptor::full();
    } else if (kind == "half_space") {
        d = ExteriorDescriptor::half_space(json_to_vec(j.at("e")), j.at("c").get<double>());
    } else if (kind == "ball") {
        d = ExteriorDescriptor::ball(json_to_vec(j.at("center")), j.at("radius").get<double>(),
                                     j.value("inside", true));
    } else if (kind == "cone") {
        d = ExteriorDescriptor::cone(json_to_vec(j.at("vertex")), json_to_vec(j.at("axis")),
                                     j.at("aperture").get<double>());
    } else {
        throw std::invalid_argument("unknown exterior kind: " + kind);
    }
    d.complement = j.value("complement", false);
    return d;
}

} // namespace

void save_cellset_json(const CellSet& e, const std::string& path) {
    json j;
    j["n"] = e.domain.n;
    j["dims"] = json::array();
    for (int k = 0; k < e.domain.n; ++k) j["dims"].push_back(e.domain.dims[k]);
    j["h"] = e.domain.h;
    j["origin"] = json::array();
    for (int k = 0; k < e.domain.n; ++k) j["origin"].push_back(e.domain.origin[k]);
    j["exterior"] = exterior_to_json(e.exterior);
    // Runs alternate out/in counts, starting with out.
    std::vector<std::size_t> runs;
    std::uint8_t cur = 0;
    std::size_t len = 0;
    for (auto v : e.mask) {
        if (v == cur) {
            ++len;
        } else {
            runs.push_back(len);
            cur = v;
            len = 1;
        }
    }
    runs.push_back(len);
    j["mask"] = {{"encoding", "rle"}, {"runs", runs}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

CellSet load_cellset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    int n = j.at("n").get<int>();
    Idx dims{1, 1, 1};
    for (std::size_t k = 0; k < j.at("dims").size(); ++k) dims[k] = j["dims"][k].get<int>();
    Vec origin{0, 0, 0};
    for (std::size_t k = 0; k < j.at("origin").size(); ++k) origin[k] = j["origin"][k].get<double>();
    GridDomain d(n, dims, j.at("h").get<double>(), origin);
    CellSet e(d, exterior_from_json(j.at("exterior")));
    if (j.at("mask").at("encoding").get<std::string>() != "rle")
        throw std::runtime_error("unsupported mask encoding");
    std::size_t pos = 0;
    std::uint8_t cur = 0;
    for (const auto& r : j["mask"]["runs"]) {
        std::size_t len = r.get<std::size_t>();
        if (pos + len > e.mask.size()) throw std::runtime_error("mask runs exceed cell count");
        for (std::size_t i = 0; i < len; ++i) e.mask[pos + i] = cur;
        pos += len;
        cur = cur ? 0 : 1;
    }
    if (pos != e.mask.size()) throw std::runtime_error("mask runs do not cover cell count");
    return e;
}

void save_grid_text(const CellSet& e, const std::string& path) {
    if (e.domain.n != 2) throw std::invalid_argument(".grid format is n=2 only");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "n=2 dims=" << e.domain.dims[0] << "," << e.domain.dims[1] << " h=" << e.domain.h
        << " origin=" << e.domain.origin[0] << "," << e.domain.origin[1]
        << " exterior=" << e.exterior.describe() << "\n";
    for (int jrow = 0; jrow < e.domain.dims[1]; ++jrow) {
        for (int i = 0; i < e.domain.dims[0]; ++i) out << (e.in_set({i, jrow, 0}) ? '1' : '0');
        out << "\n";
    }
}

CellSet load_grid_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string tok;
    Idx dims{1, 1, 1};
    double h = 1.0;
    Vec origin{0, 0, 0};
    ExteriorDescriptor ext = ExteriorDescriptor::empty();
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "dims") {
            std::sscanf(val.c_str(), "%d,%d", &dims[0], &dims[1]);
        } else if (key == "h") {
            h = std::stod(val);
        } else if (key == "origin") {
            std::sscanf(val.c_str(), "%lf,%lf", &origin[0], &origin[1]);
        } else if (key == "exterior") {
            // kind:params with comma-separated numbers
            std::vector<std::string> parts;
            std::istringstream vs(val);
            std::string p;
            while (std::getline(vs, p, ':')) parts.push_back(p);
            auto nums = [&](const std::string& s) {
                std::vector<double> out_nums;
                std::istringstream ns(s);
                std::string q;
                while (std::getline(ns, q, ',')) out_nums.push_back(std::stod(q));
                return out_nums;
            };
            if (parts.empty() || parts[0] == "empty") {
                ext = ExteriorDescriptor::empty();
            } else if (parts[0] == "full") {
                ext = ExteriorDescriptor::full();
            } else if (parts[0] == "half_space" && parts.size() >= 3) {
                auto e = nums(parts[1]);
                ext = ExteriorDescriptor::half_space({e[0], e[1], e.size() > 2 ? e[2] : 0.0},
                                                     std::stod(parts[2]));
            } else if (parts[0] == "ball" && parts.size() >= 3) {
                auto c = nums(parts[1]);
                ext = ExteriorDescriptor::ball({c[0], c[1], c.size() > 2 ? c[2] : 0.0},
                                               std::stod(parts[2]),
                                               parts.size() < 4 || parts[3] == "in");
            } else {
                throw std::runtime_error("unsupported exterior in .grid header: " + val);
            }
        }
    }
    GridDomain d(2, dims, h, origin);
    CellSet e(d, ext);
    for (int jrow = 0; jrow < dims[1]; ++jrow) {
        std::string row;
        if (!std::getline(in, row)) throw std::runtime_error("truncated .grid file");
        if (static_cast<int>(row.size()) < dims[0]) throw std::runtime_error("short row in .grid file");
        for (int i = 0; i < dims[0]; ++i) e.set({i, jrow, 0}, row[i] == '1');
    }
    return e;
}

} // namespace fracmin
