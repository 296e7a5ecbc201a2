#include "fracmin/geom.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>

namespace fracmin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_double(std::uint64_t h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    return fnv1a(h, &bits, sizeof(bits));
}

// Intersect sorted disjoint segments with [t_min, inf) and drop empty ones.
std::vector<RaySegment> clip_segments(std::vector<RaySegment> segs, double t_min) {
    std::vector<RaySegment> out;
    for (auto& s : segs) {
        double a = std::max(s.r0, t_min);
        if (a < s.r1) out.push_back({a, s.r1});
    }
    return out;
}

std::vector<RaySegment> complement_segments(const std::vector<RaySegment>& segs, double t_min) {
    std::vector<RaySegment> out;
    double cur = t_min;
    for (const auto& s : segs) {
        if (s.r0 > cur) out.push_back({cur, s.r0});
        cur = std::max(cur, s.r1);
    }
    if (cur < kInf) out.push_back({cur, kInf});
    return out;
}

} // namespace

Vec normalized(const Vec& a) {
    double m = norm(a);
    if (m <= 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return scale(a, 1.0 / m);
}

ExteriorDescriptor ExteriorDescriptor::empty() {
    ExteriorDescriptor d;
    d.kind = Kind::Empty;
    return d;
}

ExteriorDescriptor ExteriorDescriptor::full() {
    ExteriorDescriptor d;
    d.kind = Kind::Full;
    return d;
}

ExteriorDescriptor ExteriorDescriptor::half_space(const Vec& e, double c) {
    ExteriorDescriptor d;
    d.kind = Kind::HalfSpace;
    if (std::abs(norm(e) - 1.0) > 1e-12) throw std::invalid_argument("half_space normal must be unit");
    d.e = e;
    d.c = c;
    return d;
}

ExteriorDescriptor ExteriorDescriptor::ball(const Vec& center, double radius, bool inside) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    ExteriorDescriptor d;
    d.kind = Kind::Ball;
    d.center = center;
    d.radius = radius;
    d.inside = inside;
    return d;
}

ExteriorDescriptor ExteriorDescriptor::cone(const Vec& vertex, const Vec& axis, double aperture) {
    if (!(aperture > 0.0 && aperture < M_PI)) throw std::invalid_argument("cone aperture must be in (0, pi)");
    ExteriorDescriptor d;
    d.kind = Kind::Cone;
    d.center = vertex;
    d.e = normalized(axis);
    d.aperture = aperture;
    return d;
}

bool ExteriorDescriptor::contains(const Vec& x) const {
    bool in = false;
    switch (kind) {
    case Kind::Empty: in = false; break;
    case Kind::Full: in = true; break;
    case Kind::HalfSpace: in = dot(x, e) < c; break;
    case Kind::Ball: {
        bool inball = dist(x, center) < radius;
        in = inside ? inball : !inball;
        break;
    }
    case Kind::Cone: {
        Vec u = sub(x, center);
        double m = norm(u);
        if (m == 0.0) {
            in = true;
        } else {
            in = dot(u, e) >= m * std::cos(aperture);
        }
        break;
    }
    }
    return complement ? !in : in;
}

ExteriorDescriptor ExteriorDescriptor::complemented() const {
    ExteriorDescriptor d = *this;
    switch (kind) {
    case Kind::Empty: d.kind = Kind::Full; break;
    case Kind::Full: d.kind = Kind::Empty; break;
    case Kind::Ball: d.inside = !inside; break;
    case Kind::HalfSpace:
        d.e = scale(e, -1.0);
        d.c = -c;
        break;
    case Kind::Cone: d.complement = !complement; break;
    }
    return d;
}

ExteriorDescriptor ExteriorDescriptor::dilated(double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
    ExteriorDescriptor d = *this;
    d.c = c * lambda;
    d.center = scale(center, lambda);
    d.radius = radius * lambda;
    return d;
}

ExteriorDescriptor ExteriorDescriptor::translated(const Vec& t) const {
    ExteriorDescriptor d = *this;
    d.c = c + dot(e, t);
    d.center = add(center, t);
    return d;
}

std::uint64_t ExteriorDescriptor::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    int k = static_cast<int>(kind);
    h = fnv1a(h, &k, sizeof(k));
    for (double v : e) h = hash_double(h, v);
    h = hash_double(h, c);
    for (double v : center) h = hash_double(h, v);
    h = hash_double(h, radius);
    int fl = (inside ? 1 : 0) | (complement ? 2 : 0);
    h = fnv1a(h, &fl, sizeof(fl));
    h = hash_double(h, aperture);
    return h;
}

std::string ExteriorDescriptor::describe() const {
    std::ostringstream os;
    if (complement) os << "not-";
    switch (kind) {
    case Kind::Empty: os << "empty"; break;
    case Kind::Full: os << "full"; break;
    case Kind::HalfSpace:
        os << "half_space:" << e[0] << "," << e[1] << "," << e[2] << ":" << c;
        break;
    case Kind::Ball:
        os << "ball:" << center[0] << "," << center[1] << "," << center[2] << ":" << radius
           << (inside ? ":in" : ":out");
        break;
    case Kind::Cone:
        os << "cone:" << center[0] << "," << center[1] << "," << center[2] << ":" << e[0] << ","
           << e[1] << "," << e[2] << ":" << aperture;
        break;
    }
    return os.str();
}

bool Box::contains(const Vec& x) const {
    for (int k = 0; k < n; ++k)
        if (x[k] < lo[k] || x[k] > hi[k]) return false;
    return true;
}

double Box::exit_radius(const Vec& p, const Vec& dir) const {
    double t = kInf;
    for (int k = 0; k < n; ++k) {
        if (dir[k] > 0.0)
            t = std::min(t, (hi[k] - p[k]) / dir[k]);
        else if (dir[k] < 0.0)
            t = std::min(t, (lo[k] - p[k]) / dir[k]);
    }
    return std::max(t, 0.0);
}

std::vector<RaySegment> ray_segments(const ExteriorDescriptor& desc, const Vec& p, const Vec& dir,
                                     double t_min, int n) {
    ExteriorDescriptor d = desc;
    d.complement = false;
    std::vector<RaySegment> segs;
    switch (d.kind) {
    case ExteriorDescriptor::Kind::Empty:
        break;
    case ExteriorDescriptor::Kind::Full:
        segs.push_back({t_min, kInf});
        break;
    case ExteriorDescriptor::Kind::HalfSpace: {
        double de = dot(dir, d.e);
        double pe = dot(p, d.e);
        if (std::abs(de) < 1e-300) {
            if (pe < d.c) segs.push_back({t_min, kInf});
        } else {
            double t = (d.c - pe) / de;
            if (de > 0.0) {
                if (t > t_min) segs.push_back({t_min, t});
            } else {
                segs.push_back({std::max(t_min, t), kInf});
            }
        }
        break;
    }
    case ExteriorDescriptor::Kind::Ball: {
        Vec w = sub(p, d.center);
        double b = dot(w, dir);
        double c0 = dot(w, w) - d.radius * d.radius;
        double disc = b * b - c0;
        std::vector<RaySegment> in;
        if (disc > 0.0) {
            double sq = std::sqrt(disc);
            double tlo = -b - sq, thi = -b + sq;
            if (thi > 0.0) in.push_back({std::max(tlo, 0.0), thi});
        }
        segs = d.inside ? clip_segments(in, t_min) : complement_segments(clip_segments(in, 0.0), t_min);
        break;
    }
    case ExteriorDescriptor::Kind::Cone: {
        // Boundary crossings satisfy (u.a)^2 = cos^2(alpha) |u|^2 along the
        // ray u(t) = w + t dir; collect candidate roots, then classify each
        // subinterval with the exact predicate at its midpoint.
        Vec w = sub(p, d.center);
        double ca = std::cos(d.aperture);
        double da = dot(dir, d.e), wa = dot(w, d.e);
        double wd = dot(w, dir), ww = dot(w, w);
        double A = da * da - ca * ca;
        double B = 2.0 * (wa * da - ca * ca * wd);
        double C = wa * wa - ca * ca * ww;
        std::vector<double> cand{t_min};
        auto push = [&](double t) {
            if (std::isfinite(t) && t > t_min) cand.push_back(t);
        };
        if (std::abs(A) > 1e-14 * (1.0 + ca * ca)) {
            double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                double sq = std::sqrt(disc);
                push((-B - sq) / (2.0 * A));
                push((-B + sq) / (2.0 * A));
            }
        } else if (std::abs(B) > 1e-300) {
            push(-C / B);
        }
        push(-wd); // closest approach to the vertex
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        double far_t = 2.0 * (std::abs(wd) + std::sqrt(ww) + 1.0) + 4.0 * cand.back();
        const ExteriorDescriptor& plain = d;
        std::vector<RaySegment> in;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            double a = cand[i];
            double b2 = (i + 1 < cand.size()) ? cand[i + 1] : kInf;
            double mid = (i + 1 < cand.size()) ? 0.5 * (a + b2) : far_t;
            if (plain.contains(add(p, scale(dir, mid)))) {
                if (!in.empty() && in.back().r1 == a)
                    in.back().r1 = b2;
                else
                    in.push_back({a, b2});
            }
        }
        segs = in;
        break;
    }
    }
    if (desc.complement) segs = complement_segments(segs, t_min);
    (void)n;
    return segs;
}

} // namespace fracmin
