#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracmin {

// Points and vectors live in a fixed-size array; the third component is
// ignored (and kept at zero) when the ambient dimension n is 2.
using Vec = std::array<double, 3>;
using Idx = std::array<int, 3>;

inline Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline Vec add(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec sub(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec scale(const Vec& a, double t) { return {a[0] * t, a[1] * t, a[2] * t}; }
inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(sub(a, b)); }

Vec normalized(const Vec& a);

// Analytic description of a set outside (or anywhere in) R^n. The
// `complement` flag negates membership, which keeps every kind closed
// under set complement.
struct ExteriorDescriptor {
    enum class Kind { Empty, Full, HalfSpace, Ball, Cone };

    Kind kind = Kind::Empty;
    Vec e{0, 0, 0};        // half_space unit normal / cone axis
    double c = 0.0;        // half_space offset: membership x.e < c
    Vec center{0, 0, 0};   // ball center / cone vertex
    double radius = 0.0;   // ball radius
    bool inside = true;    // ball: true = interior of the sphere
    double aperture = 0.0; // cone half-angle, in (0, pi)
    bool complement = false;

    static ExteriorDescriptor empty();
    static ExteriorDescriptor full();
    static ExteriorDescriptor half_space(const Vec& e, double c);
    static ExteriorDescriptor ball(const Vec& center, double radius, bool inside = true);
    static ExteriorDescriptor cone(const Vec& vertex, const Vec& axis, double aperture);

    bool contains(const Vec& x) const;
    ExteriorDescriptor complemented() const;
    ExteriorDescriptor dilated(double lambda) const;
    ExteriorDescriptor translated(const Vec& t) const;

    // Stable content hash used to key kernel-cache tail blocks.
    std::uint64_t hash() const;
    std::string describe() const;
};

// Closed axis-aligned box, the computational domain in R^n.
struct Box {
    Vec lo{0, 0, 0};
    Vec hi{0, 0, 0};
    int n = 2;

    bool contains(const Vec& x) const;
    double exit_radius(const Vec& p, const Vec& dir) const; // p strictly inside
};

// One maximal radial interval [r0, r1) along a ray; r1 may be +inf.
struct RaySegment {
    double r0;
    double r1;
};

// Radial segments of {p + t*dir : t > t_min} inside the descriptor set.
// Used by the tail quadrature: every descriptor kind admits a closed-form
// crossing computation, which is what makes exterior integrals radially
// quadrable.
std::vector<RaySegment> ray_segments(const ExteriorDescriptor& d, const Vec& p, const Vec& dir,
                                     double t_min, int n);

} // namespace fracmin
