#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fracmin/modulus.hpp"

using namespace fracmin;

TEST_CASE("power and table evaluation") {
    Modulus p = Modulus::power(1.0, 0.25, 0.5, 2);
    CHECK(p.eval(0.5) == doctest::Approx(std::pow(0.5, 0.25)).epsilon(1e-14));
    Modulus z = Modulus::zero(0.5, 2);
    CHECK(z.eval(0.37) == 0.0);
    Modulus t = Modulus::table({{0.1, 0.01}, {1.0, 0.1}}, 0.5, 2, 1.5);
    CHECK(t.eval(std::sqrt(0.1)) == doctest::Approx(std::pow(10.0, -1.5)).epsilon(1e-12));
    CHECK_THROWS(p.eval(0.0));
    CHECK_THROWS(p.eval(1.0));
}

TEST_CASE("rho_hat closed forms for power moduli") {
    Modulus p = Modulus::power(1.0, 0.25, 0.5, 2, 1.5, 3.0);
    CHECK(p.hat(1.0) == doctest::Approx(2.0).epsilon(1e-14));
    Modulus q = Modulus::power(1.0, 0.5, 0.5, 2, 1.5, 3.0);
    CHECK(q.hat(0.8) == doctest::Approx(std::pow(0.8, 0.5 / 3.0)).epsilon(1e-14));
    Modulus z = Modulus::zero(0.5, 2);
    CHECK(z.hat(0.7) == 0.0);
}

TEST_CASE("table rho_hat by quadrature matches the power closed form") {
    // sampling a power law on a log grid makes log-linear interpolation exact
    double C = 2.0, alpha = 0.3, s = 0.5, m = 3.51;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 24; ++i) {
        double t = 1e-3 * std::pow(1e3 * 0.999, i / 24.0);
        pts.push_back({t, C * std::pow(t, alpha)});
    }
    Modulus tab = Modulus::table(pts, s, 2, 1.0, m);
    Modulus pw = Modulus::power(C, alpha, s, 2, 1.0, m);
    for (double t : {0.2, 0.5, 0.9})
        CHECK(tab.hat(t) == doctest::Approx(pw.hat(t)).epsilon(1e-9));
}

TEST_CASE("assumption checker verdicts") {
    CHECK(Modulus::power(2.0, 0.3, 0.5, 2).check_assumptions(64).all());
    auto bad = Modulus::power(1.0, 0.9, 0.5, 2).check_assumptions(64);
    CHECK(bad.a1);
    CHECK(bad.a2);
    CHECK(!bad.a3_monotone);
    CHECK(Modulus::zero(0.5, 2).check_assumptions(8).all());
}

TEST_CASE("doubling bound rho(t e)^{1/m} <= rho_hat(t)") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Modulus> mods;
    mods.push_back(Modulus::power(1.0, 0.25, 0.5, 2, 1.5, 3.0));
    mods.push_back(Modulus::power(3.0, 0.5, 0.5, 2, 2.0, 4.0));
    mods.push_back(Modulus::power(0.2, 0.1, 0.3, 2));
    {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i <= 16; ++i) {
            double t = 1e-3 * std::pow(999.0, i / 16.0);
            pts.push_back({t, 0.7 * std::pow(t, 0.35)});
        }
        mods.push_back(Modulus::table(pts, 0.6, 2, 1.0, 4.0));
    }
    for (const auto& rho : mods) {
        int violations = 0;
        for (int k = 0; k < 10000; ++k) {
            double t = uni(rng) * (rho.delta() - 1e-9);
            if (t <= 1e-12) continue;
            double eps = std::max(uni(rng), 1e-12);
            double lhs = std::pow(rho.eval(t * eps), 1.0 / rho.m());
            double rhs = rho.hat(t);
            if (lhs > rhs * (1.0 + 1e-12)) ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("rho_hat is non-decreasing and vanishes at zero") {
    Modulus p = Modulus::power(2.5, 0.4, 0.6, 2);
    double prev = 0.0;
    for (double t = 1e-6; t < 1.0; t *= 4.0) {
        double v = p.hat(t);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(p.hat(1e-12) < 0.5 * p.hat(0.99)); // decays like t^{alpha/m}
}

TEST_CASE("json round trip") {
    Modulus p = Modulus::power(1.5, 0.25, 0.5, 2, 2.0, 4.0);
    Modulus r = Modulus::from_json(p.to_json(), 2);
    CHECK(r.eval(0.3) == p.eval(0.3));
    CHECK(r.hat(0.3) == p.hat(0.3));
    Modulus t = Modulus::table({{0.1, 0.01}, {1.0, 0.1}}, 0.5, 2, 1.5);
    Modulus rt = Modulus::from_json(t.to_json(), 2);
    CHECK(rt.eval(0.5) == t.eval(0.5));
}

TEST_CASE("invalid moduli are rejected") {
    CHECK_THROWS(Modulus::power(1.0, 0.25, 0.5, 2, 0.5)); // delta < 1
    CHECK_THROWS(Modulus::power(1.0, 0.25, 0.5, 2, 1.0, 2.0)); // m <= n+s
    CHECK_THROWS(Modulus::power(-1.0, 0.25, 0.5, 2));
    CHECK_THROWS(Modulus::table({{0.1, 0.01}}, 0.5, 2));
}
