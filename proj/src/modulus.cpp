#include "fracmin/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "fracmin/quad.hpp"

namespace fracmin {

using nlohmann::json;

namespace {

double default_m(int n, double s) { return n + s + 1.0; }

void check_common(double s, double delta, double m, int n) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("order s must be in (0,1)");
    if (!(delta >= 1.0)) throw std::invalid_argument("delta must be >= 1");
    if (!(m > n + s)) throw std::invalid_argument("m must exceed n + s");
}

} // namespace

Modulus Modulus::zero(double s, int n) {
    Modulus r;
    r.zero_ = true;
    r.s_ = s;
    r.m_ = default_m(n, s);
    r.delta_ = 1.0;
    check_common(s, r.delta_, r.m_, n);
    return r;
}

Modulus Modulus::power(double coeff, double alpha, double s, int n, double delta, double m) {
    Modulus r;
    r.zero_ = false;
    r.coeff_ = coeff;
    r.alpha_ = alpha;
    r.s_ = s;
    r.delta_ = delta;
    r.m_ = (m > 0.0) ? m : default_m(n, s);
    check_common(s, delta, r.m_, n);
    if (!(coeff > 0.0)) throw std::invalid_argument("power modulus needs positive coefficient");
    if (!(alpha > 0.0)) throw std::invalid_argument("power exponent must be positive");
    return r;
}

Modulus Modulus::table(std::vector<std::pair<double, double>> points, double s, int n, double delta,
                       double m) {
    Modulus r;
    r.zero_ = false;
    r.s_ = s;
    r.delta_ = delta;
    r.m_ = (m > 0.0) ? m : default_m(n, s);
    check_common(s, delta, r.m_, n);
    if (points.size() < 2) throw std::invalid_argument("table modulus needs at least two samples");
    std::sort(points.begin(), points.end());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
            throw std::invalid_argument("table samples must be positive");
        if (i > 0 && points[i].first == points[i - 1].first)
            throw std::invalid_argument("table samples must have distinct abscissae");
    }
    r.points_ = std::move(points);
    return r;
}

double Modulus::germ_exponent() const {
    double t0 = points_[0].first, t1 = points_[1].first;
    double v0 = points_[0].second, v1 = points_[1].second;
    return std::log(v1 / v0) / std::log(t1 / t0);
}

double Modulus::germ_coeff() const {
    return points_[0].second / std::pow(points_[0].first, germ_exponent());
}

double Modulus::eval(double t) const {
    if (zero_) return 0.0;
    if (!(t > 0.0 && t < delta_)) throw std::domain_error("modulus evaluated outside (0, delta)");
    if (is_power()) return coeff_ * std::pow(t, alpha_);
    if (t <= points_.front().first) return germ_coeff() * std::pow(t, germ_exponent());
    if (t >= points_.back().first) return points_.back().second;
    auto it = std::lower_bound(points_.begin(), points_.end(), std::make_pair(t, 0.0));
    auto lo = *(it - 1);
    auto hi = *it;
    double w = std::log(t / lo.first) / std::log(hi.first / lo.first);
    return std::exp((1.0 - w) * std::log(lo.second) + w * std::log(hi.second));
}

double Modulus::hat(double t) const {
    if (zero_) return 0.0;
    if (!(t > 0.0 && t < delta_)) throw std::domain_error("modulus evaluated outside (0, delta)");
    if (is_power()) return (s_ / alpha_) * std::pow(coeff_, 1.0 / m_) * std::pow(t, alpha_ / m_);
    double a0 = germ_exponent();
    if (!(a0 > 0.0)) throw std::runtime_error("A3 violated");
    // Germ part integrates in closed form; the sampled part by quadrature.
    double t_first = points_.front().first;
    double cut = std::min(t, t_first);
    double c0 = germ_coeff();
    double germ = std::pow(c0, 1.0 / m_) * (m_ / a0) * std::pow(cut, a0 / m_);
    double rest = 0.0;
    if (t > t_first) {
        rest = adaptive_integrate(
            [&](double z) { return std::pow(eval(z), 1.0 / m_) / z; }, t_first, t, 1e-10, 1e-14);
    }
    return (s_ / m_) * (germ + rest);
}

AssumptionReport Modulus::check_assumptions(int samples) const {
    if (samples < 2) throw std::invalid_argument("need at least two samples");
    AssumptionReport rep;
    if (zero_) {
        rep.a1 = rep.a2 = rep.a3_monotone = rep.a3_integral = true;
        return rep;
    }
    double tmax = delta_ * (1.0 - 1e-9);
    double tmin = tmax * 1e-6;
    std::vector<double> ts(samples);
    for (int i = 0; i < samples; ++i)
        ts[i] = tmin * std::pow(tmax / tmin, static_cast<double>(i) / (samples - 1));
    rep.a1 = true;
    rep.a3_monotone = true;
    double bound = 0.0;
    for (int i = 0; i < samples; ++i) {
        double v = eval(ts[i]);
        bound = std::max(bound, v);
        if (i > 0) {
            double prev = eval(ts[i - 1]);
            if (v < prev * (1.0 - 1e-12)) rep.a1 = false;
            double g_prev = std::pow(ts[i - 1], -s_) * prev;
            double g_cur = std::pow(ts[i], -s_) * v;
            if (g_cur > g_prev * (1.0 + 1e-12)) rep.a3_monotone = false;
        }
    }
    rep.a1 = rep.a1 && std::isfinite(bound);
    // A2 by log-log slope of the smallest samples.
    double slope = std::log(eval(ts[1]) / eval(ts[0])) / std::log(ts[1] / ts[0]);
    rep.a2 = slope > 1e-9 || eval(ts[0]) < 1e-14;
    // A3 integral by convergence of truncated quadratures.
    double upper = tmax;
    double prev_int = 0.0;
    bool converged = false;
    double eps = upper * 1e-2;
    for (int k = 0; k < 12; ++k) {
        double cur = adaptive_integrate(
            [&](double z) { return std::pow(eval(z), 1.0 / m_) / z; }, eps, upper, 1e-9, 1e-12);
        if (k > 0 && std::abs(cur - prev_int) <= 1e-7 * (1.0 + std::abs(cur))) {
            converged = true;
            break;
        }
        prev_int = cur;
        eps *= 0.1;
    }
    rep.a3_integral = converged || (is_power() ? alpha_ > 0.0 : germ_exponent() > 0.0);
    return rep;
}

std::string Modulus::to_json() const {
    json j;
    if (zero_) {
        j["form"] = "zero";
    } else if (is_power()) {
        j["form"] = "power";
        j["C"] = coeff_;
        j["alpha"] = alpha_;
    } else {
        j["form"] = "table";
        j["points"] = json::array();
        for (auto& p : points_) j["points"].push_back({p.first, p.second});
    }
    j["delta"] = delta_;
    j["m"] = m_;
    j["s"] = s_;
    return j.dump();
}

Modulus Modulus::from_json(const std::string& text, int n) {
    json j = json::parse(text);
    double s = j.at("s").get<double>();
    double delta = j.value("delta", 1.0);
    double m = j.value("m", 0.0);
    std::string form = j.at("form").get<std::string>();
    if (form == "zero") {
        Modulus r = Modulus::zero(s, n);
        return r;
    }
    if (form == "power")
        return Modulus::power(j.at("C").get<double>(), j.at("alpha").get<double>(), s, n, delta, m);
    if (form == "table") {
        std::vector<std::pair<double, double>> pts;
        for (auto& p : j.at("points")) pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        return Modulus::table(std::move(pts), s, n, delta, m);
    }
    throw std::invalid_argument("unknown modulus form: " + form);
}

} // namespace fracmin
