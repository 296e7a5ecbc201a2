#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fracmin {

struct AssumptionReport {
    bool a1 = false;          // non-decreasing and bounded
    bool a2 = false;          // rho(t) -> 0 as t -> 0
    bool a3_monotone = false; // t^{-s} rho(t) non-increasing
    bool a3_integral = false; // int_0^delta z^{-1} rho(z)^{1/m} dz finite
    bool all() const { return a1 && a2 && a3_monotone && a3_integral; }
};

// Almost-minimality modulus rho with its auxiliary transform
// rho_hat(t) = (s/m) int_0^t z^{-1} rho(z)^{1/m} dz.
class Modulus {
  public:
    static Modulus zero(double s, int n);
    static Modulus power(double coeff, double alpha, double s, int n, double delta = 1.0,
                         double m = 0.0);
    static Modulus table(std::vector<std::pair<double, double>> points, double s, int n,
                         double delta = 1.0, double m = 0.0);

    bool is_zero() const { return zero_; }
    bool is_power() const { return !zero_ && points_.empty(); }
    double s() const { return s_; }
    double m() const { return m_; }
    double delta() const { return delta_; }
    double coeff() const { return coeff_; }
    double alpha() const { return alpha_; }
    const std::vector<std::pair<double, double>>& points() const { return points_; }

    double eval(double t) const;
    double hat(double t) const;
    AssumptionReport check_assumptions(int samples) const;

    std::string to_json() const;
    static Modulus from_json(const std::string& text, int n);

  private:
    Modulus() = default;
    double germ_exponent() const; // power-law exponent below the first table sample
    double germ_coeff() const;

    bool zero_ = true;
    double coeff_ = 0.0;
    double alpha_ = 0.0;
    std::vector<std::pair<double, double>> points_; // log-linear samples, increasing t
    double s_ = 0.5;
    double m_ = 0.0;
    double delta_ = 1.0;
};

} // namespace fracmin
