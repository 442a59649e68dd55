#pragma once

#include "mtp/core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mtp {

// A dimension function. Power kind is coef * r^s (coef defaults to 1);
// tabulated kind interpolates log-linearly between (r, value) samples.
struct Gauge {
    enum class Kind { power, tabulated };
    Kind kind = Kind::power;
    double s = 1.0;
    double coef = 1.0;
    std::vector<std::pair<double, double>> samples;
    std::string description;

    static Gauge power(double s, double coef = 1.0);
    static Gauge tabulated(std::vector<std::pair<double, double>> samples);

    bool is_power() const { return kind == Kind::power; }
    double operator()(double r) const;
};

double eval_gauge(const Gauge& f, double r);

constexpr double kBisectTol = 1e-10;
constexpr int kBisectIter = 200;

// g^{-1}(y); closed form for the power kind, bisection otherwise.
double invert_gauge(const Gauge& g, double y, double tol = kBisectTol);

struct GaugePair {
    Gauge f, g;
    double kappa = 0.0;
    double lambda = 2.0;  // doubling constant of g
};

enum class RatioDirection { increasing_as_r_to_0, decreasing_as_r_to_0, constant };
std::string to_string(RatioDirection d);

struct GaugeReport {
    bool monotone_ok = true;
    double doubling_lambda_estimate = 0.0;
    RatioDirection ratio_direction = RatioDirection::constant;
    bool f_over_g_kappa_ok = true;
    std::vector<std::string> issues;
};

// Default certification grid: 64 log-spaced radii over [1e-6, 1].
std::vector<double> default_grid();

GaugeReport verify_gauge_pair(const GaugePair& p, const std::vector<double>& grid);
GaugeReport verify_gauge_pair(const GaugePair& p);

// Transformed radius g^{-1}((f(u)/g(u)^kappa)^{1/(1-kappa)}).
double mtp_radius(const GaugePair& p, double upsilon);

// (s - kappa n) / ((1 - kappa) n).
double power_transform_exponent(double s, double kappa, int n);

// h = f / g^kappa.
double h_gauge(const GaugePair& p, double r);

}  // namespace mtp
