#include "mtp/dimfun.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mtp {

Gauge Gauge::power(double s, double coef) {
    if (!(s >= 0.0) || !(coef > 0.0)) throw ArgumentError("power gauge needs s >= 0 and coef > 0");
    Gauge g;
    g.kind = Kind::power;
    g.s = s;
    g.coef = coef;
    std::ostringstream os;
    if (coef != 1.0) os << coef << "*";
    os << "r^" << s;
    g.description = os.str();
    return g;
}

Gauge Gauge::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) throw ArgumentError("tabulated gauge needs at least 2 samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].first > 0.0) || !(samples[i].second > 0.0))
            throw ArgumentError("tabulated gauge samples must be positive");
        if (i > 0 && !(samples[i].first > samples[i - 1].first))
            throw ArgumentError("tabulated gauge radii must be strictly increasing");
        if (i > 0 && samples[i].second < samples[i - 1].second)
            throw ArgumentError("tabulated gauge values must be non-decreasing");
    }
    Gauge g;
    g.kind = Kind::tabulated;
    g.samples = std::move(samples);
    g.description = "tabulated(" + std::to_string(g.samples.size()) + " samples)";
    return g;
}

double Gauge::operator()(double r) const {
    if (!(r > 0.0)) throw DomainError("gauge evaluated at non-positive radius");
    if (kind == Kind::power) return coef * std::pow(r, s);
    const auto& t = samples;
    const double rel = 1e-12;
    if (r < t.front().first * (1 - rel) || r > t.back().first * (1 + rel))
        throw RangeError("radius outside tabulated gauge hull");
    if (r <= t.front().first) return t.front().second;
    if (r >= t.back().first) return t.back().second;
    auto it = std::upper_bound(t.begin(), t.end(), r,
                               [](double x, const auto& p) { return x < p.first; });
    const auto& [r1, v1] = *(it - 1);
    const auto& [r2, v2] = *it;
    double w = (std::log(r) - std::log(r1)) / (std::log(r2) - std::log(r1));
    return std::exp(std::log(v1) + w * (std::log(v2) - std::log(v1)));
}

double eval_gauge(const Gauge& f, double r) { return f(r); }

double invert_gauge(const Gauge& g, double y, double tol) {
    if (!(y > 0.0) || !(tol > 0.0)) throw DomainError("invert_gauge needs y > 0 and tol > 0");
    if (g.is_power()) {
        if (g.s == 0.0) {
            if (std::abs(y - g.coef) <= tol * y) return 1.0;
            throw RangeError("constant gauge cannot be inverted at this value");
        }
        return std::pow(y / g.coef, 1.0 / g.s);
    }
    double lo = g.samples.front().first, hi = g.samples.back().first;
    if (y < g(lo) * (1 - tol) || y > g(hi) * (1 + tol)) throw RangeError("value outside gauge range");
    // Bisection in log r keeps relative accuracy across decades.
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < kBisectIter; ++it) {
        double mid = 0.5 * (a + b);
        double v = g(std::exp(mid));
        if (std::abs(v - y) <= tol * y) return std::exp(mid);
        if (v < y)
            a = mid;
        else
            b = mid;
    }
    return std::exp(0.5 * (a + b));
}

std::string to_string(RatioDirection d) {
    switch (d) {
        case RatioDirection::increasing_as_r_to_0: return "increasing_as_r_to_0";
        case RatioDirection::decreasing_as_r_to_0: return "decreasing_as_r_to_0";
        default: return "constant";
    }
}

std::vector<double> default_grid() { return logspace(1e-6, 1.0, 64); }

GaugeReport verify_gauge_pair(const GaugePair& p, const std::vector<double>& grid) {
    if (grid.empty()) throw ArgumentError("verify_gauge_pair: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ArgumentError("verify_gauge_pair: grid must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ArgumentError("verify_gauge_pair: grid must be sorted");
    }
    if (!(p.kappa >= 0.0 && p.kappa < 1.0)) throw ArgumentError("kappa must lie in [0,1)");
    const double rel = 1e-9;
    GaugeReport rep;
    auto non_decreasing = [&](auto fn, const char* name) {
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double a = fn(grid[i - 1]), b = fn(grid[i]);
            if (a > b * (1 + rel)) {
                rep.issues.push_back(std::string(name) + " decreases near r=" + std::to_string(grid[i]));
                return false;
            }
        }
        return true;
    };
    bool f_ok = non_decreasing([&](double r) { return p.f(r); }, "f");
    bool g_ok = non_decreasing([&](double r) { return p.g(r); }, "g");

    // f/g must be monotone in one direction across the grid.
    int up = 0, down = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double a = p.f(grid[i - 1]) / p.g(grid[i - 1]);
        double b = p.f(grid[i]) / p.g(grid[i]);
        if (a > b * (1 + rel)) ++up;
        if (b > a * (1 + rel)) ++down;
    }
    bool ratio_ok = !(up > 0 && down > 0);
    if (!ratio_ok) rep.issues.push_back("f/g is not monotone on the grid");
    rep.ratio_direction = up > 0 ? RatioDirection::increasing_as_r_to_0
                          : down > 0 ? RatioDirection::decreasing_as_r_to_0
                                     : RatioDirection::constant;
    rep.monotone_ok = f_ok && g_ok && ratio_ok;

    rep.f_over_g_kappa_ok = non_decreasing([&](double r) { return h_gauge(p, r); }, "f/g^kappa");
    double h0 = h_gauge(p, grid.front()), h1 = h_gauge(p, grid.back());
    if (!(h0 <= h1)) rep.f_over_g_kappa_ok = false;

    double lam = 0.0;
    for (double r : grid) {
        double r2 = 2 * r;
        if (!p.g.is_power() && r2 > p.g.samples.back().first) continue;
        lam = std::max(lam, p.g(r2) / p.g(r));
    }
    rep.doubling_lambda_estimate = lam;
    return rep;
}

GaugeReport verify_gauge_pair(const GaugePair& p) { return verify_gauge_pair(p, default_grid()); }

double h_gauge(const GaugePair& p, double r) { return p.f(r) / std::pow(p.g(r), p.kappa); }

double mtp_radius(const GaugePair& p, double upsilon) {
    if (!(upsilon > 0.0)) throw DomainError("mtp_radius: upsilon must be positive");
    if (!(p.kappa >= 0.0 && p.kappa < 1.0)) throw ArgumentError("kappa must lie in [0,1)");
    const bool same = p.f.kind == p.g.kind && p.f.s == p.g.s && p.f.coef == p.g.coef && p.f.samples == p.g.samples;
    if (p.kappa == 0.0 && same) return upsilon;  // g^{-1}(g(u)) = u
    double inner;
    if (p.f.is_power() && p.g.is_power()) {
        // Log form avoids underflow for tiny radii.
        double lf = std::log(p.f.coef) + p.f.s * std::log(upsilon);
        double lg = std::log(p.g.coef) + p.g.s * std::log(upsilon);
        double l = (lf - p.kappa * lg) / (1.0 - p.kappa);
        if (!std::isfinite(l)) throw NumericError("mtp_radius: non-finite intermediate");
        if (p.g.s == 0.0) throw NumericError("mtp_radius: g is constant");
        double out = std::exp((l - std::log(p.g.coef)) / p.g.s);
        if (!std::isfinite(out) || out <= 0.0) throw NumericError("mtp_radius: non-finite result");
        return out;
    }
    inner = std::pow(h_gauge(p, upsilon), 1.0 / (1.0 - p.kappa));
    if (!std::isfinite(inner) || inner <= 0.0) throw NumericError("mtp_radius: non-finite intermediate");
    return invert_gauge(p.g, inner);
}

double power_transform_exponent(double s, double kappa, int n) {
    if (n < 1) throw ArgumentError("power_transform_exponent: n must be positive");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw ArgumentError("power_transform_exponent: kappa must lie in [0,1)");
    if (!(s > kappa * n)) throw ArgumentError("power_transform_exponent: requires s > kappa*n");
    return (s - kappa * n) / ((1.0 - kappa) * n);
}

}  // namespace mtp
