#include "mtp/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtp {

std::string to_string(MeasureMethod m) {
    switch (m) {
        case MeasureMethod::exact_1d: return "exact_1d";
        case MeasureMethod::grid: return "grid";
        default: return "monte_carlo";
    }
}

std::size_t mc_count(std::size_t samples, std::uint64_t seed, const std::function<bool(Rng&)>& trial) {
    std::vector<std::size_t> hits(kPartitions, 0);
    parallel_for(kPartitions, [&](std::size_t p) {
        std::size_t quota = samples / kPartitions + (p < samples % kPartitions ? 1 : 0);
        Rng rng(derive_seed(seed, p));
        std::size_t h = 0;
        for (std::size_t i = 0; i < quota; ++i) h += trial(rng) ? 1 : 0;
        hits[p] = h;
    });
    return std::accumulate(hits.begin(), hits.end(), std::size_t{0});
}

Vec uniform_in_ball(VecView center, double r, Metric m, Rng& rng) {
    const std::size_t n = center.size();
    Vec x(n);
    if (m == Metric::sup) {
        for (std::size_t i = 0; i < n; ++i) x[i] = center[i] + r * (2.0 * rng.uniform() - 1.0);
        return x;
    }
    double nn = 0.0;
    do {
        nn = 0.0;
        for (auto& v : x) {
            v = rng.normal();
            nn += v * v;
        }
    } while (nn == 0.0);
    double scale = r * std::pow(rng.uniform(), 1.0 / n) / std::sqrt(nn);
    for (std::size_t i = 0; i < n; ++i) x[i] = center[i] + scale * x[i];
    return x;
}

namespace {

double interval_length(const std::vector<std::pair<double, double>>& iv) {
    double s = 0.0;
    for (const auto& [a, b] : iv) s += b - a;
    return s;
}

MeasureEstimate binomial(double volume, std::size_t hits, std::size_t samples) {
    MeasureEstimate e;
    double p = static_cast<double>(hits) / samples;
    e.value = volume * p;
    e.std_error = volume * std::sqrt(p * (1.0 - p) / samples);
    e.samples = samples;
    e.method = MeasureMethod::monte_carlo;
    return e;
}

MeasureEstimate box_estimate(const SetModel& m, const Box& box, double delta, std::size_t samples, Rng& rng) {
    if (has_exact_1d(m)) {
        MeasureEstimate e;
        e.value = interval_length(neighborhood_intervals_1d(m, delta, box.lo[0], box.hi[0]));
        e.method = MeasureMethod::exact_1d;
        return e;
    }
    const std::uint64_t seed = rng.next();
    std::size_t hits = mc_count(samples, seed, [&](Rng& g) {
        Vec x(m.dim);
        for (int i = 0; i < m.dim; ++i) x[i] = g.uniform(box.lo[i], box.hi[i]);
        return within_distance(m, x, delta);
    });
    return binomial(box.volume(), hits, samples);
}

// Least-squares line y ~ a + b x over the selected rows.
LsqResult line_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<std::size_t>& idx) {
    std::vector<Vec> rows;
    Vec ys;
    for (auto i : idx) {
        rows.push_back({1.0, x[i]});
        ys.push_back(y[i]);
    }
    return least_squares(rows, ys);
}

ScalingFit to_dimension_fit(int n, const LsqResult& r, const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<std::size_t>& idx) {
    ScalingFit f;
    f.exponent = n - r.coef[1];
    f.exponent_stderr = r.stderr_[1];
    f.intercept = r.coef[0];
    for (double v : r.residuals) f.residual_max = std::max(f.residual_max, std::abs(v));
    for (auto i : idx) f.points.push_back({x[i], y[i]});
    return f;
}

}  // namespace

MeasureEstimate neighborhood_measure(const SetModel& m, VecView center, double r, double delta,
                                     std::size_t samples, Rng& rng) {
    if (static_cast<int>(center.size()) != m.dim) throw ArgumentError("neighborhood_measure: dimension mismatch");
    if (!(delta > 0.0) || !(r > 0.0)) throw ArgumentError("neighborhood_measure: radii must be positive");
    if (delta >= r) throw ArgumentError("neighborhood_measure: requires delta < r");
    if (has_exact_1d(m)) {
        MeasureEstimate e;
        e.value = interval_length(neighborhood_intervals_1d(m, delta, center[0] - r, center[0] + r));
        e.method = MeasureMethod::exact_1d;
        return e;
    }
    if (samples < 1000) throw ArgumentError("neighborhood_measure: needs at least 1000 samples");
    const std::uint64_t seed = rng.next();
    Vec c(center.begin(), center.end());
    std::size_t hits = mc_count(samples, seed, [&](Rng& g) {
        Vec x = uniform_in_ball(c, r, m.metric, g);
        return within_distance(m, x, delta);
    });
    return binomial(ball_volume(m.dim, r, m.metric), hits, samples);
}

MeasureEstimate global_neighborhood_measure(const SetModel& m, double delta, std::size_t samples, Rng& rng) {
    if (!(delta > 0.0)) throw ArgumentError("global_neighborhood_measure: delta must be positive");
    auto bb = bounding_box(m);
    if (!bb) throw ArgumentError("unbounded model needs a window");
    Box box = m.torus ? *bb : bb->expanded(delta);
    if (!has_exact_1d(m) && samples < 1000) throw ArgumentError("needs at least 1000 samples");
    MeasureEstimate e = box_estimate(m, box, delta, samples, rng);
    if (m.torus && e.method == MeasureMethod::exact_1d) e.value = std::min(e.value, 1.0);
    return e;
}

namespace {

void check_scales(const std::vector<double>& scales) {
    if (scales.size() < 4) throw ArgumentError("need at least 4 scales");
    auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
    if (!(*lo > 0.0)) throw ArgumentError("scales must be positive");
    if (*hi / *lo < 100.0 * (1 - 1e-12)) throw ArgumentError("scales must span at least 2 decades");
}

std::vector<ScaleRow> measure_scales(const SetModel& m, const std::vector<double>& scales, std::size_t samples,
                                     Rng& rng) {
    check_scales(scales);
    std::vector<ScaleRow> table;
    for (double d : scales) table.push_back({d, global_neighborhood_measure(m, d, samples, rng)});
    return table;
}

}  // namespace

BoxDimResult box_dimensions_from_table(int n, std::vector<ScaleRow> table) {
    std::vector<double> x, y;
    for (const auto& row : table) {
        if (row.measure.value > 0.0) {
            x.push_back(std::log(row.delta));
            y.push_back(std::log(row.measure.value));
        }
    }
    if (x.size() < 3) throw EstimationError("neighbourhood measure vanished at too many scales");
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    BoxDimResult out;
    out.table = std::move(table);
    LsqResult c = line_fit(x, y, all);
    out.central = to_dimension_fit(n, c, x, y, all);

    // Envelopes: refit on the half of the points above (below) the central line.
    std::vector<std::size_t> order = all;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return c.residuals[a] > c.residuals[b]; });
    std::size_t k = std::min(order.size(), (order.size() + 1) / 2 + 1);
    std::vector<std::size_t> top(order.begin(), order.begin() + k), bottom(order.end() - k, order.end());
    std::sort(top.begin(), top.end());
    std::sort(bottom.begin(), bottom.end());
    ScalingFit a = to_dimension_fit(n, line_fit(x, y, top), x, y, top);
    ScalingFit b = to_dimension_fit(n, line_fit(x, y, bottom), x, y, bottom);
    if (a.exponent > b.exponent) std::swap(a, b);
    out.lower = a;
    out.upper = b;
    return out;
}

BoxDimResult box_dimensions(const SetModel& m, const std::vector<double>& scales, std::size_t samples_per_scale,
                            Rng& rng) {
    return box_dimensions_from_table(m.dim, measure_scales(m, scales, samples_per_scale, rng));
}

MinkowskiResult minkowski_content(const SetModel& m, double d, const std::vector<double>& scales,
                                  std::size_t samples_per_scale, Rng& rng) {
    if (!(d >= 0.0 && d <= m.dim)) throw ArgumentError("minkowski_content: d must lie in [0, n]");
    auto table = measure_scales(m, scales, samples_per_scale, rng);
    MinkowskiResult out;
    out.lower = std::numeric_limits<double>::infinity();
    out.upper = 0.0;
    for (const auto& row : table) {
        double v = std::pow(row.delta, -(m.dim - d)) * row.measure.value;
        out.normalized.emplace_back(row.delta, v);
        out.lower = std::min(out.lower, v);
        out.upper = std::max(out.upper, v);
    }
    if (!(out.upper > 0.0)) throw EstimationError("neighbourhood measure vanished at every scale");
    return out;
}

LspFit fit_lsp_table(int n, std::vector<LspCell> cells) {
    std::vector<Vec> rows;
    Vec y;
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    double qmin = rmin, qmax = 0.0;
    for (const auto& c : cells) {
        if (!(c.measure > 0.0)) continue;
        rows.push_back({std::log(c.delta), std::log(c.r), 1.0});
        y.push_back(std::log(c.measure));
        rmin = std::min(rmin, c.r);
        rmax = std::max(rmax, c.r);
        qmin = std::min(qmin, c.delta / c.r);
        qmax = std::max(qmax, c.delta / c.r);
    }
    if (rows.size() < 3) throw EstimationError("fit_lsp: too few cells with positive measure");
    if (!(rmax > rmin * (1 + 1e-12)) || !(qmax > qmin * (1 + 1e-12)))
        throw ArgumentError("fit_lsp: r and delta/r must both vary across the grid");
    LsqResult r = least_squares(rows, y);
    LspFit out;
    out.delta_coef = r.coef[0];
    out.r_coef = r.coef[1];
    out.kappa_hat = r.coef[1] / n;
    out.fit.exponent = out.kappa_hat;
    out.fit.exponent_stderr = r.stderr_[1] / n;
    out.fit.intercept = r.coef[2];
    for (double v : r.residuals) out.fit.residual_max = std::max(out.fit.residual_max, std::abs(v));
    for (std::size_t i = 0; i < rows.size(); ++i) out.fit.points.push_back({rows[i][0], rows[i][1], y[i]});
    out.c3_hat = std::numeric_limits<double>::infinity();
    for (const auto& c : cells) {
        if (!(c.measure > 0.0)) continue;
        double ref = std::pow(c.delta, (1.0 - out.kappa_hat) * n) * std::pow(c.r, out.kappa_hat * n);
        out.c3_hat = std::min(out.c3_hat, c.measure / ref);
        out.c4_hat = std::max(out.c4_hat, c.measure / ref);
    }
    out.cells = std::move(cells);
    return out;
}

LspFit fit_lsp(const SetModel& m, const std::vector<double>& r_grid, const std::vector<double>& delta_ratios,
               std::size_t samples, Rng& rng, std::size_t centers) {
    if (r_grid.empty() || delta_ratios.empty()) throw ArgumentError("fit_lsp: empty grid");
    for (double r : r_grid)
        if (!(r > 0.0)) throw ArgumentError("fit_lsp: radii must be positive");
    for (double q : delta_ratios)
        if (!(q > 0.0 && q < 1.0)) throw ArgumentError("fit_lsp: delta/r ratios must lie in (0,1)");
    if (centers < 1) throw ArgumentError("fit_lsp: need at least one centre");
    const bool exact = has_exact_1d(m);
    const std::size_t per_center = exact ? 0 : std::max<std::size_t>(1000, samples / centers);
    const std::uint64_t seed = rng.next();
    Rng crng(derive_seed(seed, 0xC));
    auto pts = sample_on_set(m, centers, crng);
    if (pts.empty()) throw EstimationError("fit_lsp: could not sample centres on the set");

    std::vector<LspCell> cells;
    for (double r : r_grid)
        for (double q : delta_ratios) cells.push_back({r, q * r, 0.0, 0.0});
    // Cells run one after another; each cell's Monte-Carlo is itself partitioned.
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        auto& c = cells[ci];
        double sum = 0.0, var = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            Rng g(derive_seed(seed, 1 + ci, k));
            auto e = neighborhood_measure(m, pts[k], c.r, c.delta, per_center, g);
            sum += e.value;
            var += e.std_error * e.std_error;
        }
        c.measure = sum / pts.size();
        c.std_error = std::sqrt(var) / pts.size();
    }
    return fit_lsp_table(m.dim, std::move(cells));
}

}  // namespace mtp
