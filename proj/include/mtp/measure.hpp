#pragma once

#include "mtp/sets.hpp"

#include <string>
#include <vector>

namespace mtp {

enum class MeasureMethod { monte_carlo, exact_1d, grid };
std::string to_string(MeasureMethod m);

struct MeasureEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    MeasureMethod method = MeasureMethod::monte_carlo;
};

// Log-log regression summary. `points` rows hold the regressors followed by
// the response, all in log scale.
struct ScalingFit {
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double intercept = 0.0;
    double residual_max = 0.0;
    std::vector<Vec> points;
};

// Monte-Carlo work is split into this many seed streams; results depend on the
// partition count but never on the thread count.
constexpr std::size_t kPartitions = 32;

// Counts successes of `trial` over `samples` draws spread across kPartitions
// streams derived from `seed`.
std::size_t mc_count(std::size_t samples, std::uint64_t seed, const std::function<bool(Rng&)>& trial);

// Uniform point in B(center, r) under the metric.
Vec uniform_in_ball(VecView center, double r, Metric m, Rng& rng);

// vol(B(center, r) ∩ Δ(F, delta)).
MeasureEstimate neighborhood_measure(const SetModel& m, VecView center, double r, double delta,
                                     std::size_t samples, Rng& rng);

// vol(Δ(F, delta)) over the model's bounding box (the torus for torus models).
MeasureEstimate global_neighborhood_measure(const SetModel& m, double delta, std::size_t samples, Rng& rng);

struct ScaleRow {
    double delta;
    MeasureEstimate measure;
};

struct BoxDimResult {
    ScalingFit central;  // exponent = n - slope
    ScalingFit lower;
    ScalingFit upper;
    std::vector<ScaleRow> table;
};

BoxDimResult box_dimensions(const SetModel& m, const std::vector<double>& scales, std::size_t samples_per_scale,
                            Rng& rng);
// Fit on an already measured table (scales ascending or not).
BoxDimResult box_dimensions_from_table(int n, std::vector<ScaleRow> table);

struct MinkowskiResult {
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::pair<double, double>> normalized;  // (delta, delta^{-(n-d)} vol)
};

MinkowskiResult minkowski_content(const SetModel& m, double d, const std::vector<double>& scales,
                                  std::size_t samples_per_scale, Rng& rng);

struct LspCell {
    double r;
    double delta;
    double measure;
    double std_error;
};

struct LspFit {
    ScalingFit fit;  // exponent = kappa_hat
    double kappa_hat = 0.0;
    double delta_coef = 0.0;
    double r_coef = 0.0;
    double c3_hat = 0.0;
    double c4_hat = 0.0;
    std::vector<LspCell> cells;
};

// Regression of log H on (log delta, log r, 1) with kappa_hat = r-coefficient / n.
LspFit fit_lsp_table(int n, std::vector<LspCell> cells);

// Measures H on r_grid x delta_ratios (delta = ratio * r), averaging over
// `centers` points drawn on F with the samples split between them.
LspFit fit_lsp(const SetModel& m, const std::vector<double>& r_grid, const std::vector<double>& delta_ratios,
               std::size_t samples, Rng& rng, std::size_t centers = 8);

}  // namespace mtp
