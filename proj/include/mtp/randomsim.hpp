#pragma once

#include "mtp/measure.hpp"
#include "mtp/sets.hpp"

#include <functional>
#include <vector>

namespace mtp {

// Randomly placed copies of a base model on the torus [0,1)^n, with
// Υ_j = j^{-tau}. Each j gets its own isometry seeded from (master_seed, j).
struct RandomScheme {
    SetModel base;
    double tau = 2.0;
    double s = 1.0;
    double kappa = 0.0;
    std::uint64_t master_seed = 1;
    bool rotations = false;

    int dim() const { return base.dim; }
    void validate() const;
};

// Trial 0 is the scheme's own draw; other trials are independent re-draws.
Isometry draw_isometry(const RandomScheme& sc, long long j, std::uint64_t trial = 0);
SetModel stage_model(const RandomScheme& sc, long long j, std::uint64_t trial = 0);

struct RadiusMode {
    enum class Kind { base, transformed };
    Kind kind = Kind::base;
    double t = 0.0;  // target exponent for the transformed radii
};

// j^{-tau}, or j^{tau(kappa s - t)/(s - kappa s)} in transformed mode.
double stage_radius(const RandomScheme& sc, const RadiusMode& mode, long long j);

std::vector<long long> hit_indices(const RandomScheme& sc, VecView x, const RadiusMode& mode, long long J, long long N);

struct CoverageResult {
    long long J = 1, N = 1;
    std::vector<double> p_hat;    // index j - J
    std::vector<double> partial;  // running sums of p_hat
    double slope_first = 0.0;     // partial-sum growth per unit ln j over [J, 10J]
    double slope_last = 0.0;      // same over [N/10, N]
    double slope_ratio = 0.0;
    bool divergent = false;
};

// Divergent when the late-decade slope keeps at least this fraction of the early one.
constexpr double kDivergenceRatio = 0.5;

CoverageResult coverage_frequency(const RandomScheme& sc, VecView x, const std::function<double(long long)>& radius,
                                  long long J, long long N, std::size_t trials);

struct CoverRow {
    long long N;
    double side;
    double count;
};

struct PerJCount {
    long long j;
    double count;  // grid boxes of side j^{-tau} meeting the j-th neighbourhood
    double ratio;  // count / j^{tau kappa s}
};

struct CoveringResult {
    ScalingFit fit;
    double predicted = 0.0;
    std::vector<CoverRow> rows;
    std::vector<PerJCount> per_j;
    double constant_low = 0.0;   // max ratio over j in [10, 100)
    double constant_high = 0.0;  // max ratio over j in [100, 1000]
    bool constant_stable = false;
};

// Box-counting exponent of the tail unions over j in [N, 2N] at side N^{-tau}.
// Supports point sets and axis-aligned planes under translations.
CoveringResult covering_exponent(const RandomScheme& sc, const std::vector<long long>& N_list,
                                 std::size_t max_boxes = 50'000'000);

}  // namespace mtp
