#include "mtp/randomsim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mtp {

void RandomScheme::validate() const {
    mtp::validate(base);
    if (!base.torus) throw DomainError("randomsim: base model must live on the torus");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw DomainError("randomsim: kappa must lie in [0,1)");
    if (!(s > 0.0)) throw DomainError("randomsim: s must be positive");
    if (!(tau > 1.0 / (s - kappa * s))) throw DomainError("randomsim: need tau > 1/(s - kappa s)");
}

Isometry draw_isometry(const RandomScheme& sc, long long j, std::uint64_t trial) {
    const std::uint64_t key = derive_seed(sc.master_seed, static_cast<std::uint64_t>(j), trial, 0x150);
    Isometry iso;
    iso.wrap = true;
    iso.translation.resize(sc.dim());
    // Counter-based draws: seeding a full engine per (j, trial) dominates otherwise.
    for (std::size_t i = 0; i < iso.translation.size(); ++i)
        iso.translation[i] = static_cast<double>(mix64(key + 0x9E3779B97F4A7C15ULL * (i + 1)) >> 11) * 0x1.0p-53;
    if (sc.rotations) {
        Rng g(key);
        iso.rotation = random_rotation(sc.dim(), g);
    }
    return iso;
}

SetModel stage_model(const RandomScheme& sc, long long j, std::uint64_t trial) {
    return transform_model(sc.base, draw_isometry(sc, j, trial));
}

double stage_radius(const RandomScheme& sc, const RadiusMode& mode, long long j) {
    const double jj = static_cast<double>(j);
    if (mode.kind == RadiusMode::Kind::base) return std::pow(jj, -sc.tau);
    return std::pow(jj, sc.tau * (sc.kappa * sc.s - mode.t) / (sc.s - sc.kappa * sc.s));
}

std::vector<long long> hit_indices(const RandomScheme& sc, VecView x, const RadiusMode& mode, long long J, long long N) {
    if (J < 1 || N < J) throw RangeError("hit_indices: need 1 <= J <= N");
    std::vector<char> hit(static_cast<std::size_t>(N - J + 1), 0);
    parallel_for(hit.size(), [&](std::size_t k) {
        const long long j = J + static_cast<long long>(k);
        hit[k] = within_distance(stage_model(sc, j), x, stage_radius(sc, mode, j)) ? 1 : 0;
    });
    std::vector<long long> out;
    for (std::size_t k = 0; k < hit.size(); ++k)
        if (hit[k]) out.push_back(J + static_cast<long long>(k));
    return out;
}

CoverageResult coverage_frequency(const RandomScheme& sc, VecView x, const std::function<double(long long)>& radius,
                                  long long J, long long N, std::size_t trials) {
    if (trials < 1000) throw RangeError("coverage_frequency: needs at least 1000 trials");
    if (J < 1 || N < 100 * J) throw RangeError("coverage_frequency: need N >= 100 J for two separate decades");
    CoverageResult out;
    out.J = J;
    out.N = N;
    out.p_hat.assign(static_cast<std::size_t>(N - J + 1), 0.0);
    parallel_for(out.p_hat.size(), [&](std::size_t k) {
        const long long j = J + static_cast<long long>(k);
        const double r = radius(j);
        std::size_t hits = 0;
        for (std::size_t t = 1; t <= trials; ++t) {
            if (sc.rotations) {
                if (within_distance(stage_model(sc, j, t), x, r)) ++hits;
                continue;
            }
            // Translation only: x hits φ(F) iff x - shift hits F on the torus.
            const Isometry iso = draw_isometry(sc, j, t);
            Vec y(x.begin(), x.end());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = wrap01(y[i] - iso.translation[i]);
            if (within_distance(sc.base, y, r)) ++hits;
        }
        out.p_hat[k] = static_cast<double>(hits) / static_cast<double>(trials);
    });
    out.partial.resize(out.p_hat.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < out.p_hat.size(); ++k) out.partial[k] = acc += out.p_hat[k];
    auto S = [&](long long j) { return out.partial[static_cast<std::size_t>(j - J)]; };
    out.slope_first = (S(10 * J) - S(J)) / std::log(10.0);
    out.slope_last = (S(N) - S(N / 10)) / std::log(static_cast<double>(N) / static_cast<double>(N / 10));
    out.slope_ratio = out.slope_first > 0.0 ? out.slope_last / out.slope_first : 0.0;
    out.divergent = out.slope_ratio >= kDivergenceRatio;
    return out;
}

namespace {

// Grid of M cells per axis; side 1/M.
long long cells_for(double inv_side) {
    const double r = std::round(inv_side);
    if (std::abs(r - inv_side) <= 1e-9 * inv_side) return static_cast<long long>(r);
    return static_cast<long long>(std::ceil(inv_side));
}

// Torus cells meeting the open interval (c - r, c + r) on one axis.
std::vector<long long> axis_cells(double c, double r, long long M) {
    const double Md = static_cast<double>(M);
    long long lo = static_cast<long long>(std::floor((c - r) * Md));
    long long hi = static_cast<long long>(std::ceil((c + r) * Md)) - 1;
    std::vector<long long> out;
    if (hi - lo + 1 >= M) {
        out.resize(static_cast<std::size_t>(M));
        for (long long k = 0; k < M; ++k) out[k] = k;
        return out;
    }
    for (long long k = lo; k <= hi; ++k) out.push_back(((k % M) + M) % M);
    return out;
}

// Transverse structure of a stage set: the list of anchor points and the axes
// that are free (spanned by the plane).
struct Anchors {
    std::vector<Vec> points;
    std::vector<bool> free;
};

Anchors anchors_of(const SetModel& m) {
    Anchors a;
    a.free.assign(m.dim, false);
    if (const auto* ps = std::get_if<PointSet>(&m.shape)) {
        a.points = ps->points;
        return a;
    }
    if (const auto* pl = std::get_if<AffinePlane>(&m.shape)) {
        for (const auto& v : pl->basis) {
            int axis = -1, nz = 0;
            for (int i = 0; i < m.dim; ++i)
                if (std::abs(v[i]) > 1e-12) {
                    axis = i;
                    ++nz;
                }
            if (nz != 1) throw UnsupportedError("covering_exponent: planes must be spanned by coordinate axes");
            a.free[axis] = true;
        }
        a.points.push_back(pl->base);
        return a;
    }
    throw UnsupportedError("covering_exponent: supports point sets and axis-aligned planes");
}

// Visits every tuple of transverse cells (free axes skipped) meeting the
// sup-ball neighbourhood of each anchor. Euclidean balls are covered by their
// bounding cubes.
void for_cells(const Anchors& a, double r, long long M, const std::function<void(const std::vector<long long>&)>& fn) {
    const int n = static_cast<int>(a.free.size());
    std::vector<int> axes;
    for (int i = 0; i < n; ++i)
        if (!a.free[i]) axes.push_back(i);
    for (const auto& p : a.points) {
        std::vector<std::vector<long long>> ranges;
        for (int i : axes) ranges.push_back(axis_cells(p[i], r, M));
        std::vector<long long> tuple(axes.size());
        std::function<void(std::size_t)> rec = [&](std::size_t d) {
            if (d == axes.size()) {
                fn(tuple);
                return;
            }
            for (long long k : ranges[d]) {
                tuple[d] = k;
                rec(d + 1);
            }
        };
        rec(0);
    }
}

std::uint64_t encode(const std::vector<long long>& t, long long M) {
    std::uint64_t code = 0;
    for (long long k : t) code = code * static_cast<std::uint64_t>(M) + static_cast<std::uint64_t>(k);
    return code;
}

int free_count(const Anchors& a) { return static_cast<int>(std::count(a.free.begin(), a.free.end(), true)); }

}  // namespace

CoveringResult covering_exponent(const RandomScheme& sc, const std::vector<long long>& N_list, std::size_t max_boxes) {
    sc.validate();
    if (N_list.size() < 4) throw RangeError("covering_exponent: needs at least 4 stage counts");
    for (std::size_t k = 0; k < N_list.size(); ++k)
        if (N_list[k] < 1 || (k > 0 && N_list[k] <= N_list[k - 1]))
            throw RangeError("covering_exponent: N_list must be positive and increasing");
    if (sc.rotations) throw UnsupportedError("covering_exponent: rotations are not supported by the box counter");
    CoveringResult out;
    out.predicted = sc.kappa * sc.s + 1.0 / sc.tau;
    const Anchors base = anchors_of(sc.base);
    const int l = free_count(base);
    const int d = sc.dim() - l;

    std::vector<Vec> rows;
    Vec y;
    for (long long N : N_list) {
        const long long M = cells_for(std::pow(static_cast<double>(N), sc.tau));
        if (d > 0 && std::log2(static_cast<double>(M)) * d > 62)
            throw CapacityError("covering_exponent: grid too fine at N=" + std::to_string(N) + "; use smaller N");
        const std::size_t count_j = static_cast<std::size_t>(N + 1);
        std::vector<std::vector<std::uint64_t>> per(count_j);
        parallel_for(count_j, [&](std::size_t k) {
            const long long j = N + static_cast<long long>(k);
            const Anchors a = anchors_of(stage_model(sc, j));
            for_cells(a, std::pow(static_cast<double>(j), -sc.tau), M,
                      [&](const std::vector<long long>& t) { per[k].push_back(encode(t, M)); });
        });
        std::unordered_set<std::uint64_t> occupied;
        for (const auto& v : per) {
            occupied.insert(v.begin(), v.end());
            if (occupied.size() > max_boxes)
                throw CapacityError("covering_exponent: more than " + std::to_string(max_boxes) +
                                    " occupied boxes at N=" + std::to_string(N) + "; use smaller N");
        }
        const double count = static_cast<double>(occupied.size()) * std::pow(static_cast<double>(M), l);
        out.rows.push_back({N, 1.0 / static_cast<double>(M), count});
        rows.push_back({1.0, std::log(static_cast<double>(M))});
        y.push_back(std::log(count));
    }
    LsqResult r = least_squares(rows, y);
    out.fit.exponent = r.coef[1];
    out.fit.exponent_stderr = r.stderr_[1];
    out.fit.intercept = r.coef[0];
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.fit.residual_max = std::max(out.fit.residual_max, std::abs(r.residuals[k]));
        out.fit.points.push_back({rows[k][1], y[k]});
    }

    // Per-j cover counts at matched scale, normalised by j^{tau kappa s}.
    for (long long j = 10; j <= 1000; ++j) {
        const long long M = cells_for(std::pow(static_cast<double>(j), sc.tau));
        const Anchors a = anchors_of(stage_model(sc, j));
        std::unordered_set<std::uint64_t> cells;
        for_cells(a, std::pow(static_cast<double>(j), -sc.tau), M,
                  [&](const std::vector<long long>& t) { cells.insert(encode(t, M)); });
        const double count = static_cast<double>(cells.size()) * std::pow(static_cast<double>(M), l);
        const double ratio = count / std::pow(static_cast<double>(j), sc.tau * sc.kappa * sc.s);
        out.per_j.push_back({j, count, ratio});
        double& slot = j < 100 ? out.constant_low : out.constant_high;
        slot = std::max(slot, ratio);
    }
    out.constant_stable = out.constant_low > 0.0 && out.constant_high <= 2.0 * out.constant_low &&
                          out.constant_low <= 2.0 * out.constant_high;
    return out;
}

}  // namespace mtp
