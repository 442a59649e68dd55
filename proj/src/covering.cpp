#include "mtp/covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtp {

bool balls_disjoint(const Ball& a, const Ball& b, const BallSpace& s) {
    return s.dist(a.center, b.center) >= a.radius + b.radius;
}

bool ball_contains(const Ball& outer, const Ball& inner, const BallSpace& s) {
    return s.dist(outer.center, inner.center) + inner.radius <= outer.radius;
}

// ---------------------------------------------------------------- BallIndex

std::uint64_t BallIndex::key(int level, const std::vector<long long>& idx) const {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(level + 4096));
    for (long long v : idx) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return h;
}

namespace {

int level_for(double r) {
    double d = std::max(2.0 * r, 1e-300);
    return static_cast<int>(std::ceil(std::log2(d)));
}

// Levels this sparse are scanned directly instead of through their cells.
constexpr std::size_t kBruteLevel = 16;

long long cells_per_unit(double cell) { return std::max(1LL, static_cast<long long>(std::floor(1.0 / cell))); }

}  // namespace

void BallIndex::insert(VecView c, double r, std::size_t id) {
    const int lv = level_for(r);
    auto it = levels_.find(lv);
    if (it == levels_.end()) it = levels_.emplace(lv, Level{std::ldexp(1.0, lv), {}, {}}).first;
    Level& L = it->second;
    std::vector<long long> idx(dim_);
    if (space_.torus) {
        long long M = cells_per_unit(L.cell);
        for (int i = 0; i < dim_; ++i) idx[i] = std::min(M - 1, static_cast<long long>(wrap01(c[i]) * M));
    } else {
        for (int i = 0; i < dim_; ++i) idx[i] = static_cast<long long>(std::floor(c[i] / L.cell));
    }
    const auto slot = static_cast<std::uint32_t>(radii_.size());
    centers_.insert(centers_.end(), c.begin(), c.end());
    radii_.push_back(r);
    ids_.push_back(id);
    L.cells[key(lv, idx)].push_back(slot);
    L.all.push_back(slot);
}

void BallIndex::candidates(VecView c, double r, const std::function<void(std::size_t)>& fn) const {
    std::vector<long long> lo(dim_), hi(dim_), idx(dim_);
    for (const auto& [lv, L] : levels_) {
        if (L.all.size() <= kBruteLevel) {
            for (auto slot : L.all) fn(slot);
            continue;
        }
        // Stored radii at this level are at most cell/2.
        const double ext = r + 0.5 * L.cell;
        long long M = space_.torus ? cells_per_unit(L.cell) : 0;
        double cell = space_.torus ? 1.0 / M : L.cell;
        for (int i = 0; i < dim_; ++i) {
            double x = space_.torus ? wrap01(c[i]) : c[i];
            lo[i] = static_cast<long long>(std::floor((x - ext) / cell));
            hi[i] = static_cast<long long>(std::floor((x + ext) / cell));
            if (space_.torus && hi[i] - lo[i] + 1 >= M) {
                lo[i] = 0;
                hi[i] = M - 1;
            }
        }
        double cells = 1.0;
        for (int i = 0; i < dim_; ++i) cells *= static_cast<double>(hi[i] - lo[i] + 1);
        if (cells > static_cast<double>(L.cells.size())) {
            for (auto slot : L.all) fn(slot);
            continue;
        }
        idx = lo;
        for (;;) {
            std::vector<long long> key_idx = idx;
            if (space_.torus)
                for (auto& v : key_idx) v = ((v % M) + M) % M;
            auto hit = L.cells.find(key(lv, key_idx));
            if (hit != L.cells.end())
                for (auto slot : hit->second) fn(slot);
            int i = 0;
            while (i < dim_ && idx[i] == hi[i]) {
                idx[i] = lo[i];
                ++i;
            }
            if (i == dim_) break;
            ++idx[i];
        }
    }
}

bool BallIndex::any_intersect(VecView c, double r) const {
    bool hit = false;
    candidates(c, r, [&](std::size_t slot) {
        if (!hit && space_.dist(c, center(slot)) < r + radii_[slot]) hit = true;
    });
    return hit;
}

// ---------------------------------------------------------------- 5r cover

std::vector<std::size_t> five_r_select(const BallFamily& fam) {
    if (fam.balls.empty()) throw ArgumentError("five_r_cover: empty family");
    const int n = static_cast<int>(fam.balls[0].ball.center.size());
    for (const auto& b : fam.balls) {
        if (static_cast<int>(b.ball.center.size()) != n) throw ArgumentError("five_r_cover: dimension mismatch");
        if (!(b.ball.radius > 0.0)) throw ArgumentError("five_r_cover: radii must be positive");
    }
    std::vector<std::size_t> order(fam.balls.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fam.balls[a].ball.radius > fam.balls[b].ball.radius; });
    BallIndex index(fam.space, n);
    std::vector<std::size_t> chosen;
    for (auto i : order) {
        const Ball& b = fam.balls[i].ball;
        if (index.any_intersect(b.center, b.radius)) continue;
        index.insert(b.center, b.radius, i);
        chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

BallFamily five_r_cover(const BallFamily& fam) {
    BallFamily out;
    out.space = fam.space;
    for (auto i : five_r_select(fam)) out.balls.push_back(fam.balls[i]);
    return out;
}

// ---------------------------------------------------------------- nets

NetResult separated_net(const SetModel& m, const Ball& region, double sep, std::size_t candidates, Rng& rng) {
    if (static_cast<int>(region.center.size()) != m.dim) throw ArgumentError("separated_net: dimension mismatch");
    if (!(sep > 0.0)) throw ArgumentError("separated_net: separation must be positive");
    if (!(region.radius > 0.0)) throw ArgumentError("separated_net: region radius must be positive");
    const BallSpace space = BallSpace::of(m);
    NetResult out;
    std::vector<Vec> pool;
    if (const auto* ps = std::get_if<PointSet>(&m.shape)) {
        out.exact_pool = true;
        for (const auto& p : ps->points)
            if (space.dist(p, region.center) < region.radius) pool.push_back(p);
    } else {
        if (candidates < 100) throw ArgumentError("separated_net: needs at least 100 candidates");
        Box win{region.center, region.center};
        for (int i = 0; i < m.dim; ++i) {
            win.lo[i] -= region.radius;
            win.hi[i] += region.radius;
        }
        auto raw = m.torus ? sample_on_set(m, candidates, rng) : sample_on_set(m, candidates, rng, &win);
        for (auto& p : raw)
            if (space.dist(p, region.center) < region.radius) pool.push_back(std::move(p));
    }
    out.pool_size = pool.size();
    BallIndex index(space, m.dim);
    for (auto& p : pool) {
        bool close = false;
        index.candidates(p, 0.5 * sep, [&](std::size_t slot) {
            if (!close && space.dist(p, index.center(slot)) <= sep) close = true;
        });
        if (close) continue;
        index.insert(p, 0.5 * sep, out.points.size());
        out.points.push_back(std::move(p));
    }
    return out;
}

CajResult build_caj(const Ball& A, long long j, const SetModel& m, double upsilon, Rng& rng,
                    std::size_t candidates) {
    if (!(upsilon > 0.0)) throw ArgumentError("build_caj: upsilon must be positive");
    if (!(6.0 * upsilon < A.radius)) throw ArgumentError("build_caj: requires 6*upsilon < radius(A)");
    CajResult out;
    out.net = separated_net(m, A.dilate(0.5), 6.0 * upsilon, candidates, rng);
    for (const auto& p : out.net.points) out.balls.push_back({{p, upsilon}, j});
    return out;
}

// ---------------------------------------------------------------- sequences

double radical_inverse(unsigned long long j, unsigned base) {
    double inv = 1.0 / base, f = inv, x = 0.0;
    while (j > 0) {
        x += f * static_cast<double>(j % base);
        j /= base;
        f *= inv;
    }
    return x;
}

Vec SetSequence::point(long long j) const {
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (dim > 12) throw UnsupportedError("Halton sequence supports at most 12 dimensions");
    Vec x(dim);
    for (int i = 0; i < dim; ++i)
        x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * radical_inverse(static_cast<unsigned long long>(j), primes[i]);
    return x;
}

SetModel SetSequence::at(long long j) const {
    if (kind == Kind::constant) return *model;
    SetModel m = make_points({point(j)}, space.metric);
    m.torus = space.torus;
    return m;
}

double RadiusRule::operator()(long long j) const {
    if (j < 1) throw ArgumentError("radius rule needs j >= 1");
    if (kind == Kind::power) return std::pow(c * static_cast<double>(j), -p);
    return c * std::pow(p, -static_cast<double>(j));
}

// ---------------------------------------------------------------- K_{G,B}

MultiKgbResult build_kgb_multi(const std::vector<Ball>& hosts, long long G, const SetSequence& seq,
                               const std::function<double(long long)>& tilde, long long j_max,
                               const std::function<double(double)>& weight, double target, Rng& rng,
                               std::size_t pool) {
    if (hosts.empty()) throw ArgumentError("build_kgb: no host balls");
    if (G < 1 || j_max < G) throw ArgumentError("build_kgb: need 1 <= G <= j_max");
    if (seq.kind == SetSequence::Kind::constant && !seq.model) throw ArgumentError("build_kgb: constant sequence without model");
    const int n = static_cast<int>(hosts[0].center.size());
    const BallSpace space = seq.space;
    MultiKgbResult out;
    out.per_ball.resize(hosts.size());

    BallIndex host_index(space, n);
    for (std::size_t h = 0; h < hosts.size(); ++h) host_index.insert(hosts[h].center, hosts[h].radius, h);

    BallIndex picked(space, n);
    double prev = std::numeric_limits<double>::infinity();
    auto try_candidate = [&](VecView x, double r, long long j, std::size_t h) {
        if (picked.any_intersect(x, 3.0 * r)) return;
        picked.insert(x, 3.0 * r, 0);
        out.per_ball[h].push_back({{Vec(x.begin(), x.end()), r}, j});
        out.achieved += weight(r);
    };
    for (long long j = G; j <= j_max; ++j) {
        const double r = tilde(j);
        if (!(r > 0.0)) throw ArgumentError("build_kgb: radii must be positive");
        if (r > prev * (1 + 1e-12)) throw ArgumentError("build_kgb: radii must be non-increasing in j");
        prev = r;
        out.n0 = j;
        if (seq.kind == SetSequence::Kind::points) {
            Vec x = seq.point(j);
            host_index.candidates(x, 0.0, [&](std::size_t slot) {
                std::size_t h = host_index.id(slot);
                if (ball_contains(hosts[h], Ball{x, 3.0 * r}, space)) try_candidate(x, r, j, h);
            });
        } else {
            SetModel m = seq.at(j);
            for (std::size_t h = 0; h < hosts.size(); ++h) {
                double inner = hosts[h].radius - 3.0 * r;
                if (!(inner > 0.0)) continue;
                Rng g(derive_seed(rng.next(), static_cast<std::uint64_t>(j), h));
                auto net = separated_net(m, Ball{hosts[h].center, inner}, r, pool, g);
                for (const auto& x : net.points) {
                    if (!ball_contains(hosts[h], Ball{x, 3.0 * r}, space)) continue;
                    try_candidate(x, r, j, h);
                }
            }
        }
        if (out.achieved >= target) {
            out.reached = true;
            break;
        }
    }
    return out;
}

KgbResult build_kgb(const Ball& B, long long G, const SetSequence& seq, const RadiusRule& tilde, long long j_max,
                    double target_fraction, double c5, Rng& rng, std::size_t pool) {
    if (!(target_fraction > 0.0 && target_fraction <= 1.0)) throw ArgumentError("build_kgb: target fraction must lie in (0,1]");
    if (!(c5 > 0.0 && c5 <= 1.0)) throw ArgumentError("build_kgb: c5 must lie in (0,1]");
    const int n = static_cast<int>(B.center.size());
    const Metric metric = seq.space.metric;
    const double volB = ball_volume(n, B.radius, metric);
    auto res = build_kgb_multi(
        {B}, G, seq, [&](long long j) { return tilde(j); }, j_max,
        [&](double r) { return ball_volume(n, r, metric); }, target_fraction * c5 * volB, rng, pool);
    KgbResult out;
    out.balls = std::move(res.per_ball[0]);
    out.achieved_fraction = res.achieved / (c5 * volB);
    out.n0 = res.n0;
    if (!res.reached)
        throw CoverageShortfall("build_kgb: measure target not reached by j_max", out.achieved_fraction);
    return out;
}

}  // namespace mtp
