#include "mtp/cantor.hpp"

#include "mtp/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace mtp {

std::string to_string(GrowthCase c) {
    switch (c) {
        case GrowthCase::a_ratio_to_infinity: return "a";
        case GrowthCase::b_ratio_to_zero: return "b";
        case GrowthCase::c_ratio_to_limit: return "c";
    }
    return "?";
}

GrowthCase classify_case(const GaugePair& p) {
    if (p.f.is_power() && p.g.is_power()) {
        if (p.f.s < p.g.s) return GrowthCase::a_ratio_to_infinity;
        if (p.f.s > p.g.s) return GrowthCase::b_ratio_to_zero;
        return GrowthCase::c_ratio_to_limit;
    }
    switch (verify_gauge_pair(p).ratio_direction) {
        case RatioDirection::increasing_as_r_to_0: return GrowthCase::a_ratio_to_infinity;
        case RatioDirection::decreasing_as_r_to_0: return GrowthCase::b_ratio_to_zero;
        case RatioDirection::constant: return GrowthCase::c_ratio_to_limit;
    }
    return GrowthCase::c_ratio_to_limit;
}

double CantorParams::c6() const {
    return 1.0 / (2.0 * gauges.lambda) * (c1 / c2) * (c1 / c2) * c5 / c7;
}

double CantorParams::tilde(long long j) const { return mtp_radius(gauges, upsilon(j)); }

namespace {

long long floor_plus_one(double x) {
    if (!(x >= 0.0)) return 1;
    if (x > 1e18) return std::numeric_limits<long long>::max();
    return static_cast<long long>(std::floor(x)) + 1;
}

double weight_of(const CantorParams& p, double upsilon) {
    return std::pow(h_gauge(p.gauges, upsilon), 1.0 / (1.0 - p.gauges.kappa));
}

std::string node_name(long long id) { return "node " + std::to_string(id); }

void validate_params(const CantorParams& p) {
    if (!(p.eta > 1.0)) throw DomainError("cantor: eta must exceed 1");
    if (p.depth < 1) throw RangeError("cantor: depth must be >= 1");
    if (!(p.domain.radius > 0.0)) throw DomainError("cantor: domain radius must be positive");
    if (p.seq.dim != static_cast<int>(p.domain.center.size()))
        throw ArgumentError("cantor: sequence dimension differs from the domain");
    if (p.G_floor < 1 || p.j_max < p.G_floor) throw RangeError("cantor: need 1 <= G_floor <= j_max");
    if (!(p.gauges.kappa >= 0.0 && p.gauges.kappa < 1.0)) throw DomainError("cantor: kappa must lie in [0,1)");
    if (!(p.c1 > 0 && p.c2 >= p.c1 && p.c5 > 0 && p.c5 <= 1 && p.c7 > 0 && p.d2 > 0))
        throw DomainError("cantor: constants need 0 < c1 <= c2, 0 < c5 <= 1, c7 > 0, d2 > 0");
    if (!(p.target_margin >= 0.0)) throw DomainError("cantor: target_margin must be >= 0");
    if (p.min_balls < 1) throw RangeError("cantor: min_balls must be >= 1");
    if (!(p.pool_factor > 0.0)) throw DomainError("cantor: pool_factor must be positive");
    GaugeReport rep = verify_gauge_pair(p.gauges);
    if (!rep.monotone_ok || !rep.f_over_g_kappa_ok) {
        std::string msg = "cantor: gauge pair failed verification";
        for (const auto& s : rep.issues) msg += "; " + s;
        throw DomainError(msg);
    }
    GrowthCase c = classify_case(p.gauges);
    if (c == GrowthCase::b_ratio_to_zero)
        throw UnsupportedError("cantor: case (b), f/g -> 0 as r -> 0; H^f vanishes on the limsup set, no construction");
    if (c == GrowthCase::c_ratio_to_limit)
        throw UnsupportedError("cantor: case (c), f/g tends to a finite limit; H^f is a multiple of H^g, no construction");
}

class Builder {
public:
    Builder(const CantorParams& p, Rng& rng) : p_(p), n_(static_cast<int>(p.domain.center.size())) {
        seed_ = rng.next();
        space_ = p.seq.space;
        c6_ = p.c6();
    }

    CantorTree run() {
        t_.c6 = c6_;
        t_.space = space_;
        t_.depth = p_.depth;
        CantorNode root;
        root.ball = p_.domain;
        root.level = 1;
        root.l_B = sublevel_count(p_, root.ball, true);
        root.epsilon = epsilon_of(p_, root.ball, root.l_B);
        t_.nodes.push_back(root);
        std::vector<long long> current{0};
        for (int level = 2; level <= p_.depth; ++level) {
            std::vector<long long> next;
            for (long long b : current) {
                local_level(b, level);
                const auto& ch = t_.nodes[b].children;
                next.insert(next.end(), ch.begin(), ch.end());
            }
            current = std::move(next);
            if (current.empty()) break;
        }
        return std::move(t_);
    }

private:
    struct Window {
        double host_radius;
        double prev_min_f;
        double prev_min_h;
        double eps_rhs;  // ε g(r(B))/f(r(B)); infinite when l_B = 1
        double target;
    };

    bool static_ok(long long j, double eps_rhs) const {
        const auto& G = p_.gauges;
        const double u = p_.upsilon(j), ut = mtp_radius(G, u);
        const double gu = G.g(u), fu = G.f(u), hu = h_gauge(G, u);
        if (!(3.0 * std::pow(gu, 1.0 - G.kappa) < hu)) return false;
        if (!(gu / fu < eps_rhs)) return false;
        if (std::floor(fu / (c6_ * gu)) < 1.0) return false;
        return 6.0 * u < ut;
    }

    bool ok(long long j, const Window& w) const {
        if (!static_ok(j, w.eps_rhs)) return false;
        const auto& G = p_.gauges;
        const double u = p_.upsilon(j), ut = mtp_radius(G, u);
        if (!(3.0 * ut < w.host_radius)) return false;
        if (!(G.g(ut) * static_cast<double>(p_.min_balls) <= w.target)) return false;
        if (!(G.f(u) <= 0.5 * w.prev_min_f)) return false;
        return h_gauge(G, u) <= 0.5 * w.prev_min_h;
    }

    // First index >= start meeting every sublevel condition, found by doubling
    // then bisection (the conditions are eventually monotone in j).
    long long search_G(long long start, const Window& w, long long node, int sub) const {
        if (start > p_.j_max) throw NumericError(trunc_msg(node, sub));
        long long lo = start - 1, hi = start;
        while (!ok(hi, w)) {
            lo = hi;
            if (hi >= p_.j_max) throw NumericError(trunc_msg(node, sub));
            long long step = std::max<long long>(1, hi - start + 1);
            hi = std::min(p_.j_max, hi + step);
        }
        while (hi - lo > 1) {
            long long mid = lo + (hi - lo) / 2;
            if (ok(mid, w)) hi = mid;
            else lo = mid;
        }
        return hi;
    }

    std::string trunc_msg(long long node, int sub) const {
        return "cantor: index search passed j_max=" + std::to_string(p_.j_max) + " at " + node_name(node) +
               ", sublevel " + std::to_string(sub) + " (truncation)";
    }

    // Disjoint balls B(x, d) with x in ½B outside every 4L, greedily kept from a
    // streamed uniform pool (equal radii, so greedy order is the 5r selection).
    std::vector<Ball> leftover_hosts(const Ball& B, double d, const BallIndex& fourL, long long node, int sub,
                                     std::size_t& pool_used) {
        const Ball half = B.dilate(0.5);
        double expect = p_.pool_factor * ball_volume(n_, half.radius, space_.metric) / ball_volume(n_, d, space_.metric);
        std::size_t pool = static_cast<std::size_t>(std::min<double>(std::ceil(expect), 1e18));
        if (pool > p_.max_pool) {
            t_.notices.push_back("leftover pool at " + node_name(node) + ", sublevel " + std::to_string(sub) +
                                 " clamped from " + std::to_string(pool) + " to " + std::to_string(p_.max_pool));
            pool = p_.max_pool;
        }
        pool_used = pool;
        Rng g(derive_seed(seed_, static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(sub), 0x4057));
        BallIndex chosen(space_, n_);
        std::vector<Ball> hosts;
        for (std::size_t k = 0; k < pool; ++k) {
            Vec x = uniform_in_ball(half.center, half.radius, space_.metric, g);
            if (space_.torus)
                for (auto& v : x) v = wrap01(v);
            if (fourL.any_intersect(x, 0.0)) continue;
            if (chosen.any_intersect(x, d)) continue;
            chosen.insert(x, d, hosts.size());
            hosts.push_back({std::move(x), d});
        }
        return hosts;
    }

    void local_level(long long b, int level) {
        const Ball B = t_.nodes[b].ball;
        const long long l_B = t_.nodes[b].l_B;
        const auto& G = p_.gauges;
        const double target = (1.0 + p_.target_margin) * c6_ * G.g(B.radius);
        const double eps = t_.nodes[b].epsilon;
        Window w{B.radius, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                 std::isinf(eps) ? std::numeric_limits<double>::infinity() : eps * G.g(B.radius) / G.f(B.radius),
                 target};
        BallIndex fourL(space_, n_);
        double d_min = std::numeric_limits<double>::infinity();
        long long start = p_.G_floor;
        for (long long i = 1; i <= l_B; ++i) {
            const int sub = static_cast<int>(i);
            if (i > p_.max_sublevels)
                throw CapacityError("cantor: " + node_name(b) + " needs " + std::to_string(l_B) +
                                    " sublevels, above max_sublevels");
            SublevelRecord rec;
            rec.parent = b;
            rec.index = sub;
            rec.target = target;
            std::vector<Ball> hosts;
            if (i == 1) {
                hosts.push_back(B);
                w.host_radius = B.radius;
            } else {
                w.host_radius = d_min;
                hosts = leftover_hosts(B, d_min, fourL, b, sub, rec.pool);
                if (hosts.empty())
                    throw CoverageShortfall("cantor: no leftover space at " + node_name(b) + ", sublevel " +
                                                std::to_string(sub),
                                            0.0);
            }
            rec.host_radius = w.host_radius;
            rec.hosts = hosts.size();
            const long long Gp = search_G(start, w, b, sub);
            Rng krng(derive_seed(seed_, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(sub), 0x6B));
            auto res = build_kgb_multi(
                hosts, Gp, p_.seq, [&](long long j) { return p_.tilde(j); }, p_.j_max,
                [&](double r) { return G.g(r); }, target, krng, p_.net_candidates);
            if (!res.reached) {
                std::ostringstream os;
                os << "cantor: coverage shortfall at " << node_name(b) << ", sublevel " << sub << ": weight "
                   << res.achieved << " of " << target << " by j_max";
                throw CoverageShortfall(os.str(), res.achieved / target);
            }
            rec.G = Gp;
            rec.n0 = res.n0;
            rec.weight = res.achieved;
            double min_f = std::numeric_limits<double>::infinity(), min_h = min_f;
            for (std::size_t h = 0; h < res.per_ball.size(); ++h) {
                for (const auto& ib : res.per_ball[h]) {
                    const long long j = ib.j;
                    if (!static_ok(j, w.eps_rhs))
                        throw NumericError("cantor: index " + std::to_string(j) + " picked at " + node_name(b) +
                                           " breaks the index conditions");
                    const double u = p_.upsilon(j);
                    PairRecord pr;
                    pr.A = ib.ball;
                    pr.j = j;
                    pr.upsilon = u;
                    pr.parent = b;
                    pr.sublevel = sub;
                    pr.host = static_cast<long long>(h);
                    const long long pid = static_cast<long long>(t_.pairs.size());
                    Rng crng(derive_seed(seed_, static_cast<std::uint64_t>(pid), 0xCA1));
                    auto caj = build_caj(ib.ball, j, p_.seq.at(j), u, crng, p_.net_candidates);
                    for (const auto& L : caj.balls) {
                        CantorNode nd;
                        nd.ball = L.ball;
                        nd.level = level;
                        nd.parent = b;
                        nd.sublevel = sub;
                        nd.pair = pid;
                        nd.j = j;
                        nd.l_B = sublevel_count(p_, nd.ball, false);
                        nd.epsilon = epsilon_of(p_, nd.ball, nd.l_B);
                        const long long id = static_cast<long long>(t_.nodes.size());
                        pr.children.push_back(id);
                        t_.nodes[b].children.push_back(id);
                        t_.nodes.push_back(std::move(nd));
                        fourL.insert(L.ball.center, 4.0 * L.ball.radius, static_cast<std::size_t>(id));
                        d_min = std::min(d_min, L.ball.radius);
                        min_f = std::min(min_f, G.f(L.ball.radius));
                        min_h = std::min(min_h, h_gauge(G, L.ball.radius));
                    }
                    t_.pairs.push_back(std::move(pr));
                    if (t_.nodes.size() > p_.max_nodes)
                        throw CapacityError("cantor: node count exceeds max_nodes=" + std::to_string(p_.max_nodes));
                }
            }
            w.prev_min_f = min_f;
            w.prev_min_h = min_h;
            start = res.n0 + 1;
            t_.sublevels.push_back(rec);
        }
    }

    const CantorParams& p_;
    int n_;
    std::uint64_t seed_;
    BallSpace space_;
    double c6_;
    CantorTree t_;
};

}  // namespace

long long sublevel_count(const CantorParams& p, const Ball& B, bool root) {
    const double c6 = p.c6();
    const double g = p.gauges.g(B.radius);
    if (root) return floor_plus_one(p.c2 * p.eta / (c6 * p.c1 * g));
    return floor_plus_one(p.gauges.f(B.radius) / (c6 * g));
}

double epsilon_of(const CantorParams& p, const Ball& B, long long l_B) {
    if (l_B <= 1) return std::numeric_limits<double>::infinity();
    const double lam = p.gauges.lambda;
    const double ratio = p.gauges.g(B.radius) / p.gauges.f(B.radius);
    return p.c1 / (4.0 * lam) / ((p.c2 * p.c2 * lam * lam * p.d2 / p.c1) * ratio * static_cast<double>(l_B - 1));
}

CantorTree build_cantor(const CantorParams& p, Rng& rng) {
    validate_params(p);
    return Builder(p, rng).run();
}

// ---------------------------------------------------------------- mass

MassAssignment assign_mass(const CantorTree& t, const CantorParams& p) {
    MassAssignment m;
    m.mu.assign(t.nodes.size(), 0.0);
    std::vector<double> total(t.nodes.size(), 0.0);
    for (const auto& pr : t.pairs) total[pr.parent] += weight_of(p, pr.upsilon);
    std::vector<long long> order(t.nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](long long a, long long b) { return t.nodes[a].level < t.nodes[b].level; });
    for (long long id : order) {
        const auto& nd = t.nodes[id];
        if (nd.parent < 0) {
            m.mu[id] = 1.0;
            continue;
        }
        const auto& pr = t.pairs[nd.pair];
        m.mu[id] = m.mu[nd.parent] / static_cast<double>(pr.children.size()) * weight_of(p, pr.upsilon) /
                   total[nd.parent];
    }
    return m;
}

// ---------------------------------------------------------------- audit

bool AuditReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const AuditItem& i) { return i.pass; });
}

const AuditItem& AuditReport::at(const std::string& property) const {
    for (const auto& i : items)
        if (i.property == property) return i;
    throw ArgumentError("audit: no item " + property);
}

namespace {

constexpr std::size_t kViolationCap = 50;

void flag(AuditItem& it, const std::string& what) {
    it.pass = false;
    ++it.violation_count;
    if (it.violations.size() < kViolationCap) it.violations.push_back(what);
}

bool rel_eq(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

// Reports, for each ball overlapping an earlier one, the pair of ids.
void overlaps(const std::vector<Ball>& balls, const std::vector<long long>& ids, const BallSpace& s,
              const std::function<void(long long, long long)>& report) {
    if (balls.empty()) return;
    const int n = static_cast<int>(balls[0].center.size());
    if (n == 1 && !s.torus) {
        std::vector<std::size_t> ord(balls.size());
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            return balls[a].center[0] - balls[a].radius < balls[b].center[0] - balls[b].radius;
        });
        double max_hi = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k : ord) {
            const Ball& b = balls[k];
            if (k != ord.front() && !balls_disjoint(b, balls[arg], s) && b.center[0] - b.radius < max_hi)
                report(ids[arg], ids[k]);
            double hi = b.center[0] + b.radius;
            if (hi > max_hi) {
                max_hi = hi;
                arg = k;
            }
        }
        return;
    }
    BallIndex idx(s, n);
    for (std::size_t k = 0; k < balls.size(); ++k) {
        bool hit = false;
        long long other = -1;
        idx.candidates(balls[k].center, balls[k].radius, [&](std::size_t slot) {
            if (hit) return;
            if (!balls_disjoint(balls[k], balls[idx.id(slot)], s)) {
                hit = true;
                other = ids[idx.id(slot)];
            }
        });
        if (hit) report(other, ids[k]);
        idx.insert(balls[k].center, balls[k].radius, k);
    }
}

// Union length of sorted disjoint intervals.
double total_length(const std::vector<std::pair<double, double>>& iv) {
    double s = 0.0;
    for (const auto& [a, b] : iv) s += b - a;
    return s;
}

}  // namespace

AuditReport verify_levels(const CantorTree& t, const CantorParams& p) {
    AuditReport rep;
    const BallSpace s = t.space;
    const auto& G = p.gauges;

    // P0
    AuditItem p0;
    p0.property = "P0";
    long long roots = 0;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
        const auto& nd = t.nodes[k];
        if (nd.level != 1) continue;
        ++roots;
        ++p0.checked;
        bool same = nd.parent < 0 && nd.ball.center.size() == p.domain.center.size() &&
                    rel_eq(nd.ball.radius, p.domain.radius);
        for (std::size_t i = 0; same && i < nd.ball.center.size(); ++i)
            same = std::abs(nd.ball.center[i] - p.domain.center[i]) <= 1e-12;
        if (!same) flag(p0, node_name(static_cast<long long>(k)) + ": level-1 ball differs from the domain");
    }
    if (roots != 1) flag(p0, "level 1 holds " + std::to_string(roots) + " balls");
    rep.items.push_back(p0);

    // P1
    AuditItem p1;
    p1.property = "P1";
    for (std::size_t b = 0; b < t.nodes.size(); ++b) {
        const auto& ch = t.nodes[b].children;
        if (ch.empty()) continue;
        std::vector<Ball> tri;
        tri.reserve(ch.size());
        for (long long c : ch) {
            Ball L3 = t.nodes[c].ball.dilate(3.0);
            ++p1.checked;
            if (!ball_contains(t.nodes[b].ball, L3, s)) flag(p1, node_name(c) + ": 3L not inside its parent");
            tri.push_back(std::move(L3));
        }
        overlaps(tri, ch, s, [&](long long a, long long c) {
            flag(p1, node_name(c) + ": 3L meets 3L of " + node_name(a));
        });
    }
    rep.items.push_back(p1);

    // P2
    AuditItem p2;
    p2.property = "P2";
    std::map<std::pair<long long, int>, std::vector<long long>> groups;
    for (std::size_t k = 0; k < t.pairs.size(); ++k) groups[{t.pairs[k].parent, t.pairs[k].sublevel}].push_back(k);
    const int n = static_cast<int>(p.domain.center.size());
    std::size_t mc_checked = 0;
    for (std::size_t k = 0; k < t.pairs.size(); ++k) {
        const auto& pr = t.pairs[k];
        const std::string tag = "pair " + std::to_string(k) + " (j=" + std::to_string(pr.j) + ")";
        ++p2.checked;
        const double u = p.upsilon(pr.j);
        if (!rel_eq(pr.upsilon, u)) flag(p2, tag + ": recorded radius is not the j-th radius");
        if (!rel_eq(pr.A.radius, p.tilde(pr.j))) flag(p2, tag + ": A radius differs from the transformed radius");
        if (pr.children.empty()) flag(p2, tag + ": empty C(A;j)");
        const SetModel F = p.seq.at(pr.j);
        std::vector<Ball> tri;
        for (long long c : pr.children) {
            const Ball& L = t.nodes[c].ball;
            if (!rel_eq(L.radius, u)) flag(p2, node_name(c) + ": radius differs from the j-th radius");
            if (distance_to_set(F, L.center) > 1e-9) flag(p2, node_name(c) + ": centre not on F_j");
            if (!ball_contains(pr.A, L.dilate(3.0), s)) flag(p2, node_name(c) + ": 3L not inside A");
            tri.push_back(L.dilate(3.0));
        }
        overlaps(tri, pr.children, s, [&](long long a, long long c) {
            flag(p2, node_name(c) + ": 3L meets 3L of " + node_name(a) + " within one C(A;j)");
        });
        const double vol_union = static_cast<double>(pr.children.size()) * ball_volume(n, u, s.metric);
        double inner = 0.0, outer = 0.0, sigma = 0.0;
        if (n == 1 && !s.torus && has_exact_1d(F)) {
            const double c = pr.A.center[0], r = pr.A.radius;
            inner = total_length(neighborhood_intervals_1d(F, u, c - r / 2, c + r / 2));
            outer = total_length(neighborhood_intervals_1d(F, u, c - r, c + r));
            sigma = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(c) + r) *
                    static_cast<double>(pr.children.size() + 1);
        } else {
            if (mc_checked >= 16) continue;
            ++mc_checked;
            Rng g(derive_seed(0x5EED, k));
            auto a = neighborhood_measure(F, pr.A.center, pr.A.radius / 2, u, 100000, g);
            auto b = neighborhood_measure(F, pr.A.center, pr.A.radius, u, 100000, g);
            inner = a.value;
            outer = b.value;
            sigma = 3.0 * std::max(a.std_error, b.std_error);
        }
        // Interval lengths lose precision relative to the centre coordinates; sigma
        // carries that ulp budget on the exact path and 3 standard errors otherwise.
        const double tol = 1e-9 * std::max({vol_union, inner, outer}) + sigma;
        if (inner > std::pow(7.0, n) * vol_union + tol) flag(p2, tag + ": neighbourhood of F_j in ½A exceeds 7^n vol(∪L)");
        if (vol_union > outer + tol) flag(p2, tag + ": vol(∪L) exceeds the neighbourhood of F_j in A");
    }
    for (const auto& [key, ids] : groups) {
        const Ball& B = t.nodes[key.first].ball;
        std::vector<Ball> tri;
        for (long long k : ids) {
            Ball A3 = t.pairs[k].A.dilate(3.0);
            if (!ball_contains(B, A3, s)) flag(p2, "pair " + std::to_string(k) + ": 3A not inside its parent");
            tri.push_back(std::move(A3));
        }
        overlaps(tri, ids, s, [&](long long a, long long c) {
            flag(p2, "pair " + std::to_string(c) + ": 3A meets 3A of pair " + std::to_string(a));
        });
    }
    rep.items.push_back(p2);

    // P3
    AuditItem p3;
    p3.property = "P3";
    for (const auto& [key, ids] : groups) {
        ++p3.checked;
        double sum = 0.0;
        for (long long k : ids) sum += G.g(t.pairs[k].A.radius);
        const double need = t.c6 * G.g(t.nodes[key.first].ball.radius);
        if (sum < need * (1.0 - 1e-12))
            flag(p3, node_name(key.first) + ", sublevel " + std::to_string(key.second) + ": g-sum " +
                         std::to_string(sum) + " below c6 g(r(B)) = " + std::to_string(need));
    }
    rep.items.push_back(p3);

    // P4
    AuditItem p4;
    p4.property = "P4";
    struct Span {
        double min_f = std::numeric_limits<double>::infinity(), min_h = min_f;
        double max_f = 0.0, max_h = 0.0;
        long long arg_max = -1;
    };
    std::map<std::pair<long long, int>, Span> spans;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
        const auto& nd = t.nodes[k];
        if (nd.parent < 0) continue;
        Span& sp = spans[{nd.parent, nd.sublevel}];
        const double f = G.f(nd.ball.radius), h = h_gauge(G, nd.ball.radius);
        sp.min_f = std::min(sp.min_f, f);
        sp.min_h = std::min(sp.min_h, h);
        if (f > sp.max_f) sp.arg_max = static_cast<long long>(k);
        sp.max_f = std::max(sp.max_f, f);
        sp.max_h = std::max(sp.max_h, h);
    }
    for (const auto& [key, sp] : spans) {
        auto prev = spans.find({key.first, key.second - 1});
        if (prev == spans.end()) continue;
        ++p4.checked;
        const double slack = 1.0 + 1e-12;
        if (sp.max_f > 0.5 * prev->second.min_f * slack || sp.max_h > 0.5 * prev->second.min_h * slack)
            flag(p4, node_name(sp.arg_max) + ": sublevel " + std::to_string(key.second) +
                         " ball not halved against sublevel " + std::to_string(key.second - 1));
    }
    rep.items.push_back(p4);

    // P5
    AuditItem p5;
    p5.property = "P5";
    int max_level = 1;
    for (const auto& nd : t.nodes) max_level = std::max(max_level, nd.level);
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
        const auto& nd = t.nodes[k];
        ++p5.checked;
        const long long want = sublevel_count(p, nd.ball, nd.parent < 0);
        if (nd.l_B != want)
            flag(p5, node_name(k) + ": recorded l_B " + std::to_string(nd.l_B) + " differs from formula " +
                         std::to_string(want));
        if (nd.parent >= 0 && want < 2) flag(p5, node_name(k) + ": l_B below 2 off the root");
        if (nd.level < max_level) {
            int built = 0;
            for (long long c : nd.children) built = std::max(built, t.nodes[c].sublevel);
            if (built != nd.l_B)
                flag(p5, node_name(k) + ": built " + std::to_string(built) + " sublevels, l_B is " +
                             std::to_string(nd.l_B));
        }
    }
    rep.items.push_back(p5);
    return rep;
}

// ---------------------------------------------------------------- ball mass

MassIndex::MassIndex(const CantorTree& t, const MassAssignment& mass)
    : t_(t), mass_(mass), index_(t.space, t.nodes.empty() ? 1 : static_cast<int>(t.nodes[0].ball.center.size())) {
    int deepest = 0;
    for (const auto& nd : t.nodes) deepest = std::max(deepest, nd.level);
    for (std::size_t k = 0; k < t.nodes.size(); ++k)
        if (t.nodes[k].level == deepest) leaves_.push_back(static_cast<long long>(k));
    line_ = !t.nodes.empty() && t.nodes[0].ball.center.size() == 1 && !t.space.torus;
    if (line_) {
        std::sort(leaves_.begin(), leaves_.end(),
                  [&](long long a, long long b) { return t.nodes[a].ball.center[0] < t.nodes[b].ball.center[0]; });
        lo_.resize(leaves_.size());
        max_r_.resize(leaves_.size() + 1, 0.0);
        for (std::size_t k = 0; k < leaves_.size(); ++k) lo_[k] = t.nodes[leaves_[k]].ball.center[0];
    } else {
        for (std::size_t k = 0; k < leaves_.size(); ++k)
            index_.insert(t.nodes[leaves_[k]].ball.center, t.nodes[leaves_[k]].ball.radius, k);
    }
    if (line_) {
        prefix_.assign(leaves_.size() + 1, 0.0);
        for (std::size_t k = 0; k < leaves_.size(); ++k) {
            prefix_[k + 1] = prefix_[k] + mass_.mu[leaves_[k]];
            max_r_[k + 1] = std::max(max_r_[k], t.nodes[leaves_[k]].ball.radius);
        }
    }
}

MassIndex::Query MassIndex::query(const Ball& D, bool collect) const {
    Query q;
    auto take = [&](long long id) {
        ++q.count;
        q.mass += mass_.mu[id];
        q.last = id;
        if (collect) q.ids.push_back(id);
    };
    if (leaves_.empty()) return q;
    if (line_) {
        const double c = D.center[0], r = D.radius, R = max_r_.back();
        auto lb = [&](double x) { return static_cast<std::size_t>(std::lower_bound(lo_.begin(), lo_.end(), x) - lo_.begin()); };
        auto ub = [&](double x) { return static_cast<std::size_t>(std::upper_bound(lo_.begin(), lo_.end(), x) - lo_.begin()); };
        // Centres strictly within r of c always meet D; the bands out to r + R are checked exactly.
        const std::size_t a = ub(c - r), b = lb(c + r);
        const std::size_t a0 = lb(c - r - R), b0 = ub(c + r + R);
        auto exact = [&](std::size_t k) {
            const Ball& L = t_.nodes[leaves_[k]].ball;
            if (std::abs(L.center[0] - c) < r + L.radius) take(leaves_[k]);
        };
        if (a >= b) {
            for (std::size_t k = a0; k < b0; ++k) exact(k);
            return q;
        }
        for (std::size_t k = a0; k < a; ++k) exact(k);
        if (collect) {
            for (std::size_t k = a; k < b; ++k) take(leaves_[k]);
        } else {
            q.count += b - a;
            q.mass += prefix_[b] - prefix_[a];
            q.last = leaves_[a];
        }
        for (std::size_t k = b; k < b0; ++k) exact(k);
        return q;
    }
    index_.candidates(D.center, D.radius, [&](std::size_t slot) {
        const long long id = leaves_[index_.id(slot)];
        if (!balls_disjoint(D, t_.nodes[id].ball, t_.space)) take(id);
    });
    return q;
}

double MassIndex::upper(const Ball& D) const { return query(D, false).mass; }

std::vector<long long> MassIndex::hits(const Ball& D) const { return query(D, true).ids; }

double ball_mass_upper(const CantorTree& t, const MassAssignment& mass, const Ball& D) {
    return MassIndex(t, mass).upper(D);
}

HolderResult holder_check(const CantorTree& t, const MassAssignment& mass, const CantorParams& p, std::size_t trials,
                          Rng& rng) {
    HolderResult out;
    out.trials = trials;
    MassIndex idx(t, mass);
    const auto& leaves = idx.leaves();
    if (leaves.empty() || trials == 0) return out;
    Vec cum(leaves.size());
    double acc = 0.0, r_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        acc += mass.mu[leaves[k]];
        cum[k] = acc;
        r_min = std::min(r_min, t.nodes[leaves[k]].ball.radius);
    }
    const double r_max = t.nodes[0].ball.radius;
    const Metric metric = t.space.metric;
    const std::uint64_t seed = rng.next();

    struct Part {
        double max_ratio = 0.0, single_max = 0.0;
        Ball worst;
        std::size_t counted = 0, single = 0;
    };
    std::vector<Part> parts(kPartitions);
    parallel_for(kPartitions, [&](std::size_t pi) {
        Rng g(derive_seed(seed, pi));
        Part& P = parts[pi];
        const std::size_t begin = trials * pi / kPartitions, end = trials * (pi + 1) / kPartitions;
        for (std::size_t k = begin; k < end; ++k) {
            const double u = g.uniform() * acc;
            std::size_t li = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            li = std::min(li, leaves.size() - 1);
            const double r = r_min == r_max ? r_max : std::exp(g.uniform(std::log(r_min), std::log(r_max)));
            Vec c = uniform_in_ball(t.nodes[leaves[li]].ball.center, r, metric, g);
            if (t.space.torus)
                for (auto& v : c) v = wrap01(v);
            Ball D{std::move(c), r};
            auto q = idx.query(D, false);
            const double ratio = q.mass * p.eta / p.gauges.f(r);
            if (q.count == 1 && r < t.nodes[q.last].ball.radius) {
                ++P.single;
                P.single_max = std::max(P.single_max, ratio);
                continue;
            }
            ++P.counted;
            if (ratio > P.max_ratio) {
                P.max_ratio = ratio;
                P.worst = D;
            }
        }
    });
    for (const auto& P : parts) {
        out.counted += P.counted;
        out.single_ball += P.single;
        out.single_ball_max_ratio = std::max(out.single_ball_max_ratio, P.single_max);
        if (P.max_ratio > out.max_ratio) {
            out.max_ratio = P.max_ratio;
            out.worst_ball = P.worst;
        }
    }
    out.hf_lower_bound = out.max_ratio > 0.0 ? p.eta / out.max_ratio : std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------- hash

namespace {
std::uint64_t fold(std::uint64_t h, std::uint64_t v) { return mix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6))); }
std::uint64_t fold(std::uint64_t h, double v) { return fold(h, std::bit_cast<std::uint64_t>(v)); }
std::uint64_t fold(std::uint64_t h, long long v) { return fold(h, static_cast<std::uint64_t>(v)); }
}  // namespace

std::uint64_t tree_hash(const CantorTree& t) {
    std::uint64_t h = 0x7EE5;
    h = fold(h, static_cast<long long>(t.nodes.size()));
    for (const auto& nd : t.nodes) {
        for (double x : nd.ball.center) h = fold(h, x);
        h = fold(h, nd.ball.radius);
        h = fold(h, static_cast<long long>(nd.level));
        h = fold(h, nd.parent);
        h = fold(h, static_cast<long long>(nd.sublevel));
        h = fold(h, nd.pair);
        h = fold(h, nd.j);
        h = fold(h, nd.l_B);
    }
    for (const auto& pr : t.pairs) {
        for (double x : pr.A.center) h = fold(h, x);
        h = fold(h, pr.A.radius);
        h = fold(h, pr.j);
        h = fold(h, pr.parent);
    }
    return h;
}

}  // namespace mtp
