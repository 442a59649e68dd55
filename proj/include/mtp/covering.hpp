#pragma once

#include "mtp/sets.hpp"

#include <functional>
#include <unordered_map>
#include <map>
#include <vector>

namespace mtp {

// Metric plus optional torus wrapping, shared by every ball predicate.
struct BallSpace {
    Metric metric = Metric::sup;
    bool torus = false;
    double dist(VecView a, VecView b) const { return torus ? torus_dist(a, b, metric) : mtp::dist(a, b, metric); }
    static BallSpace of(const SetModel& m) { return {m.metric, m.torus}; }
};

// Open ball.
struct Ball {
    Vec center;
    double radius = 0.0;
    Ball dilate(double a) const { return {center, a * radius}; }
};

struct IndexedBall {
    Ball ball;
    long long j = 0;
};

struct BallFamily {
    std::vector<IndexedBall> balls;
    BallSpace space;
};

bool balls_disjoint(const Ball& a, const Ball& b, const BallSpace& s);
bool ball_contains(const Ball& outer, const Ball& inner, const BallSpace& s);

// Multi-level uniform grid over stored balls; level k holds balls with
// 2r <= 2^k. Hash collisions only add candidates, callers filter exactly.
class BallIndex {
public:
    explicit BallIndex(BallSpace space, int dim) : space_(space), dim_(dim) {}
    void insert(VecView c, double r, std::size_t id);
    // Calls fn(id) for every stored ball whose centre may lie within r + r_stored of c.
    void candidates(VecView c, double r, const std::function<void(std::size_t)>& fn) const;
    bool any_intersect(VecView c, double r) const;
    std::size_t size() const { return radii_.size(); }
    std::size_t id(std::size_t slot) const { return ids_[slot]; }
    double radius(std::size_t slot) const { return radii_[slot]; }
    VecView center(std::size_t slot) const { return {centers_.data() + slot * dim_, static_cast<std::size_t>(dim_)}; }

private:
    struct Level {
        double cell;
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;
        std::vector<std::uint32_t> all;
    };
    std::uint64_t key(int level, const std::vector<long long>& idx) const;
    BallSpace space_;
    int dim_;
    std::map<int, Level> levels_;
    Vec centers_;
    Vec radii_;
    std::vector<std::size_t> ids_;
};

// Greedy 5r selection: descending radius, ties by input order. Returns input indices.
std::vector<std::size_t> five_r_select(const BallFamily& fam);
BallFamily five_r_cover(const BallFamily& fam);

struct NetResult {
    std::vector<Vec> points;
    std::size_t pool_size = 0;
    bool exact_pool = false;     // pool is all of F ∩ region (finite F)
    bool pool_maximal = true;    // every pool point lies within sep of a net point
};

NetResult separated_net(const SetModel& m, const Ball& region, double sep, std::size_t candidates, Rng& rng);

struct CajResult {
    std::vector<IndexedBall> balls;
    NetResult net;
};

// C(A;j): radius-upsilon balls centred on a 6*upsilon-separated net of F ∩ ½A.
CajResult build_caj(const Ball& A, long long j, const SetModel& m, double upsilon, Rng& rng,
                    std::size_t candidates = 10000);

// Sequence of sets F_j. `points` kind: F_j is the single j-th Halton point
// (van der Corput when n = 1) scaled to `box`; `constant` kind: F_j = model.
struct SetSequence {
    enum class Kind { points, constant };
    Kind kind = Kind::points;
    int dim = 1;
    Box box{{0.0}, {1.0}};
    std::optional<SetModel> model;
    BallSpace space;

    Vec point(long long j) const;
    SetModel at(long long j) const;
};

double radical_inverse(unsigned long long j, unsigned base);

// Radius rule r_j = (c*j)^(-p) (power) or c * p^(-j) (geometric).
struct RadiusRule {
    enum class Kind { power, geometric };
    Kind kind = Kind::power;
    double c = 1.0;
    double p = 1.0;
    double operator()(long long j) const;
};

struct MultiKgbResult {
    std::vector<std::vector<IndexedBall>> per_ball;  // selected A's, grouped by host ball
    double achieved = 0.0;                           // accumulated weight
    long long n0 = 0;                                // last index scanned
    bool reached = false;
};

// K_{G,B} built jointly for disjoint host balls: scans j = G..j_max, takes
// candidates B(x, 3 r_j) inside a host with x on F_j, keeps those disjoint from
// all earlier picks (the greedy 5r pass, since radii are non-increasing) and
// stops once the summed weight(r_j) of the picks reaches `target`.
MultiKgbResult build_kgb_multi(const std::vector<Ball>& hosts, long long G, const SetSequence& seq,
                               const std::function<double(long long)>& tilde, long long j_max,
                               const std::function<double(double)>& weight, double target, Rng& rng,
                               std::size_t pool = 10000);

struct KgbResult {
    std::vector<IndexedBall> balls;
    double achieved_fraction = 0.0;  // vol(∪A) / (c5 vol(B))
    long long n0 = 0;
};

// Throws CoverageShortfall when vol(∪A) < target_fraction * c5 * vol(B) by j_max.
KgbResult build_kgb(const Ball& B, long long G, const SetSequence& seq, const RadiusRule& tilde, long long j_max,
                    double target_fraction, double c5, Rng& rng, std::size_t pool = 10000);

}  // namespace mtp
