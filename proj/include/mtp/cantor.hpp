#pragma once

#include "mtp/covering.hpp"
#include "mtp/dimfun.hpp"

#include <string>
#include <vector>

namespace mtp {

enum class GrowthCase { a_ratio_to_infinity, b_ratio_to_zero, c_ratio_to_limit };
std::string to_string(GrowthCase c);

// Case split on f/g as r -> 0. Exact for power gauges, grid-based otherwise.
GrowthCase classify_case(const GaugePair& p);

struct CantorParams {
    Ball domain{{0.5}, 0.5};
    GaugePair gauges;
    double eta = 2.0;
    SetSequence seq;
    RadiusRule upsilon;  // Υ_j
    int depth = 3;
    long long G_floor = 1;
    long long j_max = 1000000000LL;
    // H^g(B) is modelled as c1 * g(r(B)); c2, lambda, d2, c5, c7 enter c6 and ε(B).
    double c1 = 2.0;
    double c2 = 2.0;
    double c5 = 0.32;
    double c7 = 5.0;
    double d2 = 1.0;
    double target_margin = 0.25;
    std::size_t min_balls = 2;
    double pool_factor = 2.0;
    std::size_t max_pool = 8000000;
    std::size_t max_nodes = 4000000;
    int max_sublevels = 64;
    std::size_t net_candidates = 10000;

    double c6() const;
    double tilde(long long j) const;  // Ῡ_j
};

struct CantorNode {
    Ball ball;
    int level = 1;
    long long parent = -1;
    int sublevel = 0;
    long long pair = -1;  // index into CantorTree::pairs
    long long j = 0;
    long long l_B = 0;     // P5 formula value
    double epsilon = 0.0;  // ε(B); infinite when l_B = 1
    std::vector<long long> children;
};

// One (A;j) with its C(A;j) children.
struct PairRecord {
    Ball A;
    long long j = 0;
    double upsilon = 0.0;
    long long parent = -1;
    int sublevel = 0;
    long long host = -1;  // index into the sublevel's host list
    std::vector<long long> children;
};

struct SublevelRecord {
    long long parent = -1;
    int index = 0;
    long long G = 0;
    long long n0 = 0;
    double host_radius = 0.0;
    std::size_t hosts = 0;
    std::size_t pool = 0;
    double weight = 0.0;
    double target = 0.0;
};

struct CantorTree {
    std::vector<CantorNode> nodes;
    std::vector<PairRecord> pairs;
    std::vector<SublevelRecord> sublevels;
    double c6 = 0.0;
    int depth = 1;
    BallSpace space;
    std::vector<std::string> notices;
};

struct MassAssignment {
    std::vector<double> mu;
};

// Throws UnsupportedError for cases (b) and (c), CoverageShortfall naming the
// node and sublevel, NumericError when the G' search passes j_max.
CantorTree build_cantor(const CantorParams& p, Rng& rng);

// l_B by the P5 formula, root or non-root form.
long long sublevel_count(const CantorParams& p, const Ball& B, bool root);
double epsilon_of(const CantorParams& p, const Ball& B, long long l_B);

MassAssignment assign_mass(const CantorTree& t, const CantorParams& p);

struct AuditItem {
    std::string property;
    bool pass = true;
    std::size_t checked = 0;
    std::vector<std::string> violations;  // capped list, one per offending node
    std::size_t violation_count = 0;
};

struct AuditReport {
    std::vector<AuditItem> items;
    bool all_pass() const;
    const AuditItem& at(const std::string& property) const;
};

AuditReport verify_levels(const CantorTree& t, const CantorParams& p);

// Σ μ(L) over deepest-level balls meeting D.
class MassIndex {
public:
    MassIndex(const CantorTree& t, const MassAssignment& mass);
    struct Query {
        double mass = 0.0;
        std::size_t count = 0;
        long long last = -1;  // some leaf meeting D
        std::vector<long long> ids;
    };
    Query query(const Ball& D, bool collect) const;
    double upper(const Ball& D) const;
    // Deepest balls meeting D.
    std::vector<long long> hits(const Ball& D) const;
    const std::vector<long long>& leaves() const { return leaves_; }

private:
    const CantorTree& t_;
    const MassAssignment& mass_;
    std::vector<long long> leaves_;
    bool line_ = false;
    Vec lo_;      // 1-D: leaves sorted by centre
    Vec max_r_;   // 1-D: running max radius up to each position
    Vec prefix_;  // 1-D: prefix sums of leaf mass
    BallIndex index_;
};

double ball_mass_upper(const CantorTree& t, const MassAssignment& mass, const Ball& D);

struct HolderResult {
    double max_ratio = 0.0;
    Ball worst_ball;
    std::size_t trials = 0;
    std::size_t counted = 0;
    std::size_t single_ball = 0;       // D inside a lone leaf smaller than it; not resolved at this depth
    double single_ball_max_ratio = 0.0;
    double hf_lower_bound = 0.0;       // eta / max_ratio
};

HolderResult holder_check(const CantorTree& t, const MassAssignment& mass, const CantorParams& p, std::size_t trials,
                          Rng& rng);

std::uint64_t tree_hash(const CantorTree& t);

}  // namespace mtp
