#include "mtp/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mtp {

namespace {

const Json& field(const Json& j, const std::string& key) {
    if (!j.is_object()) throw ArgumentError("config: expected an object holding '" + key + "'");
    auto it = j.find(key);
    if (it == j.end()) throw ArgumentError("config: missing '" + key + "'");
    return *it;
}

double as_real(const Json& v, const std::string& key) {
    if (!v.is_number()) throw ArgumentError("config: '" + key + "' must be a number");
    return v.get<double>();
}

Vec as_vec(const Json& v, const std::string& key) {
    if (!v.is_array()) throw ArgumentError("config: '" + key + "' must be an array of numbers");
    Vec out;
    for (const auto& x : v) out.push_back(as_real(x, key));
    return out;
}

std::vector<Vec> as_vecs(const Json& v, const std::string& key) {
    if (!v.is_array()) throw ArgumentError("config: '" + key + "' must be an array of arrays");
    std::vector<Vec> out;
    for (const auto& x : v) out.push_back(as_vec(x, key));
    return out;
}

Json vecs(const std::vector<Vec>& v) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(x);
    return a;
}

// JSON has no infinity; null stands for it.
Json real_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
double real_from_nullable(const Json& v) { return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>(); }

}  // namespace

double get_real(const Json& j, const std::string& key) { return as_real(field(j, key), key); }
double get_real(const Json& j, const std::string& key, double fallback) {
    return j.contains(key) ? get_real(j, key) : fallback;
}
long long get_int(const Json& j, const std::string& key) {
    const Json& v = field(j, key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && std::abs(v.get<double>()) < 9e18)
        return static_cast<long long>(v.get<double>());
    throw ArgumentError("config: '" + key + "' must be an integer");
}
long long get_int(const Json& j, const std::string& key, long long fallback) {
    return j.contains(key) ? get_int(j, key) : fallback;
}
bool get_bool(const Json& j, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_boolean()) throw ArgumentError("config: '" + key + "' must be true or false");
    return v.get<bool>();
}
std::string get_string(const Json& j, const std::string& key) {
    const Json& v = field(j, key);
    if (!v.is_string()) throw ArgumentError("config: '" + key + "' must be a string");
    return v.get<std::string>();
}
std::string get_string(const Json& j, const std::string& key, const std::string& fallback) {
    return j.contains(key) ? get_string(j, key) : fallback;
}
Vec get_vec(const Json& j, const std::string& key) { return as_vec(field(j, key), key); }
const Json& get_object(const Json& j, const std::string& key) {
    const Json& v = field(j, key);
    if (!v.is_object()) throw ArgumentError("config: '" + key + "' must be an object");
    return v;
}

std::vector<double> grid_from_json(const Json& j, const std::string& key) {
    const Json& v = field(j, key);
    if (v.is_array()) return as_vec(v, key);
    if (v.is_object() && v.contains("base")) {
        const double b = get_real(v, "base");
        const long long from = get_int(v, "from"), to = get_int(v, "to");
        if (!(b > 1.0) || to < from) throw ArgumentError("config: '" + key + "' needs base > 1 and from <= to");
        std::vector<double> out;
        for (long long k = from; k <= to; ++k) out.push_back(std::pow(b, -static_cast<double>(k)));
        return out;
    }
    if (v.is_object()) {
        const double lo = get_real(v, "lo"), hi = get_real(v, "hi");
        const long long count = get_int(v, "count");
        if (!(lo > 0.0 && hi > lo) || count < 2) throw ArgumentError("config: '" + key + "' needs 0 < lo < hi, count >= 2");
        return logspace(lo, hi, static_cast<int>(count));
    }
    throw ArgumentError("config: '" + key + "' must be an array or a grid object");
}

Metric metric_from_string(const std::string& s) {
    if (s == "sup") return Metric::sup;
    if (s == "euclidean") return Metric::euclidean;
    throw ArgumentError("config: metric must be 'sup' or 'euclidean', got '" + s + "'");
}

std::string to_string(Metric m) { return m == Metric::sup ? "sup" : "euclidean"; }

// ---------------------------------------------------------------- point clouds

std::vector<Vec> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open point file '" + path + "'");
    std::vector<Vec> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        Vec row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ArgumentError("point file '" + path + "': bad number '" + cell + "'");
            }
        }
        if (!out.empty() && row.size() != out[0].size()) throw ArgumentError("point file '" + path + "': ragged rows");
        out.push_back(std::move(row));
    }
    if (out.empty()) throw ArgumentError("point file '" + path + "' holds no points");
    return out;
}

void write_points_csv(const std::string& path, const std::vector<Vec>& pts) {
    std::ofstream o(path);
    if (!o) throw ArgumentError("cannot write point file '" + path + "'");
    o.precision(17);
    for (const auto& p : pts) {
        for (std::size_t i = 0; i < p.size(); ++i) o << (i ? "," : "") << p[i];
        o << '\n';
    }
}

// ---------------------------------------------------------------- models

Json to_json(const SetModel& m) {
    Json j;
    j["variant"] = m.variant_name();
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointSet>) {
                j["points"] = vecs(s.points);
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                j["base"] = s.base;
                j["basis"] = vecs(s.basis);
            } else if constexpr (std::is_same_v<T, Sphere>) {
                j["center"] = s.center;
                j["radius"] = s.radius;
            } else if constexpr (std::is_same_v<T, Polyline>) {
                j["vertices"] = vecs(s.vertices);
            } else {
                Json maps = Json::array();
                for (const auto& f : s.maps) {
                    Json mj;
                    mj["ratio"] = f.ratio;
                    if (!f.orth.is_identity()) {
                        std::vector<Vec> rows(f.orth.n, Vec(f.orth.n));
                        for (int r = 0; r < f.orth.n; ++r)
                            for (int c = 0; c < f.orth.n; ++c) rows[r][c] = f.orth(r, c);
                        mj["orth"] = vecs(rows);
                    }
                    mj["shift"] = f.shift;
                    maps.push_back(mj);
                }
                j["maps"] = maps;
                j["osc"] = s.osc_declared;
            }
        },
        m.shape);
    j["metric"] = to_string(m.metric);
    j["torus"] = m.torus;
    if (m.window) j["window"] = Json{{"lo", m.window->lo}, {"hi", m.window->hi}};
    return j;
}

SetModel model_from_json(const Json& j) {
    const std::string type = get_string(j, "variant");
    const Metric metric = metric_from_string(get_string(j, "metric", "sup"));
    SetModel m;
    if (type == "points") {
        if (j.contains("csv") == j.contains("points")) throw ArgumentError("config: points need exactly one of 'points' or 'csv'");
        m = make_points(j.contains("csv") ? read_points_csv(get_string(j, "csv")) : as_vecs(field(j, "points"), "points"),
                        metric);
    } else if (type == "plane") {
        m = make_plane(get_vec(j, "base"), as_vecs(field(j, "basis"), "basis"), metric);
    } else if (type == "sphere") {
        m = make_sphere(get_vec(j, "center"), get_real(j, "radius"), metric);
    } else if (type == "polyline") {
        m = make_polyline(as_vecs(field(j, "vertices"), "vertices"), metric);
    } else if (type == "ifs") {
        IFS ifs;
        if (j.contains("name")) {
            const std::string name = get_string(j, "name");
            if (name == "middle_third_cantor") ifs = IFS::middle_third_cantor();
            else if (name == "sierpinski") ifs = IFS::sierpinski();
            else throw ArgumentError("config: unknown IFS name '" + name + "'");
        } else {
            const Json& maps = field(j, "maps");
            if (!maps.is_array() || maps.empty()) throw ArgumentError("config: 'maps' must be a non-empty array");
            for (const auto& mj : maps) {
                Similarity s;
                s.ratio = get_real(mj, "ratio");
                s.shift = get_vec(mj, "shift");
                const int n = static_cast<int>(s.shift.size());
                s.orth = Mat::identity(n);
                if (mj.contains("orth")) {
                    auto rows = as_vecs(mj.at("orth"), "orth");
                    if (static_cast<int>(rows.size()) != n) throw ArgumentError("config: 'orth' must be n x n");
                    for (int r = 0; r < n; ++r) {
                        if (static_cast<int>(rows[r].size()) != n) throw ArgumentError("config: 'orth' must be n x n");
                        for (int c = 0; c < n; ++c) s.orth(r, c) = rows[r][c];
                    }
                }
                ifs.maps.push_back(std::move(s));
            }
            ifs.osc_declared = get_bool(j, "osc", false);
        }
        m = make_ifs(std::move(ifs), metric);
    } else {
        throw ArgumentError("config: unknown model type '" + type + "'");
    }
    m.torus = get_bool(j, "torus", false);
    if (j.contains("window")) {
        const Json& w = j.at("window");
        m.window = Box{get_vec(w, "lo"), get_vec(w, "hi")};
        if (m.window->dim() != m.dim || static_cast<int>(m.window->hi.size()) != m.dim)
            throw ArgumentError("config: window dimension differs from the model");
    }
    validate(m);
    return m;
}

// ---------------------------------------------------------------- gauges

Json to_json(const Gauge& g) {
    if (g.is_power()) return Json{{"kind", "power"}, {"s", g.s}, {"coef", g.coef}};
    Json s = Json::array();
    for (const auto& [r, v] : g.samples) s.push_back(Json::array({r, v}));
    return Json{{"kind", "tabulated"}, {"samples", s}};
}

Gauge gauge_from_json(const Json& j) {
    const std::string kind = get_string(j, "kind", "power");
    if (kind == "power") return Gauge::power(get_real(j, "s"), get_real(j, "coef", 1.0));
    if (kind == "tabulated") {
        std::vector<std::pair<double, double>> s;
        for (const auto& row : as_vecs(field(j, "samples"), "samples")) {
            if (row.size() != 2) throw ArgumentError("config: tabulated samples are [r, value] pairs");
            s.emplace_back(row[0], row[1]);
        }
        return Gauge::tabulated(std::move(s));
    }
    throw ArgumentError("config: gauge kind must be 'power' or 'tabulated'");
}

Json to_json(const GaugePair& p) {
    return Json{{"f", to_json(p.f)}, {"g", to_json(p.g)}, {"kappa", p.kappa}, {"lambda", p.lambda}};
}

GaugePair gauge_pair_from_json(const Json& j) {
    GaugePair p;
    p.f = gauge_from_json(get_object(j, "f"));
    p.g = gauge_from_json(get_object(j, "g"));
    p.kappa = get_real(j, "kappa", 0.0);
    p.lambda = get_real(j, "lambda", 2.0);
    if (!(p.kappa >= 0.0 && p.kappa < 1.0)) throw DomainError("config: kappa must lie in [0,1)");
    return p;
}

Json to_json(const Ball& b) { return Json{{"center", b.center}, {"radius", b.radius}}; }

Ball ball_from_json(const Json& j) {
    Ball b{get_vec(j, "center"), get_real(j, "radius")};
    if (!(b.radius > 0.0)) throw DomainError("config: ball radius must be positive");
    return b;
}

Json to_json(const ScalingFit& f) {
    return Json{{"exponent", f.exponent},
                {"exponent_stderr", f.exponent_stderr},
                {"intercept", f.intercept},
                {"residual_max", f.residual_max}};
}

Json to_json(const GaugeReport& r) {
    return Json{{"monotone_ok", r.monotone_ok},
                {"doubling_lambda_estimate", r.doubling_lambda_estimate},
                {"ratio_direction", to_string(r.ratio_direction)},
                {"f_over_g_kappa_ok", r.f_over_g_kappa_ok},
                {"issues", r.issues}};
}

// ---------------------------------------------------------------- sequences

Json to_json(const RadiusRule& r) {
    return Json{{"kind", r.kind == RadiusRule::Kind::power ? "power" : "geometric"}, {"c", r.c}, {"p", r.p}};
}

RadiusRule radius_rule_from_json(const Json& j) {
    RadiusRule r;
    const std::string kind = get_string(j, "kind", "power");
    if (kind == "power") r.kind = RadiusRule::Kind::power;
    else if (kind == "geometric") r.kind = RadiusRule::Kind::geometric;
    else throw ArgumentError("config: radius rule kind must be 'power' or 'geometric'");
    r.c = get_real(j, "c", 1.0);
    r.p = get_real(j, "p");
    if (!(r.c > 0.0 && r.p > 0.0)) throw DomainError("config: radius rule needs c > 0 and p > 0");
    if (r.kind == RadiusRule::Kind::geometric && !(r.p > 1.0)) throw DomainError("config: geometric radius rule needs p > 1");
    return r;
}

Json to_json(const SetSequence& s) {
    Json j;
    j["kind"] = s.kind == SetSequence::Kind::points ? "points" : "constant";
    j["dim"] = s.dim;
    j["box"] = Json{{"lo", s.box.lo}, {"hi", s.box.hi}};
    if (s.model) j["model"] = to_json(*s.model);
    j["metric"] = to_string(s.space.metric);
    j["torus"] = s.space.torus;
    return j;
}

SetSequence sequence_from_json(const Json& j) {
    SetSequence s;
    const std::string kind = get_string(j, "kind", "points");
    s.space.metric = metric_from_string(get_string(j, "metric", "sup"));
    s.space.torus = get_bool(j, "torus", false);
    if (kind == "points") {
        s.kind = SetSequence::Kind::points;
        s.dim = static_cast<int>(get_int(j, "dim", 1));
        if (s.dim < 1) throw RangeError("config: sequence dim must be >= 1");
        if (j.contains("box")) s.box = Box{get_vec(j.at("box"), "lo"), get_vec(j.at("box"), "hi")};
        else s.box = Box{Vec(s.dim, 0.0), Vec(s.dim, 1.0)};
        if (s.box.dim() != s.dim || static_cast<int>(s.box.hi.size()) != s.dim)
            throw ArgumentError("config: sequence box dimension differs from dim");
    } else if (kind == "constant") {
        s.kind = SetSequence::Kind::constant;
        s.model = model_from_json(get_object(j, "model"));
        s.dim = s.model->dim;
        s.box = Box{Vec(s.dim, 0.0), Vec(s.dim, 1.0)};
        s.space = BallSpace::of(*s.model);
    } else {
        throw ArgumentError("config: sequence kind must be 'points' or 'constant'");
    }
    return s;
}

// ---------------------------------------------------------------- cantor

Json to_json(const CantorParams& p) {
    return Json{{"domain", to_json(p.domain)},
                {"gauges", to_json(p.gauges)},
                {"eta", p.eta},
                {"sequence", to_json(p.seq)},
                {"upsilon", to_json(p.upsilon)},
                {"depth", p.depth},
                {"G_floor", p.G_floor},
                {"j_max", p.j_max},
                {"c1", p.c1},
                {"c2", p.c2},
                {"c5", p.c5},
                {"c7", p.c7},
                {"d2", p.d2},
                {"target_margin", p.target_margin},
                {"min_balls", p.min_balls},
                {"pool_factor", p.pool_factor},
                {"max_pool", p.max_pool},
                {"max_nodes", p.max_nodes},
                {"max_sublevels", p.max_sublevels},
                {"net_candidates", p.net_candidates}};
}

CantorParams cantor_params_from_json(const Json& j) {
    CantorParams p;
    p.domain = ball_from_json(get_object(j, "domain"));
    p.gauges = gauge_pair_from_json(get_object(j, "gauges"));
    p.eta = get_real(j, "eta");
    p.seq = sequence_from_json(get_object(j, "sequence"));
    p.upsilon = radius_rule_from_json(get_object(j, "upsilon"));
    p.depth = static_cast<int>(get_int(j, "depth", p.depth));
    p.G_floor = get_int(j, "G_floor", p.G_floor);
    p.j_max = get_int(j, "j_max", p.j_max);
    p.c1 = get_real(j, "c1", p.c1);
    p.c2 = get_real(j, "c2", p.c2);
    p.c5 = get_real(j, "c5", p.c5);
    p.c7 = get_real(j, "c7", p.c7);
    p.d2 = get_real(j, "d2", p.d2);
    p.target_margin = get_real(j, "target_margin", p.target_margin);
    auto count = [&](const std::string& key, std::size_t fallback) {
        long long v = get_int(j, key, static_cast<long long>(fallback));
        if (v < 1) throw RangeError("config: '" + key + "' must be >= 1");
        return static_cast<std::size_t>(v);
    };
    p.min_balls = count("min_balls", p.min_balls);
    p.pool_factor = get_real(j, "pool_factor", p.pool_factor);
    p.max_pool = count("max_pool", p.max_pool);
    p.max_nodes = count("max_nodes", p.max_nodes);
    p.max_sublevels = static_cast<int>(count("max_sublevels", static_cast<std::size_t>(p.max_sublevels)));
    p.net_candidates = count("net_candidates", p.net_candidates);
    if (!(p.eta > 1.0)) throw DomainError("config: eta must exceed 1");
    return p;
}

Json to_json(const CantorTree& t) {
    Json nodes = Json::array();
    for (const auto& nd : t.nodes) {
        Json ch = Json::array();
        nodes.push_back(Json{{"center", nd.ball.center},
                             {"radius", nd.ball.radius},
                             {"level", nd.level},
                             {"parent", nd.parent},
                             {"sublevel", nd.sublevel},
                             {"pair", nd.pair},
                             {"j", nd.j},
                             {"l_B", nd.l_B},
                             {"epsilon", real_or_null(nd.epsilon)}});
    }
    Json pairs = Json::array();
    for (const auto& pr : t.pairs)
        pairs.push_back(Json{{"A", to_json(pr.A)},
                             {"j", pr.j},
                             {"upsilon", pr.upsilon},
                             {"parent", pr.parent},
                             {"sublevel", pr.sublevel},
                             {"host", pr.host},
                             {"children", pr.children}});
    Json subs = Json::array();
    for (const auto& s : t.sublevels)
        subs.push_back(Json{{"parent", s.parent},
                            {"index", s.index},
                            {"G", s.G},
                            {"n0", s.n0},
                            {"host_radius", s.host_radius},
                            {"hosts", s.hosts},
                            {"pool", s.pool},
                            {"weight", s.weight},
                            {"target", s.target}});
    return Json{{"c6", t.c6},
                {"depth", t.depth},
                {"metric", to_string(t.space.metric)},
                {"torus", t.space.torus},
                {"notices", t.notices},
                {"sublevels", subs},
                {"pairs", pairs},
                {"nodes", nodes}};
}

CantorTree tree_from_json(const Json& j) {
    CantorTree t;
    t.c6 = get_real(j, "c6");
    t.depth = static_cast<int>(get_int(j, "depth"));
    t.space.metric = metric_from_string(get_string(j, "metric", "sup"));
    t.space.torus = get_bool(j, "torus", false);
    if (j.contains("notices"))
        for (const auto& s : j.at("notices")) t.notices.push_back(s.get<std::string>());
    for (const auto& s : field(j, "sublevels")) {
        SublevelRecord r;
        r.parent = get_int(s, "parent");
        r.index = static_cast<int>(get_int(s, "index"));
        r.G = get_int(s, "G");
        r.n0 = get_int(s, "n0");
        r.host_radius = get_real(s, "host_radius");
        r.hosts = static_cast<std::size_t>(get_int(s, "hosts"));
        r.pool = static_cast<std::size_t>(get_int(s, "pool"));
        r.weight = get_real(s, "weight");
        r.target = get_real(s, "target");
        t.sublevels.push_back(r);
    }
    for (const auto& s : field(j, "pairs")) {
        PairRecord pr;
        pr.A = ball_from_json(get_object(s, "A"));
        pr.j = get_int(s, "j");
        pr.upsilon = get_real(s, "upsilon");
        pr.parent = get_int(s, "parent");
        pr.sublevel = static_cast<int>(get_int(s, "sublevel"));
        pr.host = get_int(s, "host");
        for (const auto& c : field(s, "children")) pr.children.push_back(c.get<long long>());
        t.pairs.push_back(std::move(pr));
    }
    const Json& nodes = field(j, "nodes");
    for (const auto& s : nodes) {
        CantorNode nd;
        nd.ball = Ball{get_vec(s, "center"), get_real(s, "radius")};
        nd.level = static_cast<int>(get_int(s, "level"));
        nd.parent = get_int(s, "parent");
        nd.sublevel = static_cast<int>(get_int(s, "sublevel"));
        nd.pair = get_int(s, "pair");
        nd.j = get_int(s, "j");
        nd.l_B = get_int(s, "l_B");
        nd.epsilon = real_from_nullable(field(s, "epsilon"));
        t.nodes.push_back(std::move(nd));
    }
    const long long count = static_cast<long long>(t.nodes.size());
    for (long long k = 0; k < count; ++k) {
        const long long par = t.nodes[k].parent;
        if (par >= count || par >= k) throw ArgumentError("tree: parent index out of order at node " + std::to_string(k));
        if (par >= 0) t.nodes[par].children.push_back(k);
        const long long pr = t.nodes[k].pair;
        if (pr >= static_cast<long long>(t.pairs.size())) throw ArgumentError("tree: pair index out of range");
    }
    return t;
}

Json to_json(const AuditReport& r) {
    Json items = Json::array();
    for (const auto& it : r.items)
        items.push_back(Json{{"property", it.property},
                             {"pass", it.pass},
                             {"checked", it.checked},
                             {"violation_count", it.violation_count},
                             {"violations", it.violations}});
    return Json{{"all_pass", r.all_pass()}, {"items", items}};
}

Json to_json(const HolderResult& h) {
    return Json{{"max_ratio", h.max_ratio},
                {"worst_ball", to_json(h.worst_ball)},
                {"trials", h.trials},
                {"counted", h.counted},
                {"single_ball", h.single_ball},
                {"single_ball_max_ratio", h.single_ball_max_ratio},
                {"hf_lower_bound", real_or_null(h.hf_lower_bound)}};
}

// ---------------------------------------------------------------- randomsim

Json to_json(const RandomScheme& s) {
    return Json{{"model", to_json(s.base)},
                {"tau", s.tau},
                {"s", s.s},
                {"kappa", s.kappa},
                {"rotations", s.rotations}};
}

RandomScheme scheme_from_json(const Json& j) {
    RandomScheme s;
    s.base = model_from_json(get_object(j, "model"));
    s.tau = get_real(j, "tau");
    s.s = get_real(j, "s", static_cast<double>(s.base.dim));
    s.kappa = get_real(j, "kappa", 0.0);
    s.rotations = get_bool(j, "rotations", false);
    return s;
}

}  // namespace mtp
