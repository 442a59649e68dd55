#include "mtp/app.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mtp {

namespace fs = std::filesystem;

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"fit-lsp", "boxdim",       "minkowski",     "transform",
                                                "cover",   "cantor-build", "cantor-verify", "randsim"};
    return names;
}

std::string num(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string num(long long x) { return std::to_string(x); }

std::string Table::csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out += ',';
            out += cells[k];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ArgumentError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

void apply_override(Json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--set expects KEY=VALUE, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::exception&) {
        value = text;
    }
    Json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ArgumentError("--set: empty path segment in '" + path + "'");
        if (!node->is_object()) throw ArgumentError("--set: '" + path + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ArgumentError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ArgumentError(where + ": unknown key '" + it.key() + "'");
}

std::uint64_t seed_of(const Json& j) {
    if (!j.contains("master_seed")) throw ArgumentError("config: master_seed is required for this command");
    const Json& v = j.at("master_seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ArgumentError("config: master_seed must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::size_t get_count(const Json& j, const std::string& key, long long fallback, long long min = 1) {
    const long long v = get_int(j, key, fallback);
    if (v < min) throw RangeError("config: '" + key + "' must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

// Integer lists: explicit array or {"base","from","to"} for base^from .. base^to.
std::vector<long long> int_list(const Json& j, const std::string& key) {
    const Json& v = j.at(key);
    std::vector<long long> out;
    if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_number_integer()) throw ArgumentError("config: '" + key + "' entries must be integers");
            out.push_back(x.get<long long>());
        }
        return out;
    }
    const long long b = get_int(v, "base"), from = get_int(v, "from"), to = get_int(v, "to");
    if (b < 2 || from < 0 || to < from || to > 40) throw ArgumentError("config: '" + key + "' needs base >= 2, 0 <= from <= to <= 40");
    long long x = 1;
    for (long long k = 0; k < from; ++k) x *= b;
    for (long long k = from; k <= to; ++k, x *= b) out.push_back(x);
    return out;
}

Json ball_family_json(const std::vector<IndexedBall>& balls) {
    Json a = Json::array();
    for (const auto& b : balls) a.push_back(Json{{"c", b.ball.center}, {"r", b.ball.radius}, {"j", b.j}});
    return a;
}

std::vector<IndexedBall> ball_family_from_json(const Json& a) {
    if (!a.is_array() || a.empty()) throw ArgumentError("config: 'balls' must be a non-empty array");
    std::vector<IndexedBall> out;
    for (const auto& b : a) {
        IndexedBall ib{{get_vec(b, "c"), get_real(b, "r")}, get_int(b, "j", 0)};
        if (!(ib.ball.radius > 0.0)) throw DomainError("config: ball radii must be positive");
        if (!out.empty() && ib.ball.center.size() != out[0].ball.center.size())
            throw ArgumentError("config: balls differ in dimension");
        out.push_back(std::move(ib));
    }
    return out;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- canonical forms

Json canon_model_cmd(const Json& j, const std::string& cmd) {
    Json c;
    c["command"] = cmd;
    c["master_seed"] = seed_of(j);
    c["model"] = to_json(model_from_json(get_object(j, "model")));
    return c;
}

Json canon_fit_lsp(const Json& j) {
    check_keys(j, {"command", "master_seed", "model", "r_grid", "delta_ratios", "samples", "centers"}, "fit-lsp");
    Json c = canon_model_cmd(j, "fit-lsp");
    c["r_grid"] = grid_from_json(j, "r_grid");
    c["delta_ratios"] = grid_from_json(j, "delta_ratios");
    c["samples"] = get_count(j, "samples", 100000, 1000);
    c["centers"] = get_count(j, "centers", 8);
    return c;
}

Json canon_boxdim(const Json& j, const std::string& cmd) {
    std::set<std::string> keys{"command", "master_seed", "model", "scales", "samples"};
    if (cmd == "minkowski") keys.insert("d");
    check_keys(j, keys, cmd);
    Json c = canon_model_cmd(j, cmd);
    if (cmd == "minkowski") c["d"] = get_real(j, "d");
    c["scales"] = grid_from_json(j, "scales");
    c["samples"] = get_count(j, "samples", 100000, 1000);
    return c;
}

Json canon_transform(const Json& j) {
    check_keys(j, {"command", "master_seed", "gauges", "upsilon", "grid"}, "transform");
    Json c;
    c["command"] = "transform";
    if (j.contains("master_seed")) c["master_seed"] = seed_of(j);
    c["gauges"] = to_json(gauge_pair_from_json(get_object(j, "gauges")));
    Vec ups;
    if (j.contains("upsilon") && j.at("upsilon").is_number()) ups = {get_real(j, "upsilon")};
    else ups = grid_from_json(j, "upsilon");
    for (double u : ups)
        if (!(u > 0.0)) throw DomainError("transform: upsilon values must be positive");
    c["upsilon"] = ups;
    c["grid"] = j.contains("grid") ? grid_from_json(j, "grid") : default_grid();
    return c;
}

Json canon_cover(const Json& j) {
    const std::string mode = get_string(j, "mode");
    Json c;
    c["command"] = "cover";
    c["mode"] = mode;
    if (mode == "five_r") {
        check_keys(j, {"command", "mode", "master_seed", "metric", "torus", "balls", "random"}, "cover five_r");
        c["metric"] = to_string(metric_from_string(get_string(j, "metric", "sup")));
        c["torus"] = get_bool(j, "torus", false);
        if (j.contains("balls") == j.contains("random"))
            throw ArgumentError("cover five_r: give exactly one of 'balls' or 'random'");
        if (j.contains("balls")) {
            c["balls"] = ball_family_json(ball_family_from_json(j.at("balls")));
        } else {
            c["master_seed"] = seed_of(j);
            const Json& r = get_object(j, "random");
            check_keys(r, {"count", "dim", "r_lo", "r_hi"}, "cover five_r random");
            const double lo = get_real(r, "r_lo"), hi = get_real(r, "r_hi");
            if (!(lo > 0.0 && hi >= lo)) throw DomainError("cover five_r: need 0 < r_lo <= r_hi");
            c["random"] = Json{{"count", get_count(r, "count", 100)},
                               {"dim", get_count(r, "dim", 2)},
                               {"r_lo", lo},
                               {"r_hi", hi}};
        }
    } else if (mode == "caj") {
        check_keys(j, {"command", "mode", "master_seed", "model", "A", "j", "upsilon", "candidates", "samples", "kappa",
                       "gauges"},
                   "cover caj");
        c["master_seed"] = seed_of(j);
        c["model"] = to_json(model_from_json(get_object(j, "model")));
        c["A"] = to_json(ball_from_json(get_object(j, "A")));
        c["j"] = get_int(j, "j", 1);
        c["upsilon"] = get_real(j, "upsilon");
        c["candidates"] = get_count(j, "candidates", 10000, 100);
        c["samples"] = get_count(j, "samples", 100000, 1000);
        if (j.contains("kappa")) c["kappa"] = get_real(j, "kappa");
        if (j.contains("gauges")) c["gauges"] = to_json(gauge_pair_from_json(get_object(j, "gauges")));
    } else if (mode == "kgb") {
        check_keys(j, {"command", "mode", "master_seed", "B", "G", "sequence", "tilde", "j_max", "target_fraction", "c5",
                       "pool"},
                   "cover kgb");
        c["master_seed"] = seed_of(j);
        c["B"] = to_json(ball_from_json(get_object(j, "B")));
        c["G"] = get_count(j, "G", 1);
        c["sequence"] = to_json(sequence_from_json(get_object(j, "sequence")));
        c["tilde"] = to_json(radius_rule_from_json(get_object(j, "tilde")));
        c["j_max"] = get_count(j, "j_max", 100000);
        const double tf = get_real(j, "target_fraction");
        if (!(tf > 0.0 && tf <= 1.0)) throw DomainError("cover kgb: target_fraction must lie in (0,1]");
        c["target_fraction"] = tf;
        c["c5"] = get_real(j, "c5", 1.0);
        c["pool"] = get_count(j, "pool", 10000);
    } else {
        throw ArgumentError("cover: mode must be five_r, caj or kgb");
    }
    return c;
}

Json canon_cantor(const Json& j, const std::string& cmd) {
    check_keys(j, {"command", "master_seed", "cantor", "holder_trials", "tree"}, cmd);
    Json c;
    c["command"] = cmd;
    c["master_seed"] = seed_of(j);
    c["cantor"] = to_json(cantor_params_from_json(get_object(j, "cantor")));
    c["holder_trials"] = get_count(j, "holder_trials", 10000, 0);
    if (cmd == "cantor-verify" && j.contains("tree")) c["tree"] = get_string(j, "tree");
    else if (j.contains("tree")) throw ArgumentError("cantor-build: 'tree' is only read by cantor-verify");
    return c;
}

Json radius_json(const Json& r) {
    const std::string kind = get_string(r, "kind", "base");
    if (kind == "base") return Json{{"kind", "base"}};
    if (kind == "transformed") return Json{{"kind", "transformed"}, {"t", get_real(r, "t")}};
    if (kind == "power") {
        const double p = get_real(r, "p");
        if (!(p > 0.0)) throw DomainError("randsim: radius power must be positive");
        return Json{{"kind", "power"}, {"p", p}};
    }
    throw ArgumentError("randsim: radius kind must be base, transformed or power");
}

Json canon_randsim(const Json& j) {
    const std::string mode = get_string(j, "mode");
    Json c;
    c["command"] = "randsim";
    c["mode"] = mode;
    c["master_seed"] = seed_of(j);
    RandomScheme sc = scheme_from_json(get_object(j, "scheme"));
    sc.validate();
    c["scheme"] = to_json(sc);
    if (mode == "covering") {
        check_keys(j, {"command", "mode", "master_seed", "scheme", "N_list", "max_boxes"}, "randsim covering");
        c["N_list"] = int_list(j, "N_list");
        c["max_boxes"] = get_count(j, "max_boxes", 50'000'000);
    } else if (mode == "coverage" || mode == "hits") {
        std::set<std::string> keys{"command", "mode", "master_seed", "scheme", "x", "radius", "J", "N"};
        if (mode == "coverage") keys.insert("trials");
        check_keys(j, keys, "randsim " + mode);
        Vec x = get_vec(j, "x");
        if (static_cast<int>(x.size()) != sc.dim()) throw ArgumentError("randsim: x dimension differs from the model");
        c["x"] = x;
        c["radius"] = radius_json(j.contains("radius") ? get_object(j, "radius") : Json::object());
        if (mode == "hits" && c["radius"]["kind"] == "power")
            throw ArgumentError("randsim hits: radius kind must be base or transformed");
        c["J"] = get_count(j, "J", 1);
        c["N"] = get_count(j, "N", 10000);
        if (mode == "coverage") c["trials"] = get_count(j, "trials", 1000);
    } else {
        throw ArgumentError("randsim: mode must be covering, coverage or hits");
    }
    return c;
}

// ---------------------------------------------------------------- commands

Json fit_json(const ScalingFit& f) { return to_json(f); }

RunOutput run_fit_lsp(const Json& c) {
    Rng rng(c["master_seed"].get<std::uint64_t>());
    const SetModel m = model_from_json(c["model"]);
    LspFit f = fit_lsp(m, c["r_grid"].get<Vec>(), c["delta_ratios"].get<Vec>(), c["samples"].get<std::size_t>(), rng,
                       c["centers"].get<std::size_t>());
    RunOutput out;
    out.results = Json{{"kappa_hat", f.kappa_hat},
                       {"kappa_stderr", f.fit.exponent_stderr / m.dim},
                       {"delta_coef", f.delta_coef},
                       {"r_coef", f.r_coef},
                       {"c3_hat", f.c3_hat},
                       {"c4_hat", f.c4_hat},
                       {"fit", fit_json(f.fit)}};
    if (const auto* ifs = std::get_if<IFS>(&m.shape)) out.results["reference_kappa"] = similarity_dimension(*ifs) / m.dim;
    Table t{{"log_r", "log_delta", "log_measure", "stderr", "r", "delta", "measure"}, {}};
    for (const auto& cell : f.cells)
        t.add({num(std::log(cell.r)), num(std::log(cell.delta)), cell.measure > 0.0 ? num(std::log(cell.measure)) : "",
               num(cell.std_error), num(cell.r), num(cell.delta), num(cell.measure)});
    out.tables["lsp_cells"] = std::move(t);
    return out;
}

Table scale_table(const std::vector<ScaleRow>& rows) {
    Table t{{"log_delta", "log_measure", "stderr", "delta", "measure", "samples", "method"}, {}};
    for (const auto& r : rows)
        t.add({num(std::log(r.delta)), r.measure.value > 0.0 ? num(std::log(r.measure.value)) : "",
               num(r.measure.std_error), num(r.delta), num(r.measure.value),
               num(static_cast<long long>(r.measure.samples)), to_string(r.measure.method)});
    return t;
}

RunOutput run_boxdim(const Json& c) {
    Rng rng(c["master_seed"].get<std::uint64_t>());
    const SetModel m = model_from_json(c["model"]);
    BoxDimResult b = box_dimensions(m, c["scales"].get<Vec>(), c["samples"].get<std::size_t>(), rng);
    RunOutput out;
    out.results = Json{{"dimension", b.central.exponent},
                       {"lower", std::min(b.lower.exponent, b.upper.exponent)},
                       {"upper", std::max(b.lower.exponent, b.upper.exponent)},
                       {"fit", fit_json(b.central)}};
    if (const auto* ifs = std::get_if<IFS>(&m.shape)) out.results["similarity_dimension"] = similarity_dimension(*ifs);
    out.tables["boxdim"] = scale_table(b.table);
    return out;
}

RunOutput run_minkowski(const Json& c) {
    Rng rng(c["master_seed"].get<std::uint64_t>());
    const SetModel m = model_from_json(c["model"]);
    MinkowskiResult r = minkowski_content(m, c["d"].get<double>(), c["scales"].get<Vec>(), c["samples"].get<std::size_t>(), rng);
    RunOutput out;
    out.results = Json{{"lower", r.lower}, {"upper", r.upper}, {"ratio", r.lower > 0.0 ? r.upper / r.lower : 0.0}};
    Table t{{"delta", "normalized_volume"}, {}};
    for (const auto& [d, v] : r.normalized) t.add({num(d), num(v)});
    out.tables["minkowski"] = std::move(t);
    return out;
}

RunOutput run_transform(const Json& c) {
    const GaugePair p = gauge_pair_from_json(c["gauges"]);
    RunOutput out;
    const GaugeReport rep = verify_gauge_pair(p, c["grid"].get<Vec>());
    for (const auto& s : rep.issues) out.warnings.push_back(s);
    out.results["gauge_report"] = to_json(rep);
    out.results["case"] = to_string(classify_case(p));
    Json rows = Json::array();
    Table t{{"upsilon", "transformed", "h"}, {}};
    for (double u : c["upsilon"].get<Vec>()) {
        const double tu = mtp_radius(p, u);
        rows.push_back(Json{{"upsilon", u}, {"transformed", tu}});
        t.add({num(u), num(tu), num(h_gauge(p, u))});
    }
    out.results["transformed"] = rows;
    if (p.f.is_power() && p.g.is_power() && p.f.coef == 1.0 && p.g.coef == 1.0) {
        // f = r^s, g = r^n: transformed radius is upsilon^((s - kappa n)/((1 - kappa) n)).
        const double n = p.g.s;
        out.results["power_exponent"] = (p.f.s - p.kappa * n) / ((1.0 - p.kappa) * n);
    }
    out.tables["transform"] = std::move(t);
    return out;
}

RunOutput run_five_r(const Json& c) {
    BallFamily fam;
    fam.space.metric = metric_from_string(c["metric"].get<std::string>());
    fam.space.torus = c["torus"].get<bool>();
    if (c.contains("balls")) {
        fam.balls = ball_family_from_json(c["balls"]);
    } else {
        Rng rng(c["master_seed"].get<std::uint64_t>());
        const Json& r = c["random"];
        const auto count = r["count"].get<std::size_t>();
        const int dim = r["dim"].get<int>();
        const double lo = r["r_lo"].get<double>(), hi = r["r_hi"].get<double>();
        for (std::size_t k = 0; k < count; ++k) {
            IndexedBall b;
            b.ball.center.resize(dim);
            for (auto& x : b.ball.center) x = rng.uniform();
            b.ball.radius = rng.uniform(lo, hi);
            b.j = static_cast<long long>(k);
            fam.balls.push_back(std::move(b));
        }
    }
    const auto sel = five_r_select(fam);
    std::vector<char> chosen(fam.balls.size(), 0);
    for (auto k : sel) chosen[k] = 1;
    bool disjoint = true, covers = true;
    for (std::size_t a = 0; a < sel.size(); ++a)
        for (std::size_t b = a + 1; b < sel.size(); ++b)
            if (!balls_disjoint(fam.balls[sel[a]].ball, fam.balls[sel[b]].ball, fam.space)) disjoint = false;
    for (const auto& in : fam.balls) {
        bool hit = false;
        for (auto k : sel)
            if (ball_contains(fam.balls[k].ball.dilate(5.0), in.ball, fam.space)) {
                hit = true;
                break;
            }
        covers = covers && hit;
    }
    RunOutput out;
    std::vector<IndexedBall> picked;
    for (auto k : sel) picked.push_back(fam.balls[k]);
    out.results = Json{{"input_count", fam.balls.size()},
                       {"selected_count", sel.size()},
                       {"selected", sel},
                       {"disjoint", disjoint},
                       {"five_cover", covers},
                       {"balls", ball_family_json(picked)}};
    Table t{{"index", "radius", "selected"}, {}};
    for (std::size_t k = 0; k < fam.balls.size(); ++k)
        t.add({num(static_cast<long long>(k)), num(fam.balls[k].ball.radius), chosen[k] ? "1" : "0"});
    out.tables["five_r"] = std::move(t);
    return out;
}

RunOutput run_caj(const Json& c) {
    Rng rng(c["master_seed"].get<std::uint64_t>());
    const SetModel m = model_from_json(c["model"]);
    const Ball A = ball_from_json(c["A"]);
    const double ups = c["upsilon"].get<double>();
    if (!(6.0 * ups < A.radius)) throw ArgumentError("cover caj: needs 6 upsilon < radius of A");
    const BallSpace sp = BallSpace::of(m);
    CajResult r = build_caj(A, c["j"].get<long long>(), m, ups, rng, c["candidates"].get<std::size_t>());
    bool on_set = true, inside = true, disjoint = true;
    for (std::size_t a = 0; a < r.balls.size(); ++a) {
        const Ball& L = r.balls[a].ball;
        on_set = on_set && L.radius == ups && distance_to_set(m, L.center) <= 1e-9;
        inside = inside && ball_contains(A, L.dilate(3.0), sp);
        for (std::size_t b = a + 1; b < r.balls.size(); ++b)
            disjoint = disjoint && balls_disjoint(L.dilate(3.0), r.balls[b].ball.dilate(3.0), sp);
    }
    // (iv): vol(Δ(F,Υ) ∩ ½A) ≪ vol(∪L) ≤ vol(Δ(F,Υ) ∩ A), Monte-Carlo within 3σ.
    const auto samples = c["samples"].get<std::size_t>();
    Rng mrng(derive_seed(c["master_seed"].get<std::uint64_t>(), 0x1F));
    const MeasureEstimate inner = neighborhood_measure(m, A.center, 0.5 * A.radius, ups, samples, mrng);
    const MeasureEstimate outer = neighborhood_measure(m, A.center, A.radius, ups, samples, mrng);
    const double uni = static_cast<double>(r.balls.size()) * ball_volume(m.dim, ups, m.metric);
    const double k7 = std::pow(7.0, m.dim);
    const bool lower_ok = inner.value - 3.0 * inner.std_error <= k7 * uni;
    const bool upper_ok = uni <= outer.value + 3.0 * outer.std_error;
    RunOutput out;
    out.results = Json{{"count", r.balls.size()},
                       {"pool_size", r.net.pool_size},
                       {"pool_exact", r.net.exact_pool},
                       {"pool_maximal", r.net.pool_maximal},
                       {"centred_on_set", on_set},
                       {"three_dilates_inside", inside},
                       {"three_dilates_disjoint", disjoint},
                       {"union_volume", uni},
                       {"inner_volume", inner.value},
                       {"inner_stderr", inner.std_error},
                       {"outer_volume", outer.value},
                       {"outer_stderr", outer.std_error},
                       {"measure_sandwich", lower_ok && upper_ok}};
    std::optional<double> ref;
    if (c.contains("gauges")) {
        const GaugePair p = gauge_pair_from_json(c["gauges"]);
        ref = std::pow(p.f(ups) / p.g(ups), p.kappa / (1.0 - p.kappa));
    } else if (c.contains("kappa")) {
        ref = std::pow(A.radius / ups, c["kappa"].get<double>());
    }
    if (ref) {
        out.results["reference_count"] = *ref;
        out.results["count_ratio"] = static_cast<double>(r.balls.size()) / *ref;
    }
    out.results["balls"] = ball_family_json(r.balls);
    if (!r.net.pool_maximal) out.warnings.push_back("net is not maximal against its candidate pool");
    return out;
}

RunOutput run_kgb(const Json& c) {
    Rng rng(c["master_seed"].get<std::uint64_t>());
    const Ball B = ball_from_json(c["B"]);
    const SetSequence seq = sequence_from_json(c["sequence"]);
    const RadiusRule tilde = radius_rule_from_json(c["tilde"]);
    KgbResult r = build_kgb(B, c["G"].get<long long>(), seq, tilde, c["j_max"].get<long long>(),
                            c["target_fraction"].get<double>(), c["c5"].get<double>(), rng, c["pool"].get<std::size_t>());
    bool inside = true, disjoint = true;
    for (std::size_t a = 0; a < r.balls.size(); ++a) {
        const Ball A3 = r.balls[a].ball.dilate(3.0);
        inside = inside && ball_contains(B, A3, seq.space);
        for (std::size_t b = a + 1; b < r.balls.size(); ++b)
            disjoint = disjoint && balls_disjoint(A3, r.balls[b].ball.dilate(3.0), seq.space);
    }
    RunOutput out;
    out.results = Json{{"count", r.balls.size()},
                       {"n0", r.n0},
                       {"achieved_fraction", r.achieved_fraction},
                       {"three_dilates_inside", inside},
                       {"three_dilates_disjoint", disjoint},
                       {"balls", ball_family_json(r.balls)}};
    Table t{{"j", "radius"}, {}};
    for (const auto& b : r.balls) t.add({num(b.j), num(b.ball.radius)});
    out.tables["kgb"] = std::move(t);
    return out;
}

Json tree_summary(const CantorTree& t) {
    std::size_t leaves = 0;
    int deepest = 0;
    for (const auto& n : t.nodes) deepest = std::max(deepest, n.level);
    for (const auto& n : t.nodes) leaves += n.level == deepest ? 1 : 0;
    return Json{{"nodes", t.nodes.size()},
                {"pairs", t.pairs.size()},
                {"sublevels", t.sublevels.size()},
                {"depth", deepest},
                {"leaves", leaves},
                {"c6", t.c6},
                {"root_l_B", t.nodes.empty() ? 0 : t.nodes[0].l_B},
                {"tree_hash", hex(tree_hash(t))}};
}

constexpr std::size_t kListedNodes = 200;

// Indented listing, one node per line.
std::string tree_listing(const CantorTree& t, const MassAssignment& mass) {
    std::ostringstream o;
    o.precision(6);
    std::function<void(long long, int)> rec = [&](long long k, int indent) {
        const CantorNode& n = t.nodes[k];
        o << std::string(2 * indent, ' ') << '#' << k << " level " << n.level << " sub " << n.sublevel << " j " << n.j
          << " r " << n.ball.radius << " c (";
        for (std::size_t i = 0; i < n.ball.center.size(); ++i) o << (i ? ", " : "") << n.ball.center[i];
        o << ") mu " << mass.mu[k] << " l_B " << n.l_B << '\n';
        for (long long ch : n.children) rec(ch, indent + 1);
    };
    if (!t.nodes.empty()) rec(0, 0);
    return o.str();
}

RunOutput run_cantor(const Json& c, bool build_only) {
    const std::uint64_t seed = c["master_seed"].get<std::uint64_t>();
    const CantorParams p = cantor_params_from_json(c["cantor"]);
    RunOutput out;
    CantorTree t;
    if (!build_only && c.contains("tree")) {
        t = tree_from_json(load_config(c["tree"].get<std::string>()));
    } else {
        Rng rng(derive_seed(seed, 0xB01D));
        t = build_cantor(p, rng);
    }
    for (const auto& s : t.notices) out.warnings.push_back(s);
    out.results["tree"] = tree_summary(t);
    const MassAssignment mass = assign_mass(t, p);
    const AuditReport audit = verify_levels(t, p);
    out.results["audit"] = to_json(audit);
    const auto trials = c["holder_trials"].get<std::size_t>();
    if (trials > 0) {
        Rng hrng(derive_seed(seed, 0x401D));
        out.results["holder"] = to_json(holder_check(t, mass, p, trials, hrng));
    }
    Table subs{{"parent", "index", "G", "n0", "hosts", "weight", "target"}, {}};
    for (const auto& s : t.sublevels)
        subs.add({num(s.parent), num(static_cast<long long>(s.index)), num(s.G), num(s.n0),
                  num(static_cast<long long>(s.hosts)), num(s.weight), num(s.target)});
    out.tables["sublevels"] = std::move(subs);
    Table audit_t{{"property", "pass", "checked", "violations"}, {}};
    for (const auto& it : audit.items)
        audit_t.add({it.property, it.pass ? "1" : "0", num(static_cast<long long>(it.checked)),
                     num(static_cast<long long>(it.violation_count))});
    out.tables["audit"] = std::move(audit_t);
    if (build_only) {
        Json tj = to_json(t);
        for (std::size_t k = 0; k < t.nodes.size(); ++k) tj["nodes"][k]["mu"] = mass.mu[k];
        out.files["tree.json"] = tj.dump();
        if (t.nodes.size() <= kListedNodes) out.files["tree.txt"] = tree_listing(t, mass);
    }
    if (!audit.all_pass()) out.warnings.push_back("verify_levels reported violations");
    return out;
}

RunOutput run_randsim(const Json& c) {
    RandomScheme sc = scheme_from_json(c["scheme"]);
    sc.master_seed = c["master_seed"].get<std::uint64_t>();
    sc.validate();
    const std::string mode = c["mode"].get<std::string>();
    RunOutput out;
    if (mode == "covering") {
        CoveringResult r = covering_exponent(sc, c["N_list"].get<std::vector<long long>>(), c["max_boxes"].get<std::size_t>());
        out.results = Json{{"exponent", r.fit.exponent},
                           {"predicted", r.predicted},
                           {"deviation", r.fit.exponent - r.predicted},
                           {"fit", fit_json(r.fit)},
                           {"count_constant_low", r.constant_low},
                           {"count_constant_high", r.constant_high},
                           {"count_constant_stable", r.constant_stable}};
        Table t{{"N", "side", "count"}, {}};
        for (const auto& row : r.rows) t.add({num(row.N), num(row.side), num(row.count)});
        out.tables["covering"] = std::move(t);
        Table pj{{"j", "count", "ratio"}, {}};
        for (const auto& row : r.per_j) pj.add({num(row.j), num(row.count), num(row.ratio)});
        out.tables["per_j"] = std::move(pj);
        return out;
    }
    const Vec x = c["x"].get<Vec>();
    const Json& rad = c["radius"];
    const std::string kind = rad["kind"].get<std::string>();
    const long long J = c["J"].get<long long>(), N = c["N"].get<long long>();
    RadiusMode rm;
    if (kind == "transformed") {
        rm.kind = RadiusMode::Kind::transformed;
        rm.t = rad["t"].get<double>();
    }
    if (mode == "hits") {
        const auto hits = hit_indices(sc, x, rm, J, N);
        out.results = Json{{"hit_count", hits.size()}, {"hits", hits}};
        return out;
    }
    std::function<double(long long)> radius;
    if (kind == "power") {
        const double p = rad["p"].get<double>();
        radius = [p](long long j) { return std::pow(static_cast<double>(j), -p); };
    } else {
        radius = [sc, rm](long long j) { return stage_radius(sc, rm, j); };
    }
    CoverageResult r = coverage_frequency(sc, x, radius, J, N, c["trials"].get<std::size_t>());
    out.results = Json{{"slope_first", r.slope_first},
                       {"slope_last", r.slope_last},
                       {"slope_ratio", r.slope_ratio},
                       {"divergence_threshold", kDivergenceRatio},
                       {"classification", r.divergent ? "divergent" : "convergent"},
                       {"partial_sum", r.partial.back()}};
    Table t{{"j", "p_hat", "partial_sum"}, {}};
    for (std::size_t k = 0; k < r.p_hat.size(); ++k)
        t.add({num(J + static_cast<long long>(k)), num(r.p_hat[k]), num(r.partial[k])});
    out.tables["coverage"] = std::move(t);
    return out;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write '" + p.string() + "'");
    o << text;
}

}  // namespace

Json canonical_config(const std::string& command, const Json& cfg) {
    if (!cfg.is_object()) throw ArgumentError("config must be a JSON object");
    if (cfg.contains("command") && cfg.at("command") != command)
        throw ArgumentError("config is for command '" + get_string(cfg, "command") + "', not '" + command + "'");
    if (command == "fit-lsp") return canon_fit_lsp(cfg);
    if (command == "boxdim" || command == "minkowski") return canon_boxdim(cfg, command);
    if (command == "transform") return canon_transform(cfg);
    if (command == "cover") return canon_cover(cfg);
    if (command == "cantor-build" || command == "cantor-verify") return canon_cantor(cfg, command);
    if (command == "randsim") return canon_randsim(cfg);
    throw ArgumentError("unknown command '" + command + "'");
}

RunOutput execute(const Json& c) {
    const std::string cmd = c.at("command").get<std::string>();
    if (cmd == "fit-lsp") return run_fit_lsp(c);
    if (cmd == "boxdim") return run_boxdim(c);
    if (cmd == "minkowski") return run_minkowski(c);
    if (cmd == "transform") return run_transform(c);
    if (cmd == "cover") {
        const std::string mode = c.at("mode").get<std::string>();
        if (mode == "five_r") return run_five_r(c);
        if (mode == "caj") return run_caj(c);
        return run_kgb(c);
    }
    if (cmd == "cantor-build") return run_cantor(c, true);
    if (cmd == "cantor-verify") return run_cantor(c, false);
    if (cmd == "randsim") return run_randsim(c);
    throw ArgumentError("unknown command '" + cmd + "'");
}

int run(const RunRequest& req, std::ostream& diag) {
    const auto t0 = std::chrono::steady_clock::now();
    Json canonical;
    try {
        if (req.threads < 1) throw RangeError("--threads must be >= 1");
        Json cfg = load_config(req.config_path);
        if (!cfg.is_object()) throw ArgumentError("config must be a JSON object");
        for (const auto& s : req.overrides) apply_override(cfg, s);
        if (req.seed) cfg["master_seed"] = *req.seed;
        canonical = canonical_config(req.command, cfg);
    } catch (const ArgumentError& e) {
        diag << "error: " << e.what() << '\n';
        return 2;
    }
    set_threads(req.threads);

    Json report;
    report["toolkit"] = kToolkit;
    report["version"] = kVersion;
    report["command"] = req.command;
    report["config"] = canonical;
    RunOutput out;
    int code = 0;
    try {
        out = execute(canonical);
        report["status"] = "ok";
    } catch (const ArgumentError& e) {
        diag << "error: " << e.what() << '\n';
        return 2;
    } catch (const CoverageShortfall& e) {
        diag << "coverage shortfall: " << e.what() << '\n';
        out = RunOutput{};
        out.results = Json{{"error", e.what()}, {"achieved", e.achieved}};
        report["status"] = "failed";
        code = 3;
    } catch (const NumericError& e) {
        diag << "numerical failure: " << e.what() << '\n';
        out = RunOutput{};
        out.results = Json{{"error", e.what()}};
        report["status"] = "failed";
        code = 3;
    }
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["results"] = out.results;
    report["warnings"] = out.warnings;

    try {
        const fs::path dir(req.out_dir);
        fs::create_directories(dir);
        if (!out.tables.empty()) fs::create_directories(dir / "tables");
        for (const auto& [name, t] : out.tables) write_file(dir / "tables" / (name + ".csv"), t.csv());
        for (const auto& [name, text] : out.files) write_file(dir / name, text);
        write_file(dir / "report.json", report.dump(2) + "\n");
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << '\n';
        return 3;
    }
    for (const auto& w : out.warnings) diag << "warning: " << w << '\n';
    return code;
}

}  // namespace mtp
