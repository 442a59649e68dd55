// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "gen.hpp"
#include "mtp/app.hpp"
#include "mtp/cantor.hpp"
#include "mtp/covering.hpp"
#include "mtp/dimfun.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unistd.h>

using namespace mtp;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(MTP_SOURCE_DIR) / "configs";
const fs::path kScratch = fs::temp_directory_path() / ("mtp_acceptance_" + std::to_string(::getpid()));

struct Run {
    int code = -1;
    Json report;
    double seconds = 0.0;
};

Run run_config(const std::string& name, int threads = 1, const std::string& tag = "") {
    const fs::path cfg = kConfigs / (name + ".json");
    RunRequest req;
    req.command = load_config(cfg.string()).at("command");
    req.config_path = cfg.string();
    req.out_dir = (kScratch / (name + tag + "_t" + std::to_string(threads))).string();
    req.threads = threads;
    std::ostringstream diag;
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.code = run(req, diag);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ifstream in(fs::path(req.out_dir) / "report.json");
    if (in) r.report = Json::parse(in);
    return r;
}

double res(const Run& r, const std::string& key) { return r.report.at("results").at(key).get<double>(); }

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void need(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back((ok ? "" : "!") + what);
    }
};

std::string fmt(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", x);
    return b;
}

Verdict lsp_recovery() {
    Verdict v;
    const std::pair<const char*, double> cases[] = {
        {"fit_lsp_point", 0.0}, {"fit_lsp_line", 0.5}, {"fit_lsp_cantor", std::log(2.0) / std::log(3.0)}};
    for (const auto& [name, want] : cases) {
        const Run r = run_config(name);
        const bool ok = r.code == 0 && std::abs(res(r, "kappa_hat") - want) <= 0.05 && r.seconds <= 300 &&
                        r.report["config"]["samples"].get<double>() >= 1e5;
        v.need(ok, std::string(name) + " kappa=" + fmt(r.code == 0 ? res(r, "kappa_hat") : NAN) + " (" + fmt(r.seconds) + "s)");
    }
    return v;
}

Verdict box_dimension() {
    Verdict v;
    const std::pair<const char*, double> cases[] = {
        {"boxdim_segment", 1.0}, {"boxdim_sierpinski", std::log(3.0) / std::log(2.0)}, {"boxdim_point", 0.0}};
    for (const auto& [name, want] : cases) {
        const Run r = run_config(name);
        const double d = r.code == 0 ? res(r, "dimension") : NAN;
        v.need(r.code == 0 && std::abs(d - want) <= 0.05, std::string(name) + " dim=" + fmt(d));
    }
    return v;
}

Verdict transform_algebra() {
    Verdict v;
    Rng rng(0xACC3);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto c = gen::power_case(rng);
        const double want = std::pow(c.upsilon, (c.s - c.kappa * c.n) / ((1 - c.kappa) * c.n));
        worst = std::max(worst, std::abs(mtp_radius(c.pair(), c.upsilon) / want - 1.0));
    }
    v.need(worst <= 1e-9, "100 power cases, worst rel err " + fmt(worst));
    bool exact = true;
    for (int k = 0; k < 100; ++k) {
        GaugePair p;
        p.f = p.g = Gauge::power(rng.uniform(0.2, 3.0), rng.uniform(0.5, 2.0));
        p.kappa = 0.0;
        const double u = gen::log_uniform(rng, 1e-8, 0.5);
        exact = exact && mtp_radius(p, u) == u;
    }
    v.need(exact, "kappa=0, f=g identity exact");
    return v;
}

bool five_r_ok(const BallFamily& fam, const std::vector<std::size_t>& sel) {
    for (std::size_t a = 0; a < sel.size(); ++a)
        for (std::size_t b = a + 1; b < sel.size(); ++b)
            if (!balls_disjoint(fam.balls[sel[a]].ball, fam.balls[sel[b]].ball, fam.space)) return false;
    for (const auto& in : fam.balls) {
        bool covered = false;
        for (auto k : sel) {
            const auto& s = fam.balls[k].ball;
            covered = covered || fam.space.dist(in.ball.center, s.center) + in.ball.radius <= 5 * s.radius * (1 + 1e-12);
        }
        if (!covered) return false;
    }
    return true;
}

Verdict covering_lemmas() {
    Verdict v;
    Rng rng(0xACC4);
    int good = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.index(3));
        const double lo = gen::log_uniform(rng, 1e-3, 0.1);
        auto fam = gen::ball_family(rng, 1 + rng.index(150), n, lo, lo * rng.uniform(1.0, 20.0),
                                    rng.index(2) ? Metric::sup : Metric::euclidean);
        fam.space.torus = rng.index(4) == 0;
        good += five_r_ok(fam, five_r_select(fam)) ? 1 : 0;
    }
    v.need(good == 200, "5r oracle " + std::to_string(good) + "/200");
    for (const char* name : {"cover_caj_line", "cover_caj_cantor"}) {
        const Run r = run_config(name);
        const auto& x = r.report["results"];
        const bool ok = r.code == 0 && x["centred_on_set"] && x["three_dilates_inside"] && x["three_dilates_disjoint"] &&
                        x["measure_sandwich"];
        v.need(ok, std::string(name) + " (i)-(iv)");
        if (x.contains("count_ratio")) {
            const double q = x["count_ratio"];
            v.need(q >= 0.25 && q <= 4.0, "cardinality/reference " + fmt(q) + " (count " + std::to_string(x["count"].get<int>()) + ")");
        }
    }
    return v;
}

Verdict cantor_audit() {
    Verdict v;
    const Json cfg = load_config((kConfigs / "cantor_r1_eta4.json").string());
    const CantorParams p = cantor_params_from_json(cfg.at("cantor"));
    v.need(p.depth == 2, "bundled depth " + std::to_string(p.depth));
    Rng rng(derive_seed(cfg.at("master_seed").get<std::uint64_t>(), 0xB01D));
    const CantorTree good = build_cantor(p, rng);
    v.need(verify_levels(good, p).all_pass(), "P0-P5 pass on " + std::to_string(good.nodes.size()) + " nodes");
    const Run r2 = run_config("cantor_r1_eta2");
    v.need(r2.code == 0 && r2.report["results"]["audit"]["all_pass"], "eta=2 config passes");

    auto flagged = [&](const CantorTree& t, const char* prop) { return !verify_levels(t, p).at(prop).pass; };
    CantorTree t = good;
    t.nodes[t.nodes[0].children[1]].ball.center = t.nodes[t.nodes[0].children[0]].ball.center;
    v.need(flagged(t, "P1"), "overlapping siblings flagged");
    t = good;
    for (auto& pr : t.pairs) pr.A.radius *= 0.01;
    v.need(flagged(t, "P3"), "shrunk g-sum flagged");
    t = good;
    double first = 0.0;
    for (const auto& nd : t.nodes)
        if (nd.parent == 0 && nd.sublevel == 1) first = std::max(first, nd.ball.radius);
    for (auto& nd : t.nodes)
        if (nd.parent == 0 && nd.sublevel == 2) nd.ball.radius = first;
    v.need(flagged(t, "P4"), "unhalved sublevel flagged");
    t = good;
    t.nodes[0].l_B = 1;
    v.need(flagged(t, "P5"), "wrong sublevel count flagged");
    return v;
}

Verdict holder_bound() {
    Verdict v;
    double ratio[3], bound[3];
    const int etas[3] = {2, 4, 8};
    for (int k = 0; k < 3; ++k) {
        const Run r = run_config("cantor_r1_eta" + std::to_string(etas[k]));
        const auto& h = r.report["results"]["holder"];
        ratio[k] = h["max_ratio"];
        bound[k] = h["hf_lower_bound"];
        v.need(r.code == 0 && h["trials"] == 10000, "eta=" + std::to_string(etas[k]) + " max_ratio=" + fmt(ratio[k]) +
                                                        " bound=" + fmt(bound[k]) + " (" + fmt(r.seconds) + "s)");
    }
    const double q = ratio[1] / ratio[0];
    v.need(q >= 0.5 && q <= 2.0, "max_ratio eta4/eta2 = " + fmt(q));
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 3; ++k) {
        lo = std::min(lo, bound[k] / etas[k]);
        hi = std::max(hi, bound[k] / etas[k]);
    }
    v.need(hi / lo <= 2.0, "bound/eta spread " + fmt(hi / lo));
    return v;
}

Verdict random_exponent() {
    Verdict v;
    const std::tuple<const char*, double, double> cases[] = {
        {"randsim_points_tau2", 0.5, 0.10}, {"randsim_points_tau4", 0.25, 0.10}, {"randsim_lines", 1.5, 0.15}};
    for (const auto& [name, want, tol] : cases) {
        const Run r = run_config(name);
        const double e = r.code == 0 ? res(r, "exponent") : NAN;
        const bool ok = r.code == 0 && std::abs(e - want) <= tol && r.report["results"]["count_constant_stable"] &&
                        r.seconds <= 600;
        v.need(ok, std::string(name) + " exponent=" + fmt(e) + " constant=" +
                       fmt(r.code == 0 ? res(r, "count_constant_high") : NAN));
    }
    return v;
}

Verdict borel_cantelli() {
    Verdict v;
    const Run a = run_config("randsim_bc_p1"), b = run_config("randsim_bc_p2");
    v.need(a.code == 0 && a.report["results"]["classification"] == "divergent" && a.report["config"]["trials"] == 1000,
           "j^-1 " + a.report["results"].value("classification", std::string("?")));
    v.need(b.code == 0 && b.report["results"]["classification"] == "convergent" && b.report["config"]["trials"] == 1000,
           "j^-2 " + b.report["results"].value("classification", std::string("?")));
    return v;
}

Verdict reproducibility() {
    Verdict v;
    int same = 0, total = 0;
    for (const auto& e : fs::directory_iterator(kConfigs)) {
        if (e.path().extension() != ".json") continue;
        const std::string name = e.path().stem().string();
        if (name == "transform") continue;  // deterministic, no sampling
        const Run a = run_config(name, 1, "_rep"), b = run_config(name, 4, "_rep");
        ++total;
        const bool ok = a.code == 0 && b.code == 0 && a.report["results"] == b.report["results"];
        same += ok ? 1 : 0;
        if (!ok) v.need(false, name + " differs between 1 and 4 threads");
    }
    v.need(same == total && total >= 19, std::to_string(same) + "/" + std::to_string(total) + " configs identical");
    return v;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"LSP exponent recovery", lsp_recovery},
        {"box dimension", box_dimension},
        {"transform algebra", transform_algebra},
        {"covering lemmas", covering_lemmas},
        {"Cantor construction audit", cantor_audit},
        {"Hölder mass bound", holder_bound},
        {"random limsup covering exponent", random_exponent},
        {"Borel-Cantelli diagnostic", borel_cantelli},
        {"reproducibility across thread counts", reproducibility},
    };
    int failed = 0, k = 0;
    for (const auto& [name, fn] : criteria) {
        ++k;
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.need(false, std::string("exception: ") + e.what());
        }
        std::string notes;
        for (const auto& n : v.notes) notes += (notes.empty() ? "" : "; ") + n;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << name << " [" << notes << "]" << std::endl;
        failed += v.pass ? 0 : 1;
    }
    fs::remove_all(kScratch);
    std::cout << (9 - failed) << "/9 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
