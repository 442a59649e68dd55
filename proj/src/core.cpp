#include "mtp/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <numbers>
#include <thread>

namespace mtp {

double norm(VecView v, Metric m) {
    double acc = 0.0;
    if (m == Metric::sup) {
        for (double x : v) acc = std::max(acc, std::abs(x));
        return acc;
    }
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double dist(VecView a, VecView b, Metric m) {
    double acc = 0.0;
    if (m == Metric::sup) {
        for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
        return acc;
    }
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

double wrap01(double x) {
    double y = x - std::floor(x);
    return y >= 1.0 ? 0.0 : y;
}

double torus_dist(VecView a, VecView b, Metric m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::abs(wrap01(a[i] - b[i]));
        d = std::min(d, 1.0 - d);
        if (m == Metric::sup)
            acc = std::max(acc, d);
        else
            acc += d * d;
    }
    return m == Metric::sup ? acc : std::sqrt(acc);
}

double ball_volume(int n, double r, Metric m) {
    if (m == Metric::sup) return std::pow(2.0 * r, n);
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(r, n);
}

std::vector<double> logspace(double lo, double hi, int count) {
    if (count < 1 || lo <= 0 || hi <= 0) throw ArgumentError("logspace: bad arguments");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
    h = mix64(h ^ (c + 0xd6e8feb86659fd93ULL));
    return h;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    double v = uniform();
    double rad = std::sqrt(-2.0 * std::log(u));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * v);
    have_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * v);
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= (hi[i] - lo[i]);
    return v;
}

bool Box::contains(VecView x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

Box Box::expanded(double d) const {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        b.lo[i] -= d;
        b.hi[i] += d;
    }
    return b;
}

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int t = std::min<std::size_t>(g_threads.load(), count);
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next++;
                if (i >= count || failed) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

LsqResult least_squares(const std::vector<Vec>& rows, const Vec& y) {
    const int m = static_cast<int>(rows.size());
    if (m == 0) throw ArgumentError("least_squares: no rows");
    const int p = static_cast<int>(rows[0].size());
    Eigen::MatrixXd X(m, p);
    Eigen::VectorXd Y(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = rows[i][j];
        Y(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw ArgumentError("least_squares: design matrix is rank deficient");
    Eigen::VectorXd b = qr.solve(Y);
    Eigen::VectorXd res = Y - X * b;
    LsqResult out;
    out.coef.assign(b.data(), b.data() + p);
    out.residuals.assign(res.data(), res.data() + m);
    double s2 = m > p ? res.squaredNorm() / (m - p) : 0.0;
    Eigen::MatrixXd cov = (X.transpose() * X).inverse() * s2;
    for (int j = 0; j < p; ++j) out.stderr_.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    return out;
}

}  // namespace mtp
