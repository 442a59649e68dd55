#include "mtp/sets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <queue>

namespace mtp {

// ---------------------------------------------------------------- matrices

Mat Mat::identity(int n) {
    Mat m;
    m.n = n;
    m.a.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vec Mat::apply(VecView x) const {
    Vec y(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
    return y;
}

Mat Mat::mul(const Mat& o) const {
    Mat r;
    r.n = n;
    r.a.assign(a.size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) r(i, j) += (*this)(i, k) * o(k, j);
    return r;
}

Mat Mat::transpose() const {
    Mat r = *this;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = (*this)(j, i);
    return r;
}

bool Mat::is_identity(double tol) const {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs((*this)(i, j) - (i == j ? 1.0 : 0.0)) > tol) return false;
    return true;
}

bool Mat::is_orthogonal(double tol) const { return mul(transpose()).is_identity(tol); }

bool Mat::is_signed_permutation(double tol) const {
    for (int i = 0; i < n; ++i) {
        int ones = 0;
        for (int j = 0; j < n; ++j) {
            double v = std::abs((*this)(i, j));
            if (std::abs(v - 1.0) <= tol)
                ++ones;
            else if (v > tol)
                return false;
        }
        if (ones != 1) return false;
    }
    return is_orthogonal(tol);
}

Vec Similarity::apply(VecView x) const {
    Vec y = orth.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = ratio * y[i] + shift[i];
    return y;
}

Similarity Similarity::compose(const Similarity& inner) const {
    Similarity s;
    s.ratio = ratio * inner.ratio;
    s.orth = orth.mul(inner.orth);
    s.shift = apply(inner.shift);
    return s;
}

Vec fixed_point(const Similarity& s) {
    const int n = s.orth.n;
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - s.ratio * s.orth(i, j);
        b(i) = s.shift[i];
    }
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    return Vec(x.data(), x.data() + n);
}

IFS IFS::middle_third_cantor() {
    IFS f;
    f.osc_declared = true;
    f.maps.push_back({1.0 / 3.0, Mat::identity(1), {0.0}});
    f.maps.push_back({1.0 / 3.0, Mat::identity(1), {2.0 / 3.0}});
    return f;
}

IFS IFS::sierpinski() {
    IFS f;
    f.osc_declared = true;
    const double h = std::sqrt(3.0) / 4.0;
    f.maps.push_back({0.5, Mat::identity(2), {0.0, 0.0}});
    f.maps.push_back({0.5, Mat::identity(2), {0.5, 0.0}});
    f.maps.push_back({0.5, Mat::identity(2), {0.25, h}});
    return f;
}

Hull ifs_hull(const IFS& ifs) {
    Hull h;
    h.center = fixed_point(ifs.maps[0]);
    for (const auto& m : ifs.maps) {
        double d = dist(m.apply(h.center), h.center, Metric::euclidean);
        h.radius = std::max(h.radius, d / (1.0 - m.ratio));
    }
    return h;
}

namespace {

Box image_box(const Similarity& s, const Box& b) {
    const int n = b.dim();
    Vec c(n), half(n);
    for (int i = 0; i < n; ++i) {
        c[i] = 0.5 * (b.lo[i] + b.hi[i]);
        half[i] = 0.5 * (b.hi[i] - b.lo[i]);
    }
    Vec ic = s.apply(c);
    Box out{Vec(n), Vec(n)};
    for (int i = 0; i < n; ++i) {
        double ext = 0.0;
        for (int j = 0; j < n; ++j) ext += std::abs(s.orth(i, j)) * half[j];
        ext *= s.ratio;
        out.lo[i] = ic[i] - ext;
        out.hi[i] = ic[i] + ext;
    }
    return out;
}

// Bounding box of the attractor as the fixed point of B -> union of images.
Box ifs_box(const IFS& ifs) {
    Hull h = ifs_hull(ifs);
    const int n = ifs.dim();
    Box b{Vec(n), Vec(n)};
    for (int i = 0; i < n; ++i) {
        b.lo[i] = h.center[i] - h.radius;
        b.hi[i] = h.center[i] + h.radius;
    }
    for (int it = 0; it < 200; ++it) {
        Box nb = image_box(ifs.maps[0], b);
        for (std::size_t k = 1; k < ifs.maps.size(); ++k) {
            Box ib = image_box(ifs.maps[k], b);
            for (int i = 0; i < n; ++i) {
                nb.lo[i] = std::min(nb.lo[i], ib.lo[i]);
                nb.hi[i] = std::max(nb.hi[i], ib.hi[i]);
            }
        }
        double change = 0.0;
        for (int i = 0; i < n; ++i)
            change = std::max({change, std::abs(nb.lo[i] - b.lo[i]), std::abs(nb.hi[i] - b.hi[i])});
        b = nb;
        if (change < 1e-15) break;
    }
    return b;
}

Similarity identity_similarity(int n) { return {1.0, Mat::identity(n), Vec(n, 0.0)}; }

// min over t in [tmin, tmax] of ||v - t u|| under the metric.
double line_distance(VecView v, VecView u, double tmin, double tmax, Metric m) {
    const std::size_t n = v.size();
    auto eval = [&](double t) {
        t = std::clamp(t, tmin, tmax);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = v[i] - t * u[i];
            acc = m == Metric::sup ? std::max(acc, std::abs(d)) : acc + d * d;
        }
        return m == Metric::sup ? acc : std::sqrt(acc);
    };
    if (m == Metric::euclidean) {
        double uu = 0.0, uv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            uu += u[i] * u[i];
            uv += u[i] * v[i];
        }
        return eval(uu > 0 ? uv / uu : 0.0);
    }
    // The sup objective is convex piecewise linear in t: the optimum sits on a
    // breakpoint, so evaluating every breakpoint is exact.
    double best = std::min(eval(tmin), eval(tmax));
    best = std::min(best, eval(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] != 0.0) best = std::min(best, eval(v[i] / u[i]));
        for (std::size_t k = i + 1; k < n; ++k) {
            double dm = u[i] - u[k], dp = u[i] + u[k];
            if (dm != 0.0) best = std::min(best, eval((v[i] - v[k]) / dm));
            if (dp != 0.0) best = std::min(best, eval((v[i] + v[k]) / dp));
        }
    }
    return best;
}

Vec unit_normal(const AffinePlane& p, int n) {
    Vec best;
    double best_norm = -1.0;
    for (int e = 0; e < n; ++e) {
        Vec v(n, 0.0);
        v[e] = 1.0;
        for (const auto& b : p.basis) {
            double d = 0.0;
            for (int i = 0; i < n; ++i) d += v[i] * b[i];
            for (int i = 0; i < n; ++i) v[i] -= d * b[i];
        }
        double nv = norm(v, Metric::euclidean);
        if (nv > best_norm) {
            best_norm = nv;
            best = v;
        }
    }
    for (double& x : best) x /= best_norm;
    return best;
}

double plane_distance(const AffinePlane& p, VecView x, Metric m) {
    const int n = static_cast<int>(x.size());
    const int l = static_cast<int>(p.basis.size());
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = x[i] - p.base[i];
    const double inf = std::numeric_limits<double>::infinity();
    if (l == 0) return norm(v, m);
    if (m == Metric::euclidean) {
        Vec r = v;
        for (const auto& b : p.basis) {
            double d = 0.0;
            for (int i = 0; i < n; ++i) d += v[i] * b[i];
            for (int i = 0; i < n; ++i) r[i] -= d * b[i];
        }
        return norm(r, m);
    }
    if (l == 1) return line_distance(v, p.basis[0], -inf, inf, m);
    if (l == n - 1) {
        // Dual norm of the sup-norm is the l1 norm.
        Vec w = unit_normal(p, n);
        double dot = 0.0, l1 = 0.0;
        for (int i = 0; i < n; ++i) {
            dot += w[i] * v[i];
            l1 += std::abs(w[i]);
        }
        return std::abs(dot) / l1;
    }
    throw UnsupportedError("sup-norm distance to planes of dimension 2..n-2 is not supported");
}

double sphere_distance(const Sphere& s, VecView x, Metric m) {
    const int n = static_cast<int>(x.size());
    const double R = s.radius;
    if (m == Metric::euclidean) return std::abs(dist(x, s.center, m) - R);
    // Smallest t such that the cube of half-side t around x meets the sphere:
    // the cube meets it iff min |y-c| <= R <= max |y-c| over the cube.
    Vec a(n);
    double d2 = 0.0, s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        a[i] = std::abs(x[i] - s.center[i]);
        d2 += a[i] * a[i];
        s1 += a[i];
    }
    if (d2 < R * R) {
        double disc = s1 * s1 - n * (d2 - R * R);
        return (-s1 + std::sqrt(disc)) / n;
    }
    std::sort(a.begin(), a.end(), std::greater<>());
    auto f = [&](double t) {
        double acc = 0.0;
        for (double ai : a) acc += ai > t ? (ai - t) * (ai - t) : 0.0;
        return std::sqrt(acc);
    };
    double k1 = 0.0, k2 = 0.0;
    for (int k = 1; k <= n; ++k) {
        k1 += a[k - 1];
        k2 += a[k - 1] * a[k - 1];
        double lo = k < n ? a[k] : 0.0;
        if (f(lo) >= R) {
            double disc = std::max(0.0, k1 * k1 - k * (k2 - R * R));
            return std::clamp((k1 - std::sqrt(disc)) / k, lo, a[k - 1]);
        }
    }
    return 0.0;
}

double polyline_distance(const Polyline& p, VecView x, Metric m) {
    const std::size_t n = x.size();
    if (p.vertices.size() == 1) return dist(x, p.vertices[0], m);
    double best = std::numeric_limits<double>::infinity();
    Vec v(n), u(n);
    for (std::size_t k = 0; k + 1 < p.vertices.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = x[i] - p.vertices[k][i];
            u[i] = p.vertices[k + 1][i] - p.vertices[k][i];
        }
        best = std::min(best, line_distance(v, u, 0.0, 1.0, m));
    }
    return best;
}

struct Cyl {
    Similarity map;
    double lb, ub;
    bool operator>(const Cyl& o) const { return lb > o.lb; }
};

double ifs_distance(const IFS& ifs, VecView x, Metric m, double tol) {
    const Hull h = ifs_hull(ifs);
    const int n = ifs.dim();
    auto make = [&](Similarity s) {
        Vec ref = s.apply(h.center);
        double d = dist(x, ref, m);
        return Cyl{std::move(s), d - s.ratio * h.radius, d};
    };
    std::priority_queue<Cyl, std::vector<Cyl>, std::greater<>> pq;
    Cyl root = make(identity_similarity(n));
    double best = root.ub;
    pq.push(std::move(root));
    while (!pq.empty()) {
        Cyl c = pq.top();
        pq.pop();
        if (c.lb >= best - tol) break;
        if (c.map.ratio * h.radius <= 0.5 * tol) continue;
        for (const auto& f : ifs.maps) {
            Cyl child = make(c.map.compose(f));
            best = std::min(best, child.ub);
            if (child.lb < best - tol) pq.push(std::move(child));
        }
    }
    return std::max(0.0, best);
}

bool ifs_within(const IFS& ifs, const Hull& h, VecView x, Metric m, double delta) {
    const int n = ifs.dim();
    const double floor_r = 1e-7 * delta;
    std::vector<Similarity> stack{identity_similarity(n)};
    while (!stack.empty()) {
        Similarity s = std::move(stack.back());
        stack.pop_back();
        double d = dist(x, s.apply(h.center), m);
        if (d < delta) return true;
        double rad = s.ratio * h.radius;
        if (d - rad >= delta || rad < floor_r) continue;
        for (const auto& f : ifs.maps) stack.push_back(s.compose(f));
    }
    return false;
}

double raw_distance(const SetModel& m, VecView x, double tol) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointSet>) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& p : s.points) best = std::min(best, dist(x, p, m.metric));
                return best;
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                return plane_distance(s, x, m.metric);
            } else if constexpr (std::is_same_v<T, Sphere>) {
                return sphere_distance(s, x, m.metric);
            } else if constexpr (std::is_same_v<T, Polyline>) {
                return polyline_distance(s, x, m.metric);
            } else {
                return ifs_distance(s, x, m.metric, tol);
            }
        },
        m.shape);
}

// Enumerate lattice shifts {-1,0,1}^n.
template <class Fn>
void for_each_shift(int n, Fn&& fn) {
    std::vector<int> k(n, -1);
    for (;;) {
        fn(k);
        int i = 0;
        while (i < n && k[i] == 1) k[i++] = -1;
        if (i == n) return;
        ++k[i];
    }
}

void check_dim(const SetModel& m, VecView x) {
    if (static_cast<int>(x.size()) != m.dim) throw ArgumentError("dimension mismatch in distance query");
}

}  // namespace

std::string SetModel::variant_name() const {
    static const char* names[] = {"points", "plane", "sphere", "polyline", "ifs"};
    return names[shape.index()];
}

SetModel make_points(std::vector<Vec> pts, Metric m) {
    SetModel s;
    s.dim = pts.empty() ? 0 : static_cast<int>(pts[0].size());
    s.shape = PointSet{std::move(pts)};
    s.metric = m;
    validate(s);
    return s;
}

SetModel make_plane(Vec base, std::vector<Vec> basis, Metric m) {
    SetModel s;
    s.dim = static_cast<int>(base.size());
    s.shape = AffinePlane{std::move(base), std::move(basis)};
    s.metric = m;
    validate(s);
    return s;
}

SetModel make_sphere(Vec center, double radius, Metric m) {
    SetModel s;
    s.dim = static_cast<int>(center.size());
    s.shape = Sphere{std::move(center), radius};
    s.metric = m;
    validate(s);
    return s;
}

SetModel make_polyline(std::vector<Vec> vertices, Metric m) {
    SetModel s;
    s.dim = vertices.empty() ? 0 : static_cast<int>(vertices[0].size());
    s.shape = Polyline{std::move(vertices)};
    s.metric = m;
    validate(s);
    return s;
}

SetModel make_ifs(IFS ifs, Metric m) {
    SetModel s;
    s.dim = ifs.dim();
    s.shape = std::move(ifs);
    s.metric = m;
    validate(s);
    return s;
}

void validate(const SetModel& m) {
    if (m.dim < 1) throw ArgumentError("set model needs ambient dimension >= 1");
    auto need_dim = [&](const Vec& v, const char* what) {
        if (static_cast<int>(v.size()) != m.dim) throw ArgumentError(std::string(what) + ": dimension mismatch");
    };
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointSet>) {
                if (s.points.empty()) throw ArgumentError("point set must be non-empty");
                for (const auto& p : s.points) need_dim(p, "point");
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                need_dim(s.base, "plane base");
                if (static_cast<int>(s.basis.size()) >= m.dim) throw ArgumentError("plane dimension must be < n");
                for (std::size_t i = 0; i < s.basis.size(); ++i) {
                    need_dim(s.basis[i], "plane basis");
                    for (std::size_t j = 0; j <= i; ++j) {
                        double d = 0.0;
                        for (int k = 0; k < m.dim; ++k) d += s.basis[i][k] * s.basis[j][k];
                        if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-12)
                            throw ArgumentError("plane basis must be orthonormal");
                    }
                }
            } else if constexpr (std::is_same_v<T, Sphere>) {
                need_dim(s.center, "sphere centre");
                if (!(s.radius > 0.0)) throw ArgumentError("sphere radius must be positive");
                if (m.dim < 2) throw ArgumentError("sphere needs ambient dimension >= 2");
            } else if constexpr (std::is_same_v<T, Polyline>) {
                if (s.vertices.empty()) throw ArgumentError("polyline needs vertices");
                for (const auto& v : s.vertices) need_dim(v, "polyline vertex");
            } else {
                if (s.maps.size() < 2) throw ArgumentError("IFS needs at least 2 maps");
                for (const auto& f : s.maps) {
                    if (!(f.ratio > 0.0 && f.ratio < 1.0)) throw ArgumentError("IFS ratios must lie in (0,1)");
                    need_dim(f.shift, "IFS translation");
                    if (f.orth.n != m.dim || !f.orth.is_orthogonal(1e-12))
                        throw ArgumentError("IFS linear part must be orthogonal");
                }
            }
        },
        m.shape);
    if (m.window && m.window->dim() != m.dim) throw ArgumentError("window dimension mismatch");
}

double distance_to_set(const SetModel& m, VecView x, double tol) {
    check_dim(m, x);
    if (!m.torus) return raw_distance(m, x, tol);
    if (const auto* ps = std::get_if<PointSet>(&m.shape)) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : ps->points) best = std::min(best, torus_dist(x, p, m.metric));
        return best;
    }
    Vec xw(x.begin(), x.end());
    for (double& v : xw) v = wrap01(v);
    double best = std::numeric_limits<double>::infinity();
    Vec y(m.dim);
    for_each_shift(m.dim, [&](const std::vector<int>& k) {
        for (int i = 0; i < m.dim; ++i) y[i] = xw[i] + k[i];
        best = std::min(best, raw_distance(m, y, tol));
    });
    return best;
}

bool within_distance(const SetModel& m, VecView x, double delta) {
    check_dim(m, x);
    const auto* ifs = std::get_if<IFS>(&m.shape);
    if (!ifs) return distance_to_set(m, x, 1e-9 * delta) < delta;
    const Hull h = ifs_hull(*ifs);
    if (!m.torus) return ifs_within(*ifs, h, x, m.metric, delta);
    Vec xw(x.begin(), x.end());
    for (double& v : xw) v = wrap01(v);
    bool hit = false;
    Vec y(m.dim);
    for_each_shift(m.dim, [&](const std::vector<int>& k) {
        if (hit) return;
        for (int i = 0; i < m.dim; ++i) y[i] = xw[i] + k[i];
        hit = ifs_within(*ifs, h, y, m.metric, delta);
    });
    return hit;
}

std::optional<Box> bounding_box(const SetModel& m) {
    if (m.torus) return Box{Vec(m.dim, 0.0), Vec(m.dim, 1.0)};
    std::optional<Box> out = std::visit(
        [&](const auto& s) -> std::optional<Box> {
            using T = std::decay_t<decltype(s)>;
            auto from_points = [&](const std::vector<Vec>& pts) {
                Box b{pts[0], pts[0]};
                for (const auto& p : pts)
                    for (int i = 0; i < m.dim; ++i) {
                        b.lo[i] = std::min(b.lo[i], p[i]);
                        b.hi[i] = std::max(b.hi[i], p[i]);
                    }
                return b;
            };
            if constexpr (std::is_same_v<T, PointSet>) {
                return from_points(s.points);
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Sphere>) {
                Box b{s.center, s.center};
                for (int i = 0; i < m.dim; ++i) {
                    b.lo[i] -= s.radius;
                    b.hi[i] += s.radius;
                }
                return b;
            } else if constexpr (std::is_same_v<T, Polyline>) {
                return from_points(s.vertices);
            } else {
                return ifs_box(s);
            }
        },
        m.shape);
    if (m.window) {
        if (!out) return m.window;
        Box b = *out;
        for (int i = 0; i < m.dim; ++i) {
            b.lo[i] = std::max(b.lo[i], m.window->lo[i]);
            b.hi[i] = std::min(b.hi[i], m.window->hi[i]);
        }
        return b;
    }
    return out;
}

// ---------------------------------------------------------------- sampling

namespace {

bool boxes_meet(const Box& a, const Box& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a.hi[i] < b.lo[i] || b.hi[i] < a.lo[i]) return false;
    return true;
}

// Random descent through cylinders, pruning those whose image of the
// attractor box misses the window. Empty when the descent hits a dead end.
Vec sample_ifs_point(const IFS& ifs, const Hull& h, const Box& tight, int depth, const std::vector<double>& weights,
                     Rng& rng, const Box* window) {
    const int n = ifs.dim();
    Similarity s = identity_similarity(n);
    for (int level = 0; level < depth; ++level) {
        double total = 0.0;
        std::vector<double> w(ifs.maps.size(), 0.0);
        std::vector<Similarity> kids;
        kids.reserve(ifs.maps.size());
        for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
            kids.push_back(s.compose(ifs.maps[i]));
            if (window && !boxes_meet(*window, image_box(kids[i], tight).expanded(1e-12))) continue;
            w[i] = weights[i];
            total += w[i];
        }
        if (total <= 0.0) return {};
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        while (pick + 1 < w.size() && (u >= w[pick] || w[pick] == 0.0)) {
            u -= w[pick];
            ++pick;
        }
        if (w[pick] == 0.0) {
            for (pick = w.size(); pick-- > 0;)
                if (w[pick] > 0.0) break;
        }
        s = kids[pick];
    }
    return s.apply(h.center);
}

}  // namespace

std::vector<Vec> sample_on_set(const SetModel& m, std::size_t k, Rng& rng, const Box* window, double tol) {
    if (k < 1) throw ArgumentError("sample_on_set: k must be >= 1");
    if (!window && m.window) window = &*m.window;
    if (window && window->dim() != m.dim) throw ArgumentError("sample_on_set: window dimension mismatch");
    std::vector<Vec> out;
    out.reserve(k);
    const std::size_t max_attempts = 2000 * k + 10000;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointSet>) {
                std::vector<const Vec*> pool;
                for (const auto& p : s.points)
                    if (!window || window->contains(p)) pool.push_back(&p);
                if (pool.empty()) return;
                for (std::size_t i = 0; i < k; ++i) out.push_back(*pool[rng.index(pool.size())]);
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                if (!window) throw ArgumentError("sampling a plane needs a bounding window");
                const int l = static_cast<int>(s.basis.size());
                // Parameter box: the window's corners projected on the basis.
                Vec plo(l, std::numeric_limits<double>::infinity()), phi(l, -plo[0]);
                const int corners = 1 << m.dim;
                for (int c = 0; c < corners; ++c) {
                    for (int a = 0; a < l; ++a) {
                        double t = 0.0;
                        for (int i = 0; i < m.dim; ++i) {
                            double x = (c >> i & 1) ? window->hi[i] : window->lo[i];
                            t += (x - s.base[i]) * s.basis[a][i];
                        }
                        plo[a] = std::min(plo[a], t);
                        phi[a] = std::max(phi[a], t);
                    }
                }
                if (l == 1) {
                    // Exact clip of the line against the window.
                    double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
                    for (int i = 0; i < m.dim; ++i) {
                        double u = s.basis[0][i];
                        if (u == 0.0) {
                            if (s.base[i] < window->lo[i] || s.base[i] > window->hi[i]) return;
                            continue;
                        }
                        double t1 = (window->lo[i] - s.base[i]) / u, t2 = (window->hi[i] - s.base[i]) / u;
                        lo = std::max(lo, std::min(t1, t2));
                        hi = std::min(hi, std::max(t1, t2));
                    }
                    if (!(lo <= hi)) return;
                    plo[0] = lo;
                    phi[0] = hi;
                }
                std::size_t attempts = 0;
                Vec p(m.dim);
                while (out.size() < k && attempts++ < max_attempts) {
                    p = s.base;
                    for (int a = 0; a < l; ++a) {
                        double t = rng.uniform(plo[a], phi[a]);
                        for (int i = 0; i < m.dim; ++i) p[i] += t * s.basis[a][i];
                    }
                    if (l == 1 || window->contains(p)) out.push_back(p);
                }
            } else if constexpr (std::is_same_v<T, Sphere>) {
                std::size_t attempts = 0;
                Vec p(m.dim);
                while (out.size() < k && attempts++ < max_attempts) {
                    double nn = 0.0;
                    for (int i = 0; i < m.dim; ++i) {
                        p[i] = rng.normal();
                        nn += p[i] * p[i];
                    }
                    nn = std::sqrt(nn);
                    if (nn == 0.0) continue;
                    for (int i = 0; i < m.dim; ++i) p[i] = s.center[i] + s.radius * p[i] / nn;
                    if (!window || window->contains(p)) out.push_back(p);
                }
            } else if constexpr (std::is_same_v<T, Polyline>) {
                std::vector<double> cum{0.0};
                for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i)
                    cum.push_back(cum.back() + dist(s.vertices[i], s.vertices[i + 1], Metric::euclidean));
                std::size_t attempts = 0;
                Vec p(m.dim);
                while (out.size() < k && attempts++ < max_attempts) {
                    if (cum.back() == 0.0) {
                        p = s.vertices[0];
                    } else {
                        double u = rng.uniform() * cum.back();
                        std::size_t seg = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin() - 1;
                        seg = std::min(seg, s.vertices.size() - 2);
                        double len = cum[seg + 1] - cum[seg];
                        double t = len > 0 ? (u - cum[seg]) / len : 0.0;
                        for (int i = 0; i < m.dim; ++i)
                            p[i] = s.vertices[seg][i] + t * (s.vertices[seg + 1][i] - s.vertices[seg][i]);
                    }
                    if (!window || window->contains(p)) out.push_back(p);
                }
            } else {
                const Hull h = ifs_hull(s);
                double rmax = 0.0;
                for (const auto& f : s.maps) rmax = std::max(rmax, f.ratio);
                double eps = std::min(tol, 1e-6);
                int depth = std::clamp(static_cast<int>(std::ceil(std::log(eps / std::max(h.radius, 1e-300)) /
                                                                  std::log(rmax))),
                                       1, 60);
                double d = similarity_dimension(s);
                std::vector<double> weights;
                for (const auto& f : s.maps) weights.push_back(std::pow(f.ratio, d));
                const Box tight = ifs_box(s);
                std::size_t attempts = 0;
                while (out.size() < k && attempts++ < max_attempts) {
                    Vec p = sample_ifs_point(s, h, tight, depth, weights, rng, window);
                    // A window that keeps producing dead ends most likely misses F.
                    if (p.empty() && out.empty() && attempts >= 1000) break;
                    if (p.empty()) continue;
                    if (!window || window->contains(p)) out.push_back(std::move(p));
                }
            }
        },
        m.shape);
    if (m.torus)
        for (auto& p : out)
            for (double& v : p) v = wrap01(v);
    return out;
}

// ---------------------------------------------------------------- IFS words

double word_ratio(const IFS& ifs, const Word& w) {
    double r = 1.0;
    for (int a : w) r *= ifs.maps.at(a).ratio;
    return r;
}

std::vector<Word> words_at_scale(const IFS& ifs, double r, std::size_t cap) {
    if (!(r > 0.0) || r >= 1.0) throw ArgumentError("words_at_scale needs 0 < r < 1");
    if (ifs.maps.size() < 2) throw ArgumentError("IFS needs at least 2 maps");
    std::vector<Word> out;
    Word w;
    // Depth-first in lexicographic order.
    std::function<void(double)> rec = [&](double prod) {
        for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
            w.push_back(static_cast<int>(i));
            double p = prod * ifs.maps[i].ratio;
            if (p <= r) {
                if (out.size() >= cap) throw CapacityError("words_at_scale: word count exceeds cap");
                out.push_back(w);
            } else {
                rec(p);
            }
            w.pop_back();
        }
    };
    rec(1.0);
    return out;
}

double similarity_dimension(const IFS& ifs) {
    if (ifs.maps.empty()) throw ArgumentError("similarity_dimension: no maps");
    auto sum = [&](double d) {
        double s = 0.0;
        for (const auto& f : ifs.maps) s += std::pow(f.ratio, d);
        return s;
    };
    double lo = 0.0, hi = 1.0;
    while (sum(hi) > 1.0) hi *= 2.0;
    while (hi - lo > 1e-13) {
        double mid = 0.5 * (lo + hi);
        (sum(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- isometries

Vec Isometry::apply(VecView x) const {
    Vec y = rotation ? rotation->apply(x) : Vec(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += translation[i];
    if (wrap)
        for (double& v : y) v = wrap01(v);
    return y;
}

SetModel transform_model(const SetModel& m, const Isometry& iso) {
    if (static_cast<int>(iso.translation.size()) != m.dim) throw ArgumentError("isometry dimension mismatch");
    const bool rotated = iso.rotation && !iso.rotation->is_identity();
    if (iso.rotation) {
        if (iso.rotation->n != m.dim) throw ArgumentError("rotation dimension mismatch");
        if (!iso.rotation->is_orthogonal(1e-12)) throw ArgumentError("rotation must be orthogonal");
    }
    const bool wrap = iso.wrap || m.torus;
    if (wrap && rotated && std::holds_alternative<AffinePlane>(m.shape) && !iso.rotation->is_signed_permutation())
        throw UnsupportedError("torus wrap with a non-axis-preserving rotation of a plane");
    auto move = [&](VecView x) {
        Vec y = rotated ? iso.rotation->apply(x) : Vec(x.begin(), x.end());
        for (int i = 0; i < m.dim; ++i) y[i] += iso.translation[i];
        return y;
    };
    auto rot = [&](VecView x) { return rotated ? iso.rotation->apply(x) : Vec(x.begin(), x.end()); };
    SetModel out = m;
    out.torus = wrap;
    if (m.window && !wrap) {
        // Windows stay axis-aligned: keep the bounding box of the moved corners.
        Box b{Vec(m.dim, std::numeric_limits<double>::infinity()), Vec(m.dim, -std::numeric_limits<double>::infinity())};
        for (int c = 0; c < (1 << m.dim); ++c) {
            Vec x(m.dim);
            for (int i = 0; i < m.dim; ++i) x[i] = (c >> i & 1) ? m.window->hi[i] : m.window->lo[i];
            Vec y = move(x);
            for (int i = 0; i < m.dim; ++i) {
                b.lo[i] = std::min(b.lo[i], y[i]);
                b.hi[i] = std::max(b.hi[i], y[i]);
            }
        }
        out.window = b;
    } else if (wrap) {
        out.window.reset();
    }
    // Integer shift bringing a reference point into [0,1)^n on the torus.
    auto lattice_shift = [&](VecView ref) {
        Vec k(m.dim, 0.0);
        if (wrap)
            for (int i = 0; i < m.dim; ++i) k[i] = -std::floor(ref[i]);
        return k;
    };
    std::visit(
        [&](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointSet>) {
                for (auto& p : s.points) {
                    p = move(p);
                    if (wrap)
                        for (double& v : p) v = wrap01(v);
                }
            } else if constexpr (std::is_same_v<T, AffinePlane>) {
                s.base = move(s.base);
                for (auto& b : s.basis) b = rot(b);
                if (wrap)
                    for (double& v : s.base) v = wrap01(v);
            } else if constexpr (std::is_same_v<T, Sphere>) {
                s.center = move(s.center);
                Vec k = lattice_shift(s.center);
                for (int i = 0; i < m.dim; ++i) s.center[i] += k[i];
            } else if constexpr (std::is_same_v<T, Polyline>) {
                for (auto& v : s.vertices) v = move(v);
                Vec k = lattice_shift(s.vertices[0]);
                for (auto& v : s.vertices)
                    for (int i = 0; i < m.dim; ++i) v[i] += k[i];
            } else {
                // Conjugate each map by the isometry.
                Mat Q = rotated ? *iso.rotation : Mat::identity(m.dim);
                Mat Qt = Q.transpose();
                Vec t = iso.translation;
                Vec fp = move(fixed_point(s.maps[0]));
                Vec k = lattice_shift(fp);
                for (int i = 0; i < m.dim; ++i) t[i] += k[i];
                for (auto& f : s.maps) {
                    Mat O = Q.mul(f.orth).mul(Qt);
                    Vec qs = Q.apply(f.shift);
                    Vec ot = O.apply(t);
                    Vec shift(m.dim);
                    for (int i = 0; i < m.dim; ++i) shift[i] = -f.ratio * ot[i] + qs[i] + t[i];
                    f.orth = O;
                    f.shift = shift;
                }
            }
        },
        out.shape);
    return out;
}

Mat random_rotation(int n, Rng& rng) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR();
    Mat out = Mat::identity(n);
    for (int j = 0; j < n; ++j) {
        double sign = R(j, j) < 0 ? -1.0 : 1.0;
        for (int i = 0; i < n; ++i) out(i, j) = Q(i, j) * sign;
    }
    return out;
}

// ---------------------------------------------------------------- exact 1-D

bool has_exact_1d(const SetModel& m) {
    return m.dim == 1 && (std::holds_alternative<PointSet>(m.shape) || std::holds_alternative<IFS>(m.shape));
}

std::vector<std::pair<double, double>> neighborhood_intervals_1d(const SetModel& m, double delta, double lo,
                                                                 double hi) {
    if (!has_exact_1d(m)) throw UnsupportedError("exact 1-D path needs a 1-D point set or IFS");
    std::vector<std::pair<double, double>> iv;
    auto emit = [&](double a, double b) {
        a = std::max(a, lo);
        b = std::min(b, hi);
        if (a < b) iv.emplace_back(a, b);
    };
    std::vector<double> shifts{0.0};
    if (m.torus) shifts = {-1.0, 0.0, 1.0};
    if (const auto* ps = std::get_if<PointSet>(&m.shape)) {
        for (double sh : shifts)
            for (const auto& p : ps->points) emit(p[0] + sh - delta, p[0] + sh + delta);
    } else {
        const IFS& ifs = std::get<IFS>(m.shape);
        const Box b = ifs_box(ifs);
        // Once a cylinder's hull is shorter than 2*delta its neighbourhood is
        // exactly the hull widened by delta, because both hull endpoints lie in it.
        std::function<void(const Similarity&, double)> rec = [&](const Similarity& s, double sh) {
            double a = s.apply(Vec{b.lo[0]})[0] + sh, c = s.apply(Vec{b.hi[0]})[0] + sh;
            if (a > c) std::swap(a, c);
            if (c + delta <= lo || a - delta >= hi) return;
            if (c - a < 2 * delta) {
                emit(a - delta, c + delta);
                return;
            }
            for (const auto& f : ifs.maps) rec(s.compose(f), sh);
        };
        for (double sh : shifts) rec(identity_similarity(1), sh);
    }
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& x : iv) {
        if (!merged.empty() && x.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, x.second);
        else
            merged.push_back(x);
    }
    return merged;
}

}  // namespace mtp
