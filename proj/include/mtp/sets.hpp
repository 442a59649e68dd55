#pragma once

#include "mtp/core.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mtp {

// Row-major n x n matrix.
struct Mat {
    int n = 0;
    std::vector<double> a;
    static Mat identity(int n);
    double operator()(int i, int j) const { return a[i * n + j]; }
    double& operator()(int i, int j) { return a[i * n + j]; }
    Vec apply(VecView x) const;
    Mat mul(const Mat& o) const;
    Mat transpose() const;
    bool is_identity(double tol = 1e-12) const;
    bool is_orthogonal(double tol = 1e-12) const;
    // Each row and column has exactly one entry of +-1.
    bool is_signed_permutation(double tol = 1e-12) const;
};

// x -> ratio * orth * x + shift
struct Similarity {
    double ratio = 0.5;
    Mat orth;
    Vec shift;
    Vec apply(VecView x) const;
    Similarity compose(const Similarity& inner) const;  // this o inner
};

struct IFS {
    std::vector<Similarity> maps;
    bool osc_declared = false;
    int dim() const { return maps.empty() ? 0 : static_cast<int>(maps[0].shift.size()); }

    static IFS middle_third_cantor();
    static IFS sierpinski();
};

struct PointSet {
    std::vector<Vec> points;
};
struct AffinePlane {
    Vec base;
    std::vector<Vec> basis;
};
// Sphere of dimension n-1 in R^n; a circle when n = 2.
struct Sphere {
    Vec center;
    double radius = 1.0;
};
struct Polyline {
    std::vector<Vec> vertices;
};

using Shape = std::variant<PointSet, AffinePlane, Sphere, Polyline, IFS>;

struct SetModel {
    Shape shape;
    int dim = 0;
    Metric metric = Metric::sup;
    bool torus = false;          // distances use the wrapped metric on [0,1)^n
    std::optional<Box> window;   // bounding window for unbounded models

    std::string variant_name() const;
};

SetModel make_points(std::vector<Vec> pts, Metric m = Metric::sup);
SetModel make_plane(Vec base, std::vector<Vec> basis, Metric m = Metric::sup);
SetModel make_sphere(Vec center, double radius, Metric m = Metric::sup);
SetModel make_polyline(std::vector<Vec> vertices, Metric m = Metric::sup);
SetModel make_ifs(IFS ifs, Metric m = Metric::sup);

// Throws ArgumentError on broken invariants.
void validate(const SetModel& m);

double distance_to_set(const SetModel& m, VecView x, double tol = 1e-9);
// Decision form of the distance query: is d(x, F) < delta?
bool within_distance(const SetModel& m, VecView x, double delta);

std::vector<Vec> sample_on_set(const SetModel& m, std::size_t k, Rng& rng,
                               const Box* window = nullptr, double tol = 1e-9);

// Bounding box of F, or of F restricted to its declared window.
std::optional<Box> bounding_box(const SetModel& m);

using Word = std::vector<int>;
std::vector<Word> words_at_scale(const IFS& ifs, double r, std::size_t cap = 10'000'000);
double word_ratio(const IFS& ifs, const Word& w);
double similarity_dimension(const IFS& ifs);

// Ball (Euclidean) containing the attractor: centre is the fixed point of map 0.
struct Hull {
    Vec center;
    double radius = 0.0;
};
Hull ifs_hull(const IFS& ifs);
Vec fixed_point(const Similarity& s);

struct Isometry {
    std::optional<Mat> rotation;
    Vec translation;
    bool wrap = false;
    Vec apply(VecView x) const;
};

SetModel transform_model(const SetModel& m, const Isometry& iso);

Mat random_rotation(int n, Rng& rng);

// For 1-D point sets and IFS attractors: the open delta-neighbourhood of F
// intersected with (lo, hi), as sorted disjoint intervals.
bool has_exact_1d(const SetModel& m);
std::vector<std::pair<double, double>> neighborhood_intervals_1d(const SetModel& m, double delta,
                                                                 double lo, double hi);

}  // namespace mtp
