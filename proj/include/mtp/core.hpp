#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtp {

using Vec = std::vector<double>;
using VecView = std::span<const double>;

// Error taxonomy. ArgumentError and its relatives map to "validation" failures,
// NumericError and its relatives to "the computation did not succeed".
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArgumentError : Error { using Error::Error; };
struct DomainError : ArgumentError { using ArgumentError::ArgumentError; };
struct RangeError : ArgumentError { using ArgumentError::ArgumentError; };
struct UnsupportedError : ArgumentError { using ArgumentError::ArgumentError; };
struct NumericError : Error { using Error::Error; };
struct EstimationError : NumericError { using NumericError::NumericError; };
struct CapacityError : NumericError { using NumericError::NumericError; };

struct CoverageShortfall : NumericError {
    double achieved;
    CoverageShortfall(const std::string& what, double achieved_fraction)
        : NumericError(what), achieved(achieved_fraction) {}
};

enum class Metric { sup, euclidean };

double norm(VecView v, Metric m);
double dist(VecView a, VecView b, Metric m);
// Per-coordinate wrapped distance on the flat torus [0,1)^n.
double torus_dist(VecView a, VecView b, Metric m);
double wrap01(double x);

// Volume of B(0,r) in R^n under the metric.
double ball_volume(int n, double r, Metric m);

std::vector<double> logspace(double lo, double hi, int count);

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(mix64(seed)) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::uint64_t next() { return eng_(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Axis-aligned box [lo, hi].
struct Box {
    Vec lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
    double volume() const;
    bool contains(VecView x) const;
    Box expanded(double d) const;
};

// Thread count used by parallel_for; results never depend on it.
void set_threads(int n);
int threads();
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

// Ordinary least squares y ~ X b (X includes any intercept column).
struct LsqResult {
    Vec coef;
    Vec stderr_;
    Vec residuals;
};
LsqResult least_squares(const std::vector<Vec>& rows, const Vec& y);

}  // namespace mtp
