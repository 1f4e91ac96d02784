#pragma once

// The truncated Voronoi-type series R0(x; y) and the kernel-smoothing
// experiment that isolates its leading sinusoid.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "divcong/delta.hpp"
#include "divcong/statistics.hpp"

namespace divcong {

struct VoronoiConfig {
    double y = 0.0;  // truncation length, terms n <= y
    CongruenceParams params;

    friend bool operator==(const VoronoiConfig&, const VoronoiConfig&) = default;
};

// R0(x; y) = x^{1/4} / (sqrt(2) pi) sum_{n <= y} n^{-3/4} sum_{n = h l}
//            cos(4 pi sqrt(n x) - 2 pi (h r2/q2 + l r1/q1 + 1/8)).
// The inner sum over ordered factorizations is collapsed once into one
// amplitude and phase per n.
class VoronoiSeries {
public:
    explicit VoronoiSeries(const VoronoiConfig& cfg);

    const VoronoiConfig& config() const noexcept { return cfg_; }
    std::size_t terms() const noexcept { return amplitude_.size(); }

    // R0(x; y), x in the scaled variable (approximates Delta(q1 q2 x)).
    double r0(double x) const;
    // sum_{n<=y} n^{-3/4} sum cos(4 pi sqrt(n) s - theta), i.e. sqrt(2) pi s^{-1/2} R0(s^2; y).
    double r0_star(double s) const;
    // Exact value of int_{-1}^{1} r0_star(t + alpha u) K_zeta(u) du for zeta = +-1:
    // returns {zeta-independent part, coefficient of zeta}.
    std::pair<double, double> kernel_transform(double t, double alpha) const;

    // Per-n amplitude n^{-3/4} |c_n| and phase arg c_n, index n - 1.
    const std::vector<double>& amplitudes() const noexcept { return amplitude_; }
    const std::vector<double>& phases() const noexcept { return phase_; }

private:
    VoronoiConfig cfg_;
    std::vector<double> amplitude_;
    std::vector<double> phase_;
    std::vector<double> frequency_;  // 4 pi sqrt(n)
};

double r0_truncated(double x, const VoronoiConfig& cfg);

struct KernelConfig {
    double alpha = 10.0;
    int zeta = 1;

    static KernelConfig make(double alpha, int zeta);

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

// K_zeta(u) = (1 - |u|)(1 + zeta sin(4 pi alpha u)) for |u| <= 1.
double kernel_weight(double u, const KernelConfig& k);

// -zeta/2 sin(4 pi t - 2 pi (r2/q2 + r1/q1 + 1/8)).
double kernel_prediction(double t, const CongruenceParams& p, int zeta);

struct KernelIntegral {
    double value = 0.0;      // int_{-1}^{1} Delta**(t + alpha u) K_zeta(u) du
    double even_part = 0.0;  // int Delta**(t + alpha u)(1 - |u|) du
    double odd_part = 0.0;   // int Delta**(t + alpha u)(1 - |u|) sin(4 pi alpha u) du
    double error_estimate = 0.0;
    std::uint64_t pieces = 0;
    std::uint64_t unresolved = 0;

    friend bool operator==(const KernelIntegral&, const KernelIntegral&) = default;
};

// Optional bounded perturbation f added to Delta(q1 q2 s^2) inside Delta**.
using Perturbation = std::function<double(double x)>;

// Piecewise quadrature in s = t + alpha u: jumps of Delta(q1 q2 s^2) sit at
// s = sqrt(n / (q1 q2)), plus cuts at u = 0 and every 1/(16 alpha) in u.
// Throws ToleranceNotMet when pieces stay unresolved after bisection.
KernelIntegral smoothed_delta_integral(double t, const KernelConfig& k, const DeltaEvaluator& ev,
                                       double tol = kDefaultTolerance, const Perturbation& f = {});

// The same quadrature with Delta** replaced by 1; equals 1 up to rounding.
double kernel_mass(double t, const KernelConfig& k, const DeltaEvaluator& ev, double tol = kDefaultTolerance);

struct KernelSample {
    double t = 0.0;
    int zeta = 1;
    double measured = 0.0;    // smoothed_delta_integral
    double prediction = 0.0;  // kernel_prediction
    double series = 0.0;      // same integral of r0_star, exact
    double error_estimate = 0.0;

    friend bool operator==(const KernelSample&, const KernelSample&) = default;
};

// Kernel integrals at each t for each zeta, with the residual split
//   |measured - prediction| <= |series - prediction| + |measured - series|
//                           <= A alpha^{-2} + B t^{-1/2} log^3 t.
struct KernelExperiment {
    CongruenceParams params;
    double alpha = 0.0;
    double y = 0.0;  // series truncation used for the split
    std::vector<KernelSample> samples;
    double correlation_plus = 0.0;   // Pearson, measured vs prediction, zeta = +1
    double correlation_minus = 0.0;  // zeta = -1
    double max_abs_residual = 0.0;
    double A = 0.0;  // alpha^2 max |series - prediction|
    double B = 0.0;  // max |measured - series| / (t^{-1/2} log^3 t)

    friend bool operator==(const KernelExperiment&, const KernelExperiment&) = default;
};

KernelExperiment kernel_experiment(std::span<const double> t_values, double alpha, std::span<const int> zetas,
                                   const DeltaEvaluator& ev, double y, double tol = kDefaultTolerance);

double pearson(std::span<const double> a, std::span<const double> b);

struct ResidualMeanSquare {
    double U = 0.0;
    double y = 0.0;
    double mean_square = 0.0;  // (1/U) int_U^{2U} (Delta(q1 q2 x) - R0(x; y))^2 dx
    double envelope = 0.0;     // U^{1/2} y^{-1/2} log^3 U + log^6 U
    double ratio = 0.0;
    double error_estimate = 0.0;
    bool constraint_violated = false;  // y outside (U^eps, min(H^2, (q1 q2)^2 U) log^{-4} U], H = U

    friend bool operator==(const ResidualMeanSquare&, const ResidualMeanSquare&) = default;
};

ResidualMeanSquare truncation_residual_meansquare(double U, const VoronoiConfig& cfg, const DeltaEvaluator& ev,
                                                  double tol = kDefaultTolerance);

struct SeriesComparison {
    double U = 0.0;
    double y = 0.0;
    double mean_delta = 0.0;
    double mean_r0 = 0.0;
    double var_delta = 0.0;
    double var_r0 = 0.0;
    double correlation = 0.0;  // continuous Pearson correlation over [U, 2U]
    ResidualMeanSquare residual;

    friend bool operator==(const SeriesComparison&, const SeriesComparison&) = default;
};

SeriesComparison compare_delta_r0(double U, const VoronoiConfig& cfg, const DeltaEvaluator& ev,
                                  double tol = kDefaultTolerance);

}  // namespace divcong
