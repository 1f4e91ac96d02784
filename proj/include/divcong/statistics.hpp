#pragma once

// Moments of Delta(q1 q2 x), the mean value of the unscaled Delta(x), the
// short-interval variance I(T, h0) and F_k excursions.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "divcong/delta.hpp"
#include "divcong/quadrature.hpp"

namespace divcong {

inline constexpr double kDefaultTolerance = 1e-6;
inline constexpr int kMaxMomentOrder = 9;

// Chunk width in t: every chunk spans 2^16 integers on the x = q1 q2 t axis.
double chunk_width(const DeltaEvaluator& ev) noexcept;

// Integrates g(t, delta) -> Values<M> of Delta(q1 q2 t) over each interval
// between consecutive breakpoints (t axis).
template <std::size_t M, class G>
IntervalIntegrals<M> integrate_delta_functional(std::span<const double> breakpoints, const DeltaEvaluator& ev,
                                                double tol, G g);

struct PowerIntegrals {
    std::vector<double> grid;                    // upper limits T_j
    std::vector<std::array<double, kMaxMomentOrder>> cumulative;  // [j][k-1] = int_1^{T_j} Delta^k
    QuadratureStats stats;

    friend bool operator==(const PowerIntegrals&, const PowerIntegrals&) = default;
};

// One pass over [t_start, max(grid)] producing int_{t_start}^{T_j} Delta^k(q1 q2 x) dx
// for all k <= 9 and every T_j. grid must be nondecreasing and >= t_start.
PowerIntegrals integrate_delta_powers(std::span<const double> grid, const DeltaEvaluator& ev,
                                      double tol = kDefaultTolerance, double t_start = 1.0);

double integrate_delta_power(double T, int k, const DeltaEvaluator& ev, double tol = kDefaultTolerance);

// Reference path: materialized segments, direct logarithms, one plain loop.
double integrate_delta_power_serial(double T, int k, const DeltaEvaluator& ev);

// int_1^T |Delta(q1 q2 x)|^a dx for real a > 0.
double integrate_abs_delta_power(double T, double a, const DeltaEvaluator& ev, double tol = kDefaultTolerance);

struct MeanValueResult {
    double T = 0.0;
    double integral = 0.0;        // int_1^T Delta(x; p) dx, unscaled argument
    double slope_estimate = 0.0;  // integral / T
    double slope_target = 0.0;    // (r1/q1 - 1/2)(r2/q2 - 1/2)
    double residual_normalized = 0.0;  // (integral - target T) / ((q1 q2)^{1/4} T^{3/4})
    double error_estimate = 0.0;

    friend bool operator==(const MeanValueResult&, const MeanValueResult&) = default;
};

double mean_value_slope_target(const CongruenceParams& p) noexcept;
MeanValueResult mean_value_check(double T, const DeltaEvaluator& ev, double tol = kDefaultTolerance);

struct MomentReport {
    int k = 0;
    CongruenceParams params;
    std::vector<double> grid;
    std::vector<double> integrals;  // int_1^T Delta^k(q1 q2 x) dx
    std::vector<double> ck_hat;     // integrals / int_1^T x^{k/4} dx
    double fitted_Ck = 0.0;         // median of ck_hat
    double fitted_exponent = 0.0;   // log-log slope of |integrals| against T
    std::vector<double> residuals;  // ck_hat - fitted_Ck
    bool sign_consistent = true;    // all integrals share one sign (exponent fit meaningful)
    double error_estimate = 0.0;
    std::vector<std::string> warnings;

    friend bool operator==(const MomentReport&, const MomentReport&) = default;
};

// (T^{1+k/4} - 1) / (1 + k/4)
double power_weight_integral(double T, int k) noexcept;

MomentReport moment_report_from(int k, const CongruenceParams& p, std::span<const double> grid,
                                std::span<const double> integrals, double error_estimate);
MomentReport estimate_Ck(int k, std::span<const double> grid, const DeltaEvaluator& ev,
                         double tol = kDefaultTolerance);
// All orders 1..k_max from a single pass.
std::vector<MomentReport> estimate_Ck_all(int k_max, std::span<const double> grid, const DeltaEvaluator& ev,
                                          double tol = kDefaultTolerance);

// Log-spaced grid with per_decade points per factor of ten, endpoints included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

struct ShortIntervalResult {
    double T = 0.0;
    double h0 = 0.0;
    double integral = 0.0;  // I(T, h0)
    double envelope = 0.0;  // T h0 log^3(sqrt(T)/h0) + T log^6 T
    double ratio = 0.0;
    bool in_lemma_range = true;  // 1 <= h0 <= sqrt(T)/2
    double error_estimate = 0.0;

    friend bool operator==(const ShortIntervalResult&, const ShortIntervalResult&) = default;
};

double short_interval_envelope(double T, double h0) noexcept;

// int_lo^hi (Delta(q1 q2 (x + h)) - Delta(q1 q2 x))^2 dx, breakpoints from both jump sets.
double shifted_difference_integral(double lo, double hi, double h, const DeltaEvaluator& ev,
                                   double tol = kDefaultTolerance, QuadratureStats* stats = nullptr);

ShortIntervalResult short_interval_variance(double T, double h0, const DeltaEvaluator& ev,
                                            double tol = kDefaultTolerance);

struct DyadicDifference {
    double h = 0.0;
    double integral = 0.0;  // int_T^{2T} (Delta*(t + h) - Delta*(t))^2 dt
    double normalized = 0.0;  // integral / (h T log^7 T)

    friend bool operator==(const DyadicDifference&, const DyadicDifference&) = default;
};

// Differences at the dyadic offsets h = b 2^j (H0 = 2^lambda b, 1 <= b < 2).
std::vector<DyadicDifference> dyadic_differences(double T, double H0, const DeltaEvaluator& ev,
                                                 double tol = kDefaultTolerance);

struct SignedPartMoments {
    double T = 0.0;
    double square_plus = 0.0;   // int_T^{2T} Delta*_+^2
    double square_minus = 0.0;  // int_T^{2T} Delta*_-^2
    double square = 0.0;        // int_T^{2T} Delta*^2
    double abs_first = 0.0;     // int_T^{2T} |Delta*|
    double first = 0.0;         // int_T^{2T} Delta*
    double ratio_plus = 0.0;    // square_plus / T^{3/2}
    double ratio_minus = 0.0;

    friend bool operator==(const SignedPartMoments&, const SignedPartMoments&) = default;
};

SignedPartMoments signed_part_moments(double T, const DeltaEvaluator& ev, double tol = kDefaultTolerance);

struct ExcursionReport {
    int k = 0;
    double T = 0.0;
    double X_star = 0.0;
    double F_k_value = 0.0;
    double normalized = 0.0;  // F_k_value / (X^{1/2+k/4} log^{-7} X)
    double ck_used = 0.0;
    std::size_t grid_points = 0;
    std::vector<double> X_grid;
    std::vector<double> F_values;
    std::vector<std::string> warnings;

    friend bool operator==(const ExcursionReport&, const ExcursionReport&) = default;
};

// F_k(X) = int_1^X Delta^k(q1 q2 x) dx - Ck int_1^X x^{k/4} dx over an X grid
// in [T, 2T]; returns the X maximizing |F_k|.
ExcursionReport f_k_excursion(int k, double T, double Ck, const DeltaEvaluator& ev, std::size_t grid_points = 201,
                              double tol = kDefaultTolerance);
ExcursionReport f_k_excursion_on(int k, double T, double Ck, std::span<const double> X_grid,
                                 const DeltaEvaluator& ev, double tol = kDefaultTolerance);

double median(std::vector<double> v);
// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace divcong

#include "divcong/detail/statistics_impl.hpp"
