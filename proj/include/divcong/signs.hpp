#pragma once

// Sign changes, extremal witnesses and persistent same-sign runs of
// Delta(q1 q2 t) relative to the envelope c t^{1/4}.
//
// Everything here consumes a PiecewiseFunction: the exact evaluator, or a
// synthetic function in tests. Within a segment the function is sampled at
// spacing `step` and sign changes between samples are located by bisection.
// For the exact evaluator each segment is monotone (d/dt of the main term is
// log t + 1 - A > 0 for t >= 1 because A < 0), so endpoints already decide.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "divcong/delta.hpp"

namespace divcong {

inline constexpr double kDefaultC1 = 0.05;
inline constexpr double kDefaultC2 = 30.0;
inline constexpr double kDefaultC5 = 0.05;
inline constexpr double kDefaultStep = 0.25;
inline constexpr double kRootTolerance = 1e-9;

// q1 >= 2 and q2 >= 3, as required for the sign-change guarantee.
bool sign_change_hypothesis_holds(const CongruenceParams& p) noexcept;

// Ordered abscissae in [a, b] where the sign of f flips. A jump across zero
// counts once, at the jump.
std::vector<double> scan_sign_changes_between(double a, double b, double step, const PiecewiseFunction& f);

// Window [T, T + c2 sqrt(T)].
std::vector<double> scan_sign_changes(double T, double c2, double step, const PiecewiseFunction& f);

struct ExtremalPoints {
    std::optional<double> t1;  // f(t1) >= c1 t1^{1/4}
    std::optional<double> t2;  // f(t2) <= -c1 t2^{1/4}

    friend bool operator==(const ExtremalPoints&, const ExtremalPoints&) = default;
};

ExtremalPoints extremal_points(double T, double c1, double c2, const PiecewiseFunction& f,
                               double step = kDefaultStep);

struct WindowResult {
    double window_start = 0.0;
    double window_end = 0.0;
    bool found_positive_extreme = false;
    bool found_negative_extreme = false;
    std::size_t crossing_count = 0;
    std::optional<double> first_crossing;
    std::optional<double> t1;
    std::optional<double> t2;

    friend bool operator==(const WindowResult&, const WindowResult&) = default;
};

// Windows processed concurrently, results in input order.
std::vector<WindowResult> scan_windows(std::span<const double> starts, double c1, double c2, double step,
                                       const PiecewiseFunction& f);

// Smallest c such that every window [T, T + c sqrt(T)] contains a crossing,
// taken from the first crossings; nullopt if some window had none.
std::optional<double> minimal_c2_for_crossings(std::span<const WindowResult> windows);
// Same, requiring both witnesses.
std::optional<double> minimal_c2_for_witnesses(std::span<const WindowResult> windows);

using Interval = std::pair<double, double>;

struct SignRunReport {
    double T = 0.0;
    double threshold_c = 0.0;
    std::vector<Interval> runs_plus;   // +f > c t^{1/4} throughout
    std::vector<Interval> runs_minus;  // -f > c t^{1/4} throughout
    double measure_plus = 0.0;
    double measure_minus = 0.0;
    double longest_plus = 0.0;
    double longest_minus = 0.0;
    std::vector<WindowResult> window_results;

    friend bool operator==(const SignRunReport&, const SignRunReport&) = default;
};

// Maximal runs in [T, 2T]; boundaries located by bisection to 1e-9.
SignRunReport detect_runs(double T, double c, const PiecewiseFunction& f, double step = kDefaultStep);

// Runs of sign * f - c t^{1/4} > 0 on [a, b].
std::vector<Interval> positive_runs(double a, double b, int sign, double c, const PiecewiseFunction& f,
                                    double step = kDefaultStep);

std::pair<double, double> positivity_measure(double T, double c, const PiecewiseFunction& f,
                                             double step = kDefaultStep);

// Delta*_+ (sign = +1) or Delta*_- (sign = -1) at t.
double delta_pm(double t, int sign, const PiecewiseFunction& f);

}  // namespace divcong
