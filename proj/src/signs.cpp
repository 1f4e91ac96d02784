#include "divcong/signs.hpp"

#include <algorithm>
#include <cmath>

#include "divcong/error.hpp"
#include "divcong/parallel.hpp"

namespace divcong {
namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void check_step(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw InvalidArgument("step", "must satisfy 0 < step <= 1");
}

// Interior sample abscissae of [lo, hi] at spacing step (endpoints excluded).
template <class Fn>
void for_each_sample(double lo, double hi, double step, Fn&& fn) {
    const auto n = static_cast<std::int64_t>(std::ceil((hi - lo) / step));
    for (std::int64_t i = 1; i < n; ++i) fn(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n));
}

// Root of g on [a, b] given sign(g(a)) != sign(g(b)).
template <class G>
double bisect(G&& g, double a, double b) {
    const int sa = sign_of(g(a));
    while (b - a > kRootTolerance) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        if (sign_of(g(m)) == sa)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

// Point strictly inside seg near one end, safe against floor(q t) rounding.
double inside_near_lo(const Segment& s) { return s.t_lo + 1e-6 * (s.t_hi - s.t_lo); }
double inside_near_hi(const Segment& s) { return s.t_hi - 1e-6 * (s.t_hi - s.t_lo); }

}  // namespace

bool sign_change_hypothesis_holds(const CongruenceParams& p) noexcept {
    return p.first.q >= 2 && p.second.q >= 3;
}

std::vector<double> scan_sign_changes_between(double a, double b, double step, const PiecewiseFunction& f) {
    check_step(step);
    if (!(b > a)) throw InvalidArgument("window", "empty window");
    std::vector<double> out;
    int last_sign = 0;
    double last_t = a;
    for (const Segment& seg : f.segments(a, b)) {
        auto g = [&](double t) { return f.value(seg, t); };
        auto visit = [&](double t, double v, bool same_segment) {
            const int s = sign_of(v);
            if (s == 0) return;
            if (last_sign != 0 && s != last_sign) {
                if (t == last_t)
                    out.push_back(t);  // jump across zero
                else if (same_segment)
                    out.push_back(bisect(g, last_t, t));
                else
                    out.push_back(seg.t_lo);
            }
            last_sign = s;
            last_t = t;
        };
        visit(seg.t_lo, g(seg.t_lo), false);
        for_each_sample(seg.t_lo, seg.t_hi, step, [&](double t) { visit(t, g(t), true); });
        visit(seg.t_hi, g(seg.t_hi), true);
    }
    return out;
}

std::vector<double> scan_sign_changes(double T, double c2, double step, const PiecewiseFunction& f) {
    if (!(T > 0.0)) throw InvalidArgument("T", "must be positive");
    if (!(c2 > 0.0)) throw InvalidArgument("c2", "must be positive");
    return scan_sign_changes_between(T, T + c2 * std::sqrt(T), step, f);
}

ExtremalPoints extremal_points(double T, double c1, double c2, const PiecewiseFunction& f, double step) {
    check_step(step);
    if (!(T > 0.0)) throw InvalidArgument("T", "must be positive");
    if (!(c1 >= 0.0)) throw InvalidArgument("c1", "must be nonnegative");
    if (!(c2 > 0.0)) throw InvalidArgument("c2", "must be positive");
    ExtremalPoints out;
    auto try_plus = [&](double t) {
        if (!out.t1 && f.at(t) >= c1 * std::pow(t, 0.25)) out.t1 = t;
    };
    auto try_minus = [&](double t) {
        if (!out.t2 && f.at(t) <= -c1 * std::pow(t, 0.25)) out.t2 = t;
    };
    for (const Segment& seg : f.segments(T, T + c2 * std::sqrt(T))) {
        try_plus(inside_near_lo(seg));
        try_minus(inside_near_hi(seg));
        for_each_sample(seg.t_lo, seg.t_hi, step, [&](double t) {
            try_plus(t);
            try_minus(t);
        });
        if (out.t1 && out.t2) break;
    }
    return out;
}

std::vector<WindowResult> scan_windows(std::span<const double> starts, double c1, double c2, double step,
                                       const PiecewiseFunction& f) {
    std::vector<WindowResult> out(starts.size());
    const auto n = static_cast<std::int64_t>(starts.size());
    for (double T : starts)
        if (!(T > 0.0)) throw InvalidArgument("T", "must be positive");
    FirstError errors;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) errors.run([&] {
        const double T = starts[i];
        WindowResult w;
        w.window_start = T;
        w.window_end = T + c2 * std::sqrt(T);
        const auto crossings = scan_sign_changes(T, c2, step, f);
        w.crossing_count = crossings.size();
        if (!crossings.empty()) w.first_crossing = crossings.front();
        const ExtremalPoints e = extremal_points(T, c1, c2, f, step);
        w.t1 = e.t1;
        w.t2 = e.t2;
        w.found_positive_extreme = e.t1.has_value();
        w.found_negative_extreme = e.t2.has_value();
        out[i] = w;
    });
    errors.rethrow();
    return out;
}

std::optional<double> minimal_c2_for_crossings(std::span<const WindowResult> windows) {
    double c = 0.0;
    for (const auto& w : windows) {
        if (!w.first_crossing) return std::nullopt;
        c = std::max(c, (*w.first_crossing - w.window_start) / std::sqrt(w.window_start));
    }
    return c;
}

std::optional<double> minimal_c2_for_witnesses(std::span<const WindowResult> windows) {
    double c = 0.0;
    for (const auto& w : windows) {
        if (!w.t1 || !w.t2) return std::nullopt;
        c = std::max(c, (std::max(*w.t1, *w.t2) - w.window_start) / std::sqrt(w.window_start));
    }
    return c;
}

std::vector<Interval> positive_runs(double a, double b, int sign, double c, const PiecewiseFunction& f,
                                    double step) {
    check_step(step);
    if (sign != 1 && sign != -1) throw InvalidArgument("sign", "must be +1 or -1");
    if (!(c >= 0.0)) throw InvalidArgument("c", "must be nonnegative");
    std::vector<Interval> runs;
    bool in_run = false;
    double start = a;
    for (const Segment& seg : f.segments(a, b)) {
        auto g = [&](double t) { return sign * f.value(seg, t) - c * std::pow(t, 0.25); };
        double prev_t = seg.t_lo;
        bool prev_pos = g(seg.t_lo) > 0.0;
        if (prev_pos && !in_run) {
            in_run = true;
            start = seg.t_lo;
        } else if (!prev_pos && in_run) {
            runs.emplace_back(start, seg.t_lo);
            in_run = false;
        }
        auto visit = [&](double t) {
            const bool pos = g(t) > 0.0;
            if (pos != prev_pos) {
                const double root = bisect(g, prev_t, t);
                if (pos) {
                    in_run = true;
                    start = root;
                } else {
                    runs.emplace_back(start, root);
                    in_run = false;
                }
            }
            prev_pos = pos;
            prev_t = t;
        };
        for_each_sample(seg.t_lo, seg.t_hi, step, visit);
        visit(seg.t_hi);
    }
    if (in_run) runs.emplace_back(start, b);
    std::erase_if(runs, [](const Interval& r) { return !(r.second > r.first); });
    return runs;
}

SignRunReport detect_runs(double T, double c, const PiecewiseFunction& f, double step) {
    if (!(T > 0.0)) throw InvalidArgument("T", "must be positive");
    SignRunReport rep;
    rep.T = T;
    rep.threshold_c = c;
    rep.runs_plus = positive_runs(T, 2.0 * T, 1, c, f, step);
    rep.runs_minus = positive_runs(T, 2.0 * T, -1, c, f, step);
    for (const auto& [lo, hi] : rep.runs_plus) {
        rep.measure_plus += hi - lo;
        rep.longest_plus = std::max(rep.longest_plus, hi - lo);
    }
    for (const auto& [lo, hi] : rep.runs_minus) {
        rep.measure_minus += hi - lo;
        rep.longest_minus = std::max(rep.longest_minus, hi - lo);
    }
    return rep;
}

std::pair<double, double> positivity_measure(double T, double c, const PiecewiseFunction& f, double step) {
    const SignRunReport rep = detect_runs(T, c, f, step);
    return {rep.measure_plus, rep.measure_minus};
}

double delta_pm(double t, int sign, const PiecewiseFunction& f) {
    if (sign != 1 && sign != -1) throw InvalidArgument("sign", "must be +1 or -1");
    const double v = f.at(t);
    return 0.5 * (std::abs(v) + sign * v);
}

}  // namespace divcong
