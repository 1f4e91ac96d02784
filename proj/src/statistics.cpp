#include "divcong/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "divcong/error.hpp"

namespace divcong {
namespace {

void check_grid(std::span<const double> grid, double t_start) {
    if (grid.empty()) throw InvalidArgument("grid", "must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= t_start)) throw InvalidArgument("grid", "values must be >= the lower limit");
        if (i > 0 && !(grid[i] >= grid[i - 1])) throw InvalidArgument("grid", "must be nondecreasing");
    }
}

double int_pow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

// Cumulative int_{t_start}^{T_j} Delta^k for a single k > 9.
std::vector<double> cumulative_single_power(std::span<const double> grid, int k, const DeltaEvaluator& ev,
                                            double tol, QuadratureStats& stats) {
    std::vector<double> bp{1.0};
    bp.insert(bp.end(), grid.begin(), grid.end());
    const auto r = integrate_delta_functional<1>(bp, ev, tol, [k](double, double d) {
        return Values<1>{int_pow(d, k)};
    });
    stats = r.stats;
    std::vector<double> out;
    CompensatedSum acc;
    for (const auto& v : r.values) {
        acc.add(v[0]);
        out.push_back(acc.value());
    }
    return out;
}

}  // namespace

double chunk_width(const DeltaEvaluator& ev) noexcept {
    return 65536.0 / static_cast<double>(ev.modulus_product());
}

PowerIntegrals integrate_delta_powers(std::span<const double> grid, const DeltaEvaluator& ev, double tol,
                                      double t_start) {
    check_grid(grid, t_start);
    std::vector<double> bp{t_start};
    bp.insert(bp.end(), grid.begin(), grid.end());
    const auto r = integrate_delta_functional<kMaxMomentOrder>(bp, ev, tol, [](double, double d) {
        Values<kMaxMomentOrder> v{};
        double p = 1.0;
        for (auto& x : v) x = (p *= d);
        return v;
    });
    PowerIntegrals out;
    out.grid.assign(grid.begin(), grid.end());
    out.stats = r.stats;
    std::array<CompensatedSum, kMaxMomentOrder> acc{};
    for (const auto& v : r.values) {
        std::array<double, kMaxMomentOrder> row{};
        for (int k = 0; k < kMaxMomentOrder; ++k) {
            acc[k].add(v[k]);
            row[k] = acc[k].value();
        }
        out.cumulative.push_back(row);
    }
    return out;
}

double integrate_delta_power(double T, int k, const DeltaEvaluator& ev, double tol) {
    if (k < 1) throw InvalidArgument("k", "must be a positive integer");
    if (!(T >= 1.0)) throw InvalidArgument("T", "must be >= 1");
    const std::array<double, 1> grid{T};
    if (k > kMaxMomentOrder) {
        QuadratureStats stats;
        return cumulative_single_power(grid, k, ev, tol, stats).back();
    }
    return integrate_delta_powers(grid, ev, tol).cumulative.back()[k - 1];
}

double integrate_delta_power_serial(double T, int k, const DeltaEvaluator& ev) {
    if (k < 1) throw InvalidArgument("k", "must be a positive integer");
    if (!(T > 1.0)) return 0.0;
    CompensatedSum total;
    for (const Segment& s : ev.segments(1.0, T)) {
        const double c = 0.5 * (s.t_lo + s.t_hi);
        const double h = 0.5 * (s.t_hi - s.t_lo);
        double piece = 0.0;
        for (std::size_t i = 0; i < gauss::kNodes8.size(); ++i) {
            const double dx = h * gauss::kNodes8[i];
            piece += gauss::kWeights8[i] * (int_pow(ev.value(s, c - dx), k) + int_pow(ev.value(s, c + dx), k));
        }
        total.add(h * piece);
    }
    return total.value();
}

double integrate_abs_delta_power(double T, double a, const DeltaEvaluator& ev, double tol) {
    if (!(a > 0.0)) throw InvalidArgument("a", "must be positive");
    if (!(T >= 1.0)) throw InvalidArgument("T", "must be >= 1");
    const std::array<double, 2> bp{1.0, T};
    return integrate_delta_functional<1>(bp, ev, tol, [a](double, double d) {
               return Values<1>{std::pow(std::abs(d), a)};
           }).values[0][0];
}

double mean_value_slope_target(const CongruenceParams& p) noexcept {
    const double f1 = static_cast<double>(p.first.r) / static_cast<double>(p.first.q) - 0.5;
    const double f2 = static_cast<double>(p.second.r) / static_cast<double>(p.second.q) - 0.5;
    return f1 * f2;
}

MeanValueResult mean_value_check(double T, const DeltaEvaluator& ev, double tol) {
    if (!(T > 1.0)) throw InvalidArgument("T", "must exceed 1");
    const double q = static_cast<double>(ev.modulus_product());
    // int_1^T Delta(x) dx = q int_{1/q}^{T/q} Delta(q t) dt
    const std::array<double, 2> bp{1.0 / q, T / q};
    const auto r = integrate_delta_functional<1>(bp, ev, tol, [](double, double d) { return Values<1>{d}; });
    MeanValueResult out;
    out.T = T;
    out.integral = q * r.values[0][0];
    out.slope_estimate = out.integral / T;
    out.slope_target = mean_value_slope_target(ev.params());
    out.residual_normalized = (out.integral - out.slope_target * T) / (std::pow(q, 0.25) * std::pow(T, 0.75));
    out.error_estimate = r.stats.max_relative;
    return out;
}

double power_weight_integral(double T, int k) noexcept {
    const double e = 1.0 + k / 4.0;
    return (std::pow(T, e) - 1.0) / e;
}

double median(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("values", "median of an empty list");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("grid", "regression needs at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("grid", "regression needs distinct abscissae");
    return sxy / sxx;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0 && hi > lo) || per_decade < 1) throw InvalidArgument("grid", "need 0 < lo < hi and per_decade >= 1");
    const double decades = std::log10(hi / lo);
    const auto steps = std::max(1, static_cast<int>(std::lround(decades * per_decade)));
    std::vector<double> g;
    for (int i = 0; i <= steps; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / steps));
    g.front() = lo;
    g.back() = hi;
    return g;
}

MomentReport moment_report_from(int k, const CongruenceParams& p, std::span<const double> grid,
                                std::span<const double> integrals, double error_estimate) {
    MomentReport rep;
    rep.k = k;
    rep.params = p;
    rep.grid.assign(grid.begin(), grid.end());
    rep.integrals.assign(integrals.begin(), integrals.end());
    rep.error_estimate = error_estimate;
    if (k > kMaxMomentOrder) rep.warnings.push_back("k > 9 is outside the proven moment range (exploratory)");
    for (std::size_t i = 0; i < grid.size(); ++i) rep.ck_hat.push_back(integrals[i] / power_weight_integral(grid[i], k));
    rep.fitted_Ck = median(rep.ck_hat);
    for (double c : rep.ck_hat) rep.residuals.push_back(c - rep.fitted_Ck);

    const bool all_pos = std::all_of(integrals.begin(), integrals.end(), [](double v) { return v > 0; });
    const bool all_neg = std::all_of(integrals.begin(), integrals.end(), [](double v) { return v < 0; });
    rep.sign_consistent = all_pos || all_neg;
    if (!rep.sign_consistent) rep.warnings.push_back("integrals change sign over the grid; exponent fit uses |integral|");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (integrals[i] == 0.0) continue;
        lx.push_back(std::log(grid[i]));
        ly.push_back(std::log(std::abs(integrals[i])));
    }
    rep.fitted_exponent = lx.size() >= 2 ? fit_slope(lx, ly) : std::nan("");
    return rep;
}

namespace {

void check_moment_grid(std::span<const double> grid) {
    if (grid.size() < 2) throw InvalidArgument("grid", "degenerate grid: need at least two points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidArgument("grid", "degenerate grid: must be strictly increasing");
    if (!(grid.front() >= 1.0)) throw InvalidArgument("grid", "values must be >= 1");
    if (!(grid.back() >= 10.0 * grid.front()))
        throw InvalidArgument("grid", "degenerate grid: must span at least one decade");
}

}  // namespace

std::vector<MomentReport> estimate_Ck_all(int k_max, std::span<const double> grid, const DeltaEvaluator& ev,
                                          double tol) {
    if (k_max < 1 || k_max > kMaxMomentOrder) throw InvalidArgument("k", "must satisfy 1 <= k <= 9");
    check_moment_grid(grid);
    const PowerIntegrals pi = integrate_delta_powers(grid, ev, tol);
    std::vector<MomentReport> out;
    for (int k = 1; k <= k_max; ++k) {
        std::vector<double> ints;
        for (const auto& row : pi.cumulative) ints.push_back(row[k - 1]);
        out.push_back(moment_report_from(k, ev.params(), grid, ints, pi.stats.max_relative));
    }
    return out;
}

MomentReport estimate_Ck(int k, std::span<const double> grid, const DeltaEvaluator& ev, double tol) {
    if (k < 1) throw InvalidArgument("k", "must be a positive integer");
    if (k <= kMaxMomentOrder) return estimate_Ck_all(k, grid, ev, tol).back();
    check_moment_grid(grid);
    QuadratureStats stats;
    const auto ints = cumulative_single_power(grid, k, ev, tol, stats);
    return moment_report_from(k, ev.params(), grid, ints, stats.max_relative);
}

double short_interval_envelope(double T, double h0) noexcept {
    const double l = std::log(T);
    const double s = std::log(std::sqrt(T) / h0);
    return T * h0 * s * s * s + T * l * l * l * l * l * l;
}

double shifted_difference_integral(double lo, double hi, double h, const DeltaEvaluator& ev, double tol,
                                   QuadratureStats* stats) {
    if (!(h >= 0.0)) throw InvalidArgument("h0", "must be nonnegative");
    if (!(hi >= lo) || !(lo > 0.0)) throw InvalidArgument("T", "need 0 < lo <= hi");
    if (hi == lo) return 0.0;
    ev.require_scaled(hi + h);
    const double coef = ev.coefficient();
    const std::array<double, 2> bp{lo, hi};
    const auto r = integrate_intervals<1>(bp, chunk_width(ev), [&](double a, double b) {
        Accumulator<1> acc;
        std::vector<std::uint32_t> scratch;
        const std::vector<Segment> base = [&] {
            std::vector<Segment> s;
            for_each_segment(ev, a, b, scratch, [&](double x, double y, std::uint64_t d) { s.push_back({x, y, d}); });
            return s;
        }();
        const std::vector<Segment> shifted = [&] {
            std::vector<Segment> s;
            for_each_segment(ev, a + h, b + h, scratch,
                             [&](double x, double y, std::uint64_t d) { s.push_back({x, y, d}); });
            return s;
        }();
        std::vector<double> cuts{a, b};
        for (std::size_t i = 1; i < base.size(); ++i) cuts.push_back(base[i].t_lo);
        for (std::size_t i = 1; i < shifted.size(); ++i) {
            const double c = shifted[i].t_lo - h;
            if (c > a && c < b) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::size_t i = 0, j = 0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double p0 = cuts[c], p1 = cuts[c + 1];
            const double mid = 0.5 * (p0 + p1);
            while (i + 1 < base.size() && base[i].t_hi <= mid) ++i;
            while (j + 1 < shifted.size() && shifted[j].t_hi <= mid + h) ++j;
            const LocalDelta d0(static_cast<double>(base[i].d_value), coef, p0, p1);
            const LocalDelta d1(static_cast<double>(shifted[j].d_value), coef, p0 + h, p1 + h);
            auto f = [&](double t) {
                const double diff = d1(t + h) - d0(t);
                return Values<1>{diff * diff};
            };
            integrate_piece<1>(f, p0, p1, tol, acc);
        }
        return acc;
    });
    if (stats) *stats = r.stats;
    return r.values[0][0];
}

ShortIntervalResult short_interval_variance(double T, double h0, const DeltaEvaluator& ev, double tol) {
    if (!(T >= 1.0)) throw InvalidArgument("T", "must be >= 1");
    ShortIntervalResult out;
    out.T = T;
    out.h0 = h0;
    out.in_lemma_range = h0 >= 1.0 && h0 <= 0.5 * std::sqrt(T);
    QuadratureStats stats;
    out.integral = shifted_difference_integral(1.0, T, h0, ev, tol, &stats);
    out.error_estimate = stats.max_relative;
    out.envelope = short_interval_envelope(T, h0);
    out.ratio = out.integral / out.envelope;
    return out;
}

std::vector<DyadicDifference> dyadic_differences(double T, double H0, const DeltaEvaluator& ev, double tol) {
    if (!(H0 >= 2.0 && H0 <= std::sqrt(T))) throw InvalidArgument("H0", "must satisfy 2 <= H0 <= sqrt(T)");
    const int lambda = static_cast<int>(std::floor(std::log2(H0)));
    const double b = H0 / std::ldexp(1.0, lambda);
    std::vector<DyadicDifference> out;
    for (int j = 0; j <= lambda; ++j) {
        const double h = std::ldexp(b, j);
        DyadicDifference d;
        d.h = h;
        d.integral = shifted_difference_integral(T, 2.0 * T, h, ev, tol);
        d.normalized = d.integral / short_interval_envelope(T, h);
        out.push_back(d);
    }
    return out;
}

SignedPartMoments signed_part_moments(double T, const DeltaEvaluator& ev, double tol) {
    if (!(T >= 1.0)) throw InvalidArgument("T", "must be >= 1");
    const std::array<double, 2> bp{T, 2.0 * T};
    const auto r = integrate_delta_functional<5>(bp, ev, tol, [](double, double d) {
        const double plus = 0.5 * (std::abs(d) + d);
        const double minus = 0.5 * (std::abs(d) - d);
        return Values<5>{plus * plus, minus * minus, d * d, std::abs(d), d};
    });
    const auto& v = r.values[0];
    SignedPartMoments out;
    out.T = T;
    out.square_plus = v[0];
    out.square_minus = v[1];
    out.square = v[2];
    out.abs_first = v[3];
    out.first = v[4];
    out.ratio_plus = v[0] / std::pow(T, 1.5);
    out.ratio_minus = v[1] / std::pow(T, 1.5);
    return out;
}

ExcursionReport f_k_excursion_on(int k, double T, double Ck, std::span<const double> X_grid,
                                 const DeltaEvaluator& ev, double tol) {
    if (k < 1 || k % 2 == 0) throw InvalidArgument("k", "must be an odd positive integer");
    if (X_grid.empty()) throw InvalidArgument("grid", "degenerate grid: empty");
    for (double X : X_grid)
        if (!(X >= T && X <= 2.0 * T)) throw InvalidArgument("grid", "excursion grid must lie in [T, 2T]");
    std::vector<double> sorted(X_grid.begin(), X_grid.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> ints;
    if (k <= kMaxMomentOrder) {
        const PowerIntegrals pi = integrate_delta_powers(sorted, ev, tol);
        for (const auto& row : pi.cumulative) ints.push_back(row[k - 1]);
    } else {
        QuadratureStats stats;
        ints = cumulative_single_power(sorted, k, ev, tol, stats);
    }
    ExcursionReport rep;
    rep.k = k;
    rep.T = T;
    rep.ck_used = Ck;
    rep.grid_points = sorted.size();
    rep.warnings.push_back("Ck is an empirical estimate");
    double best = -1.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double X = sorted[i];
        const double F = ints[i] - Ck * power_weight_integral(X, k);
        rep.X_grid.push_back(X);
        rep.F_values.push_back(F);
        if (std::abs(F) > best) {
            best = std::abs(F);
            rep.X_star = X;
            rep.F_k_value = F;
        }
    }
    const double L = std::log(rep.X_star);
    rep.normalized = rep.F_k_value / (std::pow(rep.X_star, 0.5 + k / 4.0) * std::pow(L, -7.0));
    return rep;
}

ExcursionReport f_k_excursion(int k, double T, double Ck, const DeltaEvaluator& ev, std::size_t grid_points,
                              double tol) {
    if (grid_points < 2) throw InvalidArgument("grid_points", "degenerate grid: need at least two points");
    std::vector<double> grid;
    for (std::size_t i = 0; i < grid_points; ++i)
        grid.push_back(T + T * static_cast<double>(i) / static_cast<double>(grid_points - 1));
    grid.back() = 2.0 * T;
    return f_k_excursion_on(k, T, Ck, grid, ev, tol);
}

}  // namespace divcong
