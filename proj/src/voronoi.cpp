#include "divcong/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "divcong/error.hpp"

namespace divcong {
namespace {

using std::numbers::pi;

// int_{-1}^{1} (1 - |u|) cos(a u) du = (sin(a/2) / (a/2))^2
double triangle_cosine(double a) {
    const double h = 0.5 * a;
    if (std::abs(h) < 1e-8) return 1.0 - h * h / 3.0;
    const double s = std::sin(h) / h;
    return s * s;
}

}  // namespace

VoronoiSeries::VoronoiSeries(const VoronoiConfig& cfg) : cfg_(cfg) {
    if (!(cfg.y >= 0.0)) throw InvalidArgument("y", "truncation length must be nonnegative");
    const auto n_max = static_cast<std::uint64_t>(std::floor(cfg.y));
    std::vector<std::complex<double>> c(n_max, {0.0, 0.0});
    const auto& p = cfg.params;
    for (std::uint64_t h = 1; h <= n_max; ++h) {
        for (std::uint64_t l = 1; h * l <= n_max; ++l) {
            // theta = 2 pi (h r2/q2 + l r1/q1 + 1/8), reduced mod 1 exactly in the fractions
            const double frac = static_cast<double>((h * p.second.r) % p.second.q) / static_cast<double>(p.second.q) +
                                static_cast<double>((l * p.first.r) % p.first.q) / static_cast<double>(p.first.q) +
                                0.125;
            c[h * l - 1] += std::polar(1.0, -2.0 * pi * frac);
        }
    }
    amplitude_.resize(n_max);
    phase_.resize(n_max);
    frequency_.resize(n_max);
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        const double nd = static_cast<double>(n);
        amplitude_[n - 1] = std::abs(c[n - 1]) * std::pow(nd, -0.75);
        phase_[n - 1] = std::arg(c[n - 1]);
        frequency_[n - 1] = 4.0 * pi * std::sqrt(nd);
    }
}

double VoronoiSeries::r0_star(double s) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < amplitude_.size(); ++i) sum += amplitude_[i] * std::cos(frequency_[i] * s + phase_[i]);
    return sum;
}

double VoronoiSeries::r0(double x) const {
    if (!(x > 0.0)) throw InvalidArgument("x", "must be positive");
    const double s = std::sqrt(x);
    return std::sqrt(s) / (std::numbers::sqrt2 * pi) * r0_star(s);
}

std::pair<double, double> VoronoiSeries::kernel_transform(double t, double alpha) const {
    const double b = 4.0 * pi * alpha;
    double even = 0.0, odd = 0.0;
    for (std::size_t i = 0; i < amplitude_.size(); ++i) {
        const double x = frequency_[i] * t + phase_[i];
        const double a = alpha * frequency_[i];
        even += amplitude_[i] * std::cos(x) * triangle_cosine(a);
        odd -= 0.5 * amplitude_[i] * std::sin(x) * (triangle_cosine(a - b) - triangle_cosine(a + b));
    }
    return {even, odd};
}

double r0_truncated(double x, const VoronoiConfig& cfg) { return VoronoiSeries(cfg).r0(x); }

KernelConfig KernelConfig::make(double alpha, int zeta) {
    if (!(alpha > 1.0)) throw InvalidArgument("alpha", "must exceed 1");
    if (zeta != 1 && zeta != -1) throw InvalidArgument("zeta", "must be +1 or -1");
    return {alpha, zeta};
}

double kernel_weight(double u, const KernelConfig& k) {
    if (!(std::abs(u) <= 1.0)) throw InvalidArgument("u", "kernel is supported on |u| <= 1");
    return (1.0 - std::abs(u)) * (1.0 + k.zeta * std::sin(4.0 * pi * k.alpha * u));
}

double kernel_prediction(double t, const CongruenceParams& p, int zeta) {
    const double shift = static_cast<double>(p.second.r) / static_cast<double>(p.second.q) +
                         static_cast<double>(p.first.r) / static_cast<double>(p.first.q) + 0.125;
    return -0.5 * zeta * std::sin(4.0 * pi * t - 2.0 * pi * shift);
}

namespace {

// int over s in [t - alpha, t + alpha] of g(s, Delta(q1 q2 s^2)) w(u) ds / alpha for
// w = (1 - |u|) and (1 - |u|) sin(4 pi alpha u).
template <class G>
Accumulator<2> kernel_quadrature(double t, const KernelConfig& k, const DeltaEvaluator& ev, double tol, G g) {
    const double alpha = k.alpha;
    if (!(t - alpha >= 1.0)) throw InvalidArgument("t", "need t - alpha >= 1");
    const double s_lo = t - alpha, s_hi = t + alpha;
    ev.require_scaled(s_hi * s_hi);

    std::vector<Segment> segs = ev.segments(s_lo * s_lo, s_hi * s_hi);
    std::vector<double> cuts;
    cuts.reserve(segs.size() + 40 * static_cast<std::size_t>(alpha) + 2);
    cuts.push_back(s_lo);
    cuts.push_back(s_hi);
    for (std::size_t i = 1; i < segs.size(); ++i) cuts.push_back(std::sqrt(segs[i].t_lo));
    const auto uniform = static_cast<int>(std::ceil(16.0 * alpha));
    for (int j = -uniform + 1; j < uniform; ++j) cuts.push_back(t + alpha * static_cast<double>(j) / uniform);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const double coef = ev.coefficient();
    const double freq = 4.0 * pi * alpha;
    Accumulator<2> acc;
    std::size_t seg = 0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double p0 = cuts[c], p1 = cuts[c + 1];
        const double mid = 0.5 * (p0 + p1);
        while (seg + 1 < segs.size() && segs[seg].t_hi <= mid * mid) ++seg;
        const LocalDelta local(static_cast<double>(segs[seg].d_value), coef, p0 * p0, p1 * p1);
        auto f = [&](double s) {
            const double u = (s - t) / alpha;
            const double w = (1.0 - std::abs(u)) / alpha;
            const double v = g(s, local(s * s));
            return Values<2>{v * w, v * w * std::sin(freq * u)};
        };
        integrate_piece<2>(f, p0, p1, tol, acc);
    }
    return acc;
}

}  // namespace

KernelIntegral smoothed_delta_integral(double t, const KernelConfig& k, const DeltaEvaluator& ev, double tol,
                                       const Perturbation& f) {
    const double norm = std::numbers::sqrt2 * pi;
    const auto acc = kernel_quadrature(t, k, ev, tol, [&](double s, double d) {
        const double shifted = f ? d + f(s * s) : d;
        return norm * shifted / std::sqrt(s);
    });
    if (acc.stats.unresolved > 0) throw ToleranceNotMet(acc.stats.max_relative, tol);
    KernelIntegral out;
    const auto v = acc.values();
    out.even_part = v[0];
    out.odd_part = v[1];
    out.value = v[0] + k.zeta * v[1];
    out.error_estimate = acc.stats.max_relative;
    out.pieces = acc.stats.pieces;
    out.unresolved = acc.stats.unresolved;
    return out;
}

double kernel_mass(double t, const KernelConfig& k, const DeltaEvaluator& ev, double tol) {
    const auto v = kernel_quadrature(t, k, ev, tol, [](double, double) { return 1.0; }).values();
    return v[0] + k.zeta * v[1];
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("samples", "need two equal-length series");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

KernelExperiment kernel_experiment(std::span<const double> t_values, double alpha, std::span<const int> zetas,
                                   const DeltaEvaluator& ev, double y, double tol) {
    if (t_values.empty()) throw InvalidArgument("t", "no sample points");
    if (zetas.empty()) throw InvalidArgument("zeta", "no kernel signs");
    for (int z : zetas) KernelConfig::make(alpha, z);
    for (double t : t_values)
        if (!(t - alpha >= 1.0)) throw InvalidArgument("t", "need t - alpha >= 1");

    const VoronoiSeries series({y, ev.params()});
    const auto n = static_cast<std::ptrdiff_t>(t_values.size());
    std::vector<KernelIntegral> integrals(t_values.size());
    std::vector<std::pair<double, double>> transforms(t_values.size());
    FirstError errors;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        errors.run([&] {
            // even and odd parts do not depend on zeta
            integrals[i] = smoothed_delta_integral(t_values[i], KernelConfig::make(alpha, 1), ev, tol);
            transforms[i] = series.kernel_transform(t_values[i], alpha);
        });
    }
    errors.rethrow();

    KernelExperiment out;
    out.params = ev.params();
    out.alpha = alpha;
    out.y = y;
    for (int z : zetas) {
        std::vector<double> measured, predicted;
        for (std::size_t i = 0; i < t_values.size(); ++i) {
            KernelSample s;
            s.t = t_values[i];
            s.zeta = z;
            s.measured = integrals[i].even_part + z * integrals[i].odd_part;
            s.prediction = kernel_prediction(s.t, ev.params(), z);
            s.series = transforms[i].first + z * transforms[i].second;
            s.error_estimate = integrals[i].error_estimate;
            const double l = std::log(s.t);
            out.max_abs_residual = std::max(out.max_abs_residual, std::abs(s.measured - s.prediction));
            out.A = std::max(out.A, alpha * alpha * std::abs(s.series - s.prediction));
            out.B = std::max(out.B, std::abs(s.measured - s.series) * std::sqrt(s.t) / (l * l * l));
            measured.push_back(s.measured);
            predicted.push_back(s.prediction);
            out.samples.push_back(s);
        }
        const double c = t_values.size() >= 2 ? pearson(measured, predicted) : 0.0;
        (z > 0 ? out.correlation_plus : out.correlation_minus) = c;
    }
    return out;
}

namespace {

bool voronoi_constraint_violated(double U, double y, std::uint64_t modulus) {
    // Truncation range with T = 2U and H = U: y <= min(H^2, (q1 q2)^2 T) L^{-4}.
    const double T = 2.0 * U;
    const double L = std::log(T);
    const double q = static_cast<double>(modulus);
    const double cap = std::min(U * U, q * q * T) / (L * L * L * L);
    return !(y > 1.0 && y <= cap);
}

double residual_envelope(double U, double y) {
    const double l = std::log(U);
    const double l3 = l * l * l;
    return std::sqrt(U) / std::sqrt(std::max(y, 1.0)) * l3 + l3 * l3;
}

}  // namespace

SeriesComparison compare_delta_r0(double U, const VoronoiConfig& cfg, const DeltaEvaluator& ev, double tol) {
    if (!(U >= 1.0)) throw InvalidArgument("U", "must be >= 1");
    if (!(cfg.params == ev.params())) throw InvalidArgument("params", "series and evaluator parameters differ");
    const VoronoiSeries series(cfg);
    const std::array<double, 2> bp{U, 2.0 * U};
    const auto r = integrate_delta_functional<6>(bp, ev, tol, [&](double x, double d) {
        const double r0 = series.r0(x);
        const double e = d - r0;
        return Values<6>{d, r0, d * d, r0 * r0, d * r0, e * e};
    });
    const auto& v = r.values[0];
    SeriesComparison out;
    out.U = U;
    out.y = cfg.y;
    out.mean_delta = v[0] / U;
    out.mean_r0 = v[1] / U;
    out.var_delta = v[2] / U - out.mean_delta * out.mean_delta;
    out.var_r0 = v[3] / U - out.mean_r0 * out.mean_r0;
    const double cov = v[4] / U - out.mean_delta * out.mean_r0;
    out.correlation = (out.var_delta > 0.0 && out.var_r0 > 0.0) ? cov / std::sqrt(out.var_delta * out.var_r0) : 0.0;
    out.residual.U = U;
    out.residual.y = cfg.y;
    out.residual.mean_square = v[5] / U;
    out.residual.envelope = residual_envelope(U, cfg.y);
    out.residual.ratio = out.residual.mean_square / out.residual.envelope;
    out.residual.error_estimate = r.stats.max_relative;
    out.residual.constraint_violated = voronoi_constraint_violated(U, cfg.y, ev.modulus_product());
    return out;
}

ResidualMeanSquare truncation_residual_meansquare(double U, const VoronoiConfig& cfg, const DeltaEvaluator& ev,
                                                  double tol) {
    if (!(U >= 1.0)) throw InvalidArgument("U", "must be >= 1");
    if (!(cfg.params == ev.params())) throw InvalidArgument("params", "series and evaluator parameters differ");
    const VoronoiSeries series(cfg);
    const std::array<double, 2> bp{U, 2.0 * U};
    const auto r = integrate_delta_functional<1>(bp, ev, tol, [&](double x, double d) {
        const double e = d - series.r0(x);
        return Values<1>{e * e};
    });
    ResidualMeanSquare out;
    out.U = U;
    out.y = cfg.y;
    out.mean_square = r.values[0][0] / U;
    out.envelope = residual_envelope(U, cfg.y);
    out.ratio = out.mean_square / out.envelope;
    out.error_estimate = r.stats.max_relative;
    out.constraint_violated = voronoi_constraint_violated(U, cfg.y, ev.modulus_product());
    return out;
}

}  // namespace divcong
