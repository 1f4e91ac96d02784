#include "divcong/report.hpp"

#include "divcong/error.hpp"

namespace divcong {

void to_json(json& j, const CongruenceParams& p) {
    j = json{{"r1", p.first.r}, {"q1", p.first.q}, {"r2", p.second.r}, {"q2", p.second.q}};
}

void from_json(const json& j, CongruenceParams& p) {
    p = CongruenceParams::make(j.at("r1").get<std::int64_t>(), j.at("q1").get<std::int64_t>(),
                               j.at("r2").get<std::int64_t>(), j.at("q2").get<std::int64_t>());
}

// Out-of-line variant of NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE.
#define DIVCONG_JSON(Type, ...)                                                          \
    void to_json(json& nlohmann_json_j, const Type& nlohmann_json_t) {                   \
        NLOHMANN_JSON_EXPAND(NLOHMANN_JSON_PASTE(NLOHMANN_JSON_TO, __VA_ARGS__))         \
    }                                                                                    \
    void from_json(const json& nlohmann_json_j, Type& nlohmann_json_t) {                 \
        NLOHMANN_JSON_EXPAND(NLOHMANN_JSON_PASTE(NLOHMANN_JSON_FROM, __VA_ARGS__))       \
    }

DIVCONG_JSON(QuadratureStats, max_error, max_relative, pieces, unresolved)
DIVCONG_JSON(MeanValueResult, T, integral, slope_estimate, slope_target, residual_normalized, error_estimate)
DIVCONG_JSON(MomentReport, k, params, grid, integrals, ck_hat, fitted_Ck, fitted_exponent, residuals,
             sign_consistent, error_estimate, warnings)
DIVCONG_JSON(ShortIntervalResult, T, h0, integral, envelope, ratio, in_lemma_range, error_estimate)
DIVCONG_JSON(DyadicDifference, h, integral, normalized)
DIVCONG_JSON(SignedPartMoments, T, square_plus, square_minus, square, abs_first, first, ratio_plus, ratio_minus)
DIVCONG_JSON(ExcursionReport, k, T, X_star, F_k_value, normalized, ck_used, grid_points, X_grid, F_values,
             warnings)
DIVCONG_JSON(WindowResult, window_start, window_end, found_positive_extreme, found_negative_extreme,
             crossing_count, first_crossing, t1, t2)
DIVCONG_JSON(SignRunReport, T, threshold_c, runs_plus, runs_minus, measure_plus, measure_minus, longest_plus,
             longest_minus, window_results)
DIVCONG_JSON(KernelIntegral, value, even_part, odd_part, error_estimate, pieces, unresolved)
DIVCONG_JSON(KernelSample, t, zeta, measured, prediction, series, error_estimate)
DIVCONG_JSON(KernelExperiment, params, alpha, y, samples, correlation_plus, correlation_minus, max_abs_residual,
             A, B)
DIVCONG_JSON(ResidualMeanSquare, U, y, mean_square, envelope, ratio, error_estimate, constraint_violated)
DIVCONG_JSON(SeriesComparison, U, y, mean_delta, mean_r0, var_delta, var_r0, correlation, residual)

#undef DIVCONG_JSON

}  // namespace divcong
