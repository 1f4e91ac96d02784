#pragma once

// JSON forms of the report types. Every to_json has a matching from_json so
// emitted reports parse back into equal values.

#include <optional>

#include <json.hpp>

#include "divcong/arith.hpp"
#include "divcong/signs.hpp"
#include "divcong/statistics.hpp"
#include "divcong/voronoi.hpp"

NLOHMANN_JSON_NAMESPACE_BEGIN
template <class T>
struct adl_serializer<std::optional<T>> {
    static void to_json(json& j, const std::optional<T>& v) {
        if (v)
            j = *v;
        else
            j = nullptr;
    }
    static void from_json(const json& j, std::optional<T>& v) {
        if (j.is_null())
            v.reset();
        else
            v = j.get<T>();
    }
};
NLOHMANN_JSON_NAMESPACE_END

namespace divcong {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(json& j, const CongruenceParams& p);
void from_json(const json& j, CongruenceParams& p);

void to_json(json& j, const QuadratureStats& s);
void from_json(const json& j, QuadratureStats& s);

void to_json(json& j, const MeanValueResult& r);
void from_json(const json& j, MeanValueResult& r);

void to_json(json& j, const MomentReport& r);
void from_json(const json& j, MomentReport& r);

void to_json(json& j, const ShortIntervalResult& r);
void from_json(const json& j, ShortIntervalResult& r);

void to_json(json& j, const DyadicDifference& r);
void from_json(const json& j, DyadicDifference& r);

void to_json(json& j, const SignedPartMoments& r);
void from_json(const json& j, SignedPartMoments& r);

void to_json(json& j, const ExcursionReport& r);
void from_json(const json& j, ExcursionReport& r);

void to_json(json& j, const WindowResult& r);
void from_json(const json& j, WindowResult& r);

void to_json(json& j, const SignRunReport& r);
void from_json(const json& j, SignRunReport& r);

void to_json(json& j, const KernelIntegral& r);
void from_json(const json& j, KernelIntegral& r);

void to_json(json& j, const KernelSample& r);
void from_json(const json& j, KernelSample& r);

void to_json(json& j, const KernelExperiment& r);
void from_json(const json& j, KernelExperiment& r);

void to_json(json& j, const ResidualMeanSquare& r);
void from_json(const json& j, ResidualMeanSquare& r);

void to_json(json& j, const SeriesComparison& r);
void from_json(const json& j, SeriesComparison& r);

}  // namespace divcong
