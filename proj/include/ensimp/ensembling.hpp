#pragma once

// Equal-weight mean ensembles of quantile and point forecasts.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "scoring.hpp"

namespace ensimp {

/// Combines one value per member into an ensemble value. Members are always
/// presented in canonical (pool) order.
template <typename C>
concept Combiner = requires(const C& c, std::span<const double> member_values) {
    { c(member_values) } -> std::convertible_to<double>;
};

/// Pools larger than this are summed with Neumaier compensation.
inline constexpr std::size_t kCompensatedSumThreshold = 32;

/// Equal-weight arithmetic mean, taken about the first value:
/// x_0 + (sum_j (x_j - x_0)) * (1/n). Identical inputs return x_0 exactly.
struct MeanCombiner {
    double operator()(std::span<const double> xs) const {
        const std::size_t n = xs.size();
        if (n == 0) {
            throw NoPredictionError("no prediction: ensemble of an empty set of models");
        }
        const double x0 = xs[0];
        double sum = 0.0;
        if (n <= kCompensatedSumThreshold) {
            for (double x : xs) {
                sum += x - x0;
            }
        } else {
            double c = 0.0;
            for (double x : xs) {
                const double d = x - x0;
                const double t = sum + d;
                c += std::abs(sum) >= std::abs(d) ? (sum - t) + d : (d - t) + sum;
                sum = t;
            }
            sum += c;
        }
        return x0 + sum * (1.0 / static_cast<double>(n));
    }
};

/// Forecasts from distinct models for one task, held in ascending model-id
/// order so that every downstream reduction has a canonical summation order.
template <typename Forecast>
class ForecastPool {
public:
    struct Member {
        std::string model_id;
        Forecast forecast;
    };

    explicit ForecastPool(std::vector<Member> members) : members_(std::move(members)) {
        if (members_.empty()) {
            throw ValidationError("forecast pool needs at least one member");
        }
        std::sort(members_.begin(), members_.end(),
                  [](const Member& a, const Member& b) { return a.model_id < b.model_id; });
        for (std::size_t i = 1; i < members_.size(); ++i) {
            if (members_[i].model_id == members_[i - 1].model_id) {
                throw ValidationError("duplicate model '" + members_[i].model_id + "' in pool");
            }
        }
        if constexpr (std::is_same_v<Forecast, QuantileForecast>) {
            for (const Member& m : members_) {
                if (!(m.forecast.levels() == members_.front().forecast.levels())) {
                    throw ValidationError("model '" + m.model_id +
                                          "' uses different quantile levels from '" +
                                          members_.front().model_id + "'");
                }
            }
        }
    }

    std::size_t size() const noexcept { return members_.size(); }
    const Member& operator[](std::size_t i) const { return members_[i]; }
    std::span<const Member> members() const noexcept { return members_; }

    std::vector<std::string> model_ids() const {
        std::vector<std::string> ids;
        ids.reserve(members_.size());
        for (const Member& m : members_) {
            ids.push_back(m.model_id);
        }
        return ids;
    }

    std::size_t index_of(const std::string& model_id) const {
        const auto it = std::lower_bound(
            members_.begin(), members_.end(), model_id,
            [](const Member& m, const std::string& id) { return m.model_id < id; });
        if (it == members_.end() || it->model_id != model_id) {
            throw ValidationError("model '" + model_id + "' is not in the pool");
        }
        return static_cast<std::size_t>(it - members_.begin());
    }

    /// Pool indices of `subset`, deduplicated and in ascending order.
    std::vector<std::size_t> indices_of(std::span<const std::string> subset) const {
        std::vector<std::size_t> idx;
        idx.reserve(subset.size());
        for (const std::string& id : subset) {
            idx.push_back(index_of(id));
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        return idx;
    }

private:
    std::vector<Member> members_;
};

using QuantilePool = ForecastPool<QuantileForecast>;
using PointPool = ForecastPool<PointForecast>;

/// Level-by-level combination of the pool members at `indices` (ascending).
template <Combiner C = MeanCombiner>
QuantileForecast combine_quantiles(const QuantilePool& pool, std::span<const std::size_t> indices,
                                   const C& combine = C{}) {
    if (indices.empty()) {
        throw NoPredictionError("no prediction: ensemble of an empty set of models");
    }
    const QuantileLevels& levels = pool[indices.front()].forecast.levels();
    std::vector<double> column(indices.size());
    std::vector<double> out(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        for (std::size_t j = 0; j < indices.size(); ++j) {
            column[j] = pool[indices[j]].forecast[k];
        }
        out[k] = combine(std::span<const double>(column));
    }
    return QuantileForecast(levels, std::move(out));
}

template <Combiner C = MeanCombiner>
PointForecast combine_points(const PointPool& pool, std::span<const std::size_t> indices,
                             const C& combine = C{}) {
    if (indices.empty()) {
        throw NoPredictionError("no prediction: ensemble of an empty set of models");
    }
    std::vector<double> xs(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        xs[j] = pool[indices[j]].forecast.value;
    }
    return PointForecast{combine(std::span<const double>(xs))};
}

/// q_k^ens = mean of q_k^i over the models in `subset`, for every level k.
inline QuantileForecast mean_quantile_ensemble(const QuantilePool& pool,
                                               std::span<const std::string> subset) {
    const auto idx = pool.indices_of(subset);
    return combine_quantiles(pool, idx);
}

inline PointForecast mean_point_ensemble(const PointPool& pool,
                                         std::span<const std::string> subset) {
    const auto idx = pool.indices_of(subset);
    return combine_points(pool, idx);
}

} // namespace ensimp
