#pragma once

// Proper scoring rules for point and quantile forecasts.
//
// Raw SPE and WIS are losses (smaller is better). Everything downstream of
// this header works with positively oriented `Score`s, i.e. -SPE and -WIS.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ensimp {

namespace detail {

inline void require_finite(double x, std::string_view what) {
    if (!std::isfinite(x)) {
        throw ValidationError(std::string(what) + " must be finite");
    }
}

} // namespace detail

/// Strictly increasing probabilities in (0, 1).
class QuantileLevels {
public:
    QuantileLevels() = default;

    explicit QuantileLevels(std::vector<double> levels) : levels_(std::move(levels)) {
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            const double tau = levels_[k];
            if (!(tau > 0.0 && tau < 1.0)) {
                std::ostringstream msg;
                msg << "quantile level " << tau << " is outside (0, 1)";
                throw ValidationError(msg.str());
            }
            if (k > 0 && !(levels_[k - 1] < tau)) {
                throw ValidationError("quantile levels must be strictly increasing");
            }
        }
    }

    /// The 23 levels used by the US COVID-19 Forecast Hub:
    /// 0.01, 0.025, 0.05, 0.10, 0.15, ..., 0.90, 0.95, 0.975, 0.99.
    static const QuantileLevels& canonical() {
        static const QuantileLevels levels = [] {
            std::vector<double> v{0.01, 0.025};
            for (int i = 1; i <= 19; ++i) {
                v.push_back(i / 20.0);
            }
            v.push_back(0.975);
            v.push_back(0.99);
            return QuantileLevels(std::move(v));
        }();
        return levels;
    }

    std::size_t size() const noexcept { return levels_.size(); }
    bool empty() const noexcept { return levels_.empty(); }
    double operator[](std::size_t k) const { return levels_[k]; }
    std::span<const double> values() const noexcept { return levels_; }

    /// Index of `tau`, compared exactly.
    std::optional<std::size_t> index_of(double tau) const {
        const auto it = std::find(levels_.begin(), levels_.end(), tau);
        if (it == levels_.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - levels_.begin());
    }

    friend bool operator==(const QuantileLevels&, const QuantileLevels&) = default;

private:
    std::vector<double> levels_;
};

/// A predictive distribution given as quantiles at fixed levels.
class QuantileForecast {
public:
    QuantileForecast(QuantileLevels levels, std::vector<double> values)
        : levels_(std::move(levels)), values_(std::move(values)) {
        if (values_.size() != levels_.size()) {
            throw ValidationError("quantile forecast has " + std::to_string(values_.size()) +
                                  " values for " + std::to_string(levels_.size()) + " levels");
        }
        for (std::size_t k = 0; k < values_.size(); ++k) {
            detail::require_finite(values_[k], "quantile value");
            if (k > 0 && values_[k] < values_[k - 1]) {
                std::ostringstream msg;
                msg << "quantiles are not monotone: level " << levels_[k] << " has value "
                    << values_[k] << " below " << values_[k - 1] << " at level " << levels_[k - 1];
                throw ValidationError(msg.str());
            }
        }
    }

    const QuantileLevels& levels() const noexcept { return levels_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }

    /// Value at level 0.5, the predictive median.
    double median() const {
        const auto k = levels_.index_of(0.5);
        if (!k) {
            throw ValidationError("forecast has no 0.5 quantile to use as a point estimate");
        }
        return values_[*k];
    }

    friend bool operator==(const QuantileForecast&, const QuantileForecast&) = default;

private:
    QuantileLevels levels_;
    std::vector<double> values_;
};

struct PointForecast {
    double value = 0.0;

    friend bool operator==(const PointForecast&, const PointForecast&) = default;
};

struct Observation {
    double value = 0.0;
};

/// A positively oriented score: larger is better.
struct Score {
    double value = 0.0;

    friend auto operator<=>(const Score&, const Score&) = default;
};

enum class Metric { spe, wis };

inline std::string_view to_string(Metric m) {
    return m == Metric::spe ? "spe" : "wis";
}

/// Squared prediction error (y - yhat)^2.
inline double spe(PointForecast forecast, Observation obs) {
    detail::require_finite(forecast.value, "point forecast");
    detail::require_finite(obs.value, "observation");
    const double d = obs.value - forecast.value;
    return d * d;
}

/// Weighted interval score written directly in terms of the quantiles:
///   (1/K) * sum_k 2 * (1[y <= q_k] - tau_k) * (q_k - y).
/// The indicator is 1 when y equals q_k.
inline double wis(std::span<const double> levels, std::span<const double> values, double y) {
    const std::size_t K = values.size();
    if (K == 0) {
        throw ValidationError("cannot score an empty quantile set");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double q = values[k];
        const double indicator = y <= q ? 1.0 : 0.0;
        sum += 2.0 * (indicator - levels[k]) * (q - y);
    }
    return sum / static_cast<double>(K);
}

inline double wis(const QuantileForecast& forecast, Observation obs) {
    detail::require_finite(obs.value, "observation");
    return wis(forecast.levels().values(), forecast.values(), obs.value);
}

inline Score positive_score(Metric metric, PointForecast forecast, Observation obs) {
    if (metric != Metric::spe) {
        throw ValidationError("WIS needs a quantile forecast");
    }
    return Score{-spe(forecast, obs)};
}

/// For SPE, a quantile forecast is scored through its median.
inline Score positive_score(Metric metric, const QuantileForecast& forecast, Observation obs) {
    if (metric == Metric::spe) {
        return Score{-spe(PointForecast{forecast.median()}, obs)};
    }
    return Score{-wis(forecast, obs)};
}

/// Arithmetic mean, summed in the order given.
inline Score mean_score(std::span<const Score> scores) {
    if (scores.empty()) {
        throw ValidationError("mean of an empty score list");
    }
    double sum = 0.0;
    for (const Score& s : scores) {
        sum += s.value;
    }
    return Score{sum / static_cast<double>(scores.size())};
}

} // namespace ensimp
