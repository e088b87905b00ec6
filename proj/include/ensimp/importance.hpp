#pragma once

// Model importance for equal-weight mean ensembles.
//
// LOMO (leave one model out) scores the full ensemble against the ensemble
// without model i. LASOMO (leave all subsets of models out) is a Shapley-style
// average of the marginal contribution of model i over every non-empty
// coalition S of the other models:
//
//   phi_i = sum_{S != {}, i not in S} w(|S|) * [mu(F^{S+i}, y) - mu(F^S, y)]
//
// with mu a positively oriented score. The empty coalition is excluded
// because no ensemble (and therefore no score) exists for it, so the
// permutation weights become s!(n-s-1)! / [(n-1)! (n-1)] and still sum to 1.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensembling.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "rational.hpp"
#include "scoring.hpp"
#include "task_key.hpp"

namespace ensimp {

/// Largest pool for which LASOMO enumerates every subset.
inline constexpr std::size_t kMaxLasomoModels = 20;

enum class Algorithm { lomo, lasomo };
enum class WeightScheme { permutation, equal };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::lomo ? "lomo" : "lasomo"; }
inline std::string_view to_string(WeightScheme w) {
    return w == WeightScheme::permutation ? "permutation" : "equal";
}

namespace detail {

inline void check_lasomo_size(std::size_t n) {
    if (n > kMaxLasomoModels) {
        throw CapacityError("LASOMO enumerates all subsets and supports at most " +
                            std::to_string(kMaxLasomoModels) + " models per task, got " +
                            std::to_string(n) + "; use LOMO instead");
    }
    if (n < 2) {
        throw DomainError("importance needs at least two models in the pool");
    }
}

} // namespace detail

/// Exact weight of one coalition of size s among n models, empty set excluded:
/// s!(n-s-1)! / [(n-1)!(n-1)] = 1 / [(n-1) * C(n-1, s)].
inline Rational shapley_weight_exact(std::size_t n, std::size_t s) {
    if (n > kMaxLasomoModels) {
        throw CapacityError("shapley weight supports n <= " + std::to_string(kMaxLasomoModels));
    }
    if (n < 2) {
        throw DomainError("shapley weight needs n >= 2");
    }
    if (s == 0) {
        throw DomainError("the empty coalition has no ensemble and carries no weight");
    }
    if (s > n - 1) {
        throw DomainError("coalition size must be at most n - 1");
    }
    const auto m = static_cast<unsigned>(n - 1);
    return Rational(1, static_cast<Rational::Int>(m) * binomial(m, static_cast<unsigned>(s)));
}

inline double shapley_weight(std::size_t n, std::size_t s) { return shapley_weight_exact(n, s).to_double(); }

/// Uniform weight over the 2^(n-1) - 1 admissible coalitions.
inline Rational equal_weight_exact(std::size_t n) {
    detail::check_lasomo_size(n);
    return Rational(1, (Rational::Int{1} << (n - 1)) - 1);
}

inline Rational subset_weight_exact(WeightScheme scheme, std::size_t n, std::size_t s) {
    if (scheme == WeightScheme::permutation) {
        return shapley_weight_exact(n, s);
    }
    if (s == 0 || s > n - 1) {
        throw DomainError("coalition size out of range");
    }
    return equal_weight_exact(n);
}

/// Floating-point weights indexed by coalition size; entry 0 is unused.
inline std::vector<double> subset_weights(WeightScheme scheme, std::size_t n) {
    std::vector<double> w(n, 0.0);
    for (std::size_t s = 1; s < n; ++s) {
        w[s] = subset_weight_exact(scheme, n, s).to_double();
    }
    return w;
}

/// A forecast pool for one task together with its observed outcome.
template <typename Forecast>
struct TaskPool {
    TaskKey task;
    ForecastPool<Forecast> pool;
    Observation truth;
};

/// Scores the mean ensemble of any subset of a pool.
///
/// Holds a dense copy of the member values and scratch buffers, so one
/// instance must not be shared between threads.
class EnsembleScorer {
public:
    EnsembleScorer(const QuantilePool& pool, Metric metric, Observation truth)
        : n_(pool.size()), y_(truth.value) {
        detail::require_finite(y_, "observation");
        const QuantileLevels& levels = pool[0].forecast.levels();
        if (metric == Metric::spe) {
            const auto k = levels.index_of(0.5);
            if (!k) {
                throw ValidationError("SPE on quantile forecasts needs a 0.5 level");
            }
            levels_ = {0.5};
            values_.reserve(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                values_.push_back(pool[i].forecast[*k]);
            }
        } else {
            levels_.assign(levels.values().begin(), levels.values().end());
            values_.reserve(n_ * levels_.size());
            for (std::size_t i = 0; i < n_; ++i) {
                const auto v = pool[i].forecast.values();
                values_.insert(values_.end(), v.begin(), v.end());
            }
        }
        metric_ = metric;
        column_.resize(n_);
        ensemble_.resize(levels_.size());
    }

    EnsembleScorer(const PointPool& pool, Metric metric, Observation truth)
        : n_(pool.size()), y_(truth.value), metric_(metric) {
        detail::require_finite(y_, "observation");
        if (metric != Metric::spe) {
            throw ValidationError("point forecasts can only be scored with SPE");
        }
        levels_ = {0.5};
        for (std::size_t i = 0; i < n_; ++i) {
            values_.push_back(pool[i].forecast.value);
        }
        column_.resize(n_);
        ensemble_.resize(1);
    }

    std::size_t models() const noexcept { return n_; }

    /// Positively oriented score of the mean ensemble of `members` (ascending indices).
    double score(std::span<const std::size_t> members) const {
        const std::size_t K = levels_.size();
        const std::size_t m = members.size();
        const MeanCombiner mean;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                column_[j] = values_[members[j] * K + k];
            }
            ensemble_[k] = mean(std::span<const double>(column_.data(), m));
        }
        if (metric_ == Metric::spe) {
            const double d = y_ - ensemble_[0];
            return -(d * d);
        }
        return -wis(levels_, ensemble_, y_);
    }

    /// Same as score() with members given as a bitmask over pool indices.
    double score_mask(std::uint32_t mask) const {
        std::size_t m = 0;
        for (std::uint32_t rest = mask; rest != 0; rest &= rest - 1) {
            members_[m++] = static_cast<std::size_t>(std::countr_zero(rest));
        }
        return score(std::span<const std::size_t>(members_.data(), m));
    }

private:
    std::size_t n_;
    double y_;
    Metric metric_ = Metric::wis;
    std::vector<double> levels_;
    std::vector<double> values_; // n_ x levels_.size(), row-major
    mutable std::vector<double> column_;
    mutable std::vector<double> ensemble_;
    mutable std::array<std::size_t, 64> members_{};
};

/// Ensemble score of every non-empty subset of a pool, indexed by bitmask.
/// Each subset is scored once and shared by all n per-model sweeps.
class SubsetScoreTable {
public:
    explicit SubsetScoreTable(const EnsembleScorer& scorer) : n_(scorer.models()) {
        detail::check_lasomo_size(n_);
        const std::uint32_t full = (std::uint32_t{1} << n_) - 1;
        scores_.resize(std::size_t{full} + 1);
        scores_[0] = 0.0;
        for (std::uint32_t mask = 1; mask <= full; ++mask) {
            scores_[mask] = scorer.score_mask(mask);
        }
    }

    std::size_t models() const noexcept { return n_; }
    std::uint32_t full_mask() const noexcept { return (std::uint32_t{1} << n_) - 1; }
    double operator[](std::uint32_t mask) const { return scores_[mask]; }

private:
    std::size_t n_;
    std::vector<double> scores_;
};

/// LASOMO value of model i from a precomputed table. Coalitions are visited
/// in ascending bitmask order.
inline double lasomo_from_table(const SubsetScoreTable& table, std::size_t i,
                                std::span<const double> weights) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    const std::uint32_t full = table.full_mask();
    double phi = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (mask & bit) {
            continue;
        }
        const auto s = static_cast<std::size_t>(std::popcount(mask));
        phi += weights[s] * (table[mask | bit] - table[mask]);
    }
    return phi;
}

inline double lomo_from_table(const SubsetScoreTable& table, std::size_t i) {
    const std::uint32_t full = table.full_mask();
    return table[full] - table[full & ~(std::uint32_t{1} << i)];
}

/// Per coalition-size summary of a model's marginal contributions.
/// `size` is r = |S| + 1, the size of the ensemble that includes the model.
struct SubsetSizeStats {
    std::size_t size = 0;
    double mean = 0.0;
    double variance = 0.0; // population variance
    std::size_t count = 0;
};

inline std::vector<SubsetSizeStats> subset_size_stats_from_table(const SubsetScoreTable& table,
                                                                 std::size_t i) {
    const std::size_t n = table.models();
    const std::uint32_t bit = std::uint32_t{1} << i;
    const std::uint32_t full = table.full_mask();
    std::vector<SubsetSizeStats> stats(n - 1);
    std::vector<double> sums(n - 1, 0.0);
    for (std::size_t r = 2; r <= n; ++r) {
        stats[r - 2].size = r;
    }
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (mask & bit) continue;
        const auto r = static_cast<std::size_t>(std::popcount(mask)) + 1;
        sums[r - 2] += table[mask | bit] - table[mask];
        ++stats[r - 2].count;
    }
    for (std::size_t j = 0; j < stats.size(); ++j) {
        stats[j].mean = sums[j] / static_cast<double>(stats[j].count);
    }
    std::vector<double> sq(n - 1, 0.0);
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (mask & bit) continue;
        const auto r = static_cast<std::size_t>(std::popcount(mask)) + 1;
        const double d = (table[mask | bit] - table[mask]) - stats[r - 2].mean;
        sq[r - 2] += d * d;
    }
    for (std::size_t j = 0; j < stats.size(); ++j) {
        stats[j].variance = sq[j] / static_cast<double>(stats[j].count);
    }
    return stats;
}

/// LOMO importance of one model: mu(full ensemble) - mu(ensemble without it).
template <typename Forecast>
double lomo_task(const TaskPool<Forecast>& tp, Metric metric, const std::string& model_id) {
    const std::size_t n = tp.pool.size();
    const std::size_t i = tp.pool.index_of(model_id);
    if (n < 2) {
        throw DomainError("cannot leave out the only model in the pool");
    }
    const EnsembleScorer scorer(tp.pool, metric, tp.truth);
    std::vector<std::size_t> members(n);
    for (std::size_t j = 0; j < n; ++j) members[j] = j;
    const double with = scorer.score(members);
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(i));
    return with - scorer.score(members);
}

/// LOMO importance of every pool member, in pool order. No size limit.
template <typename Forecast>
std::vector<double> lomo_all(const TaskPool<Forecast>& tp, Metric metric) {
    const std::size_t n = tp.pool.size();
    if (n < 2) {
        throw DomainError("cannot leave out the only model in the pool");
    }
    const EnsembleScorer scorer(tp.pool, metric, tp.truth);
    std::vector<std::size_t> all(n);
    for (std::size_t j = 0; j < n; ++j) all[j] = j;
    const double with = scorer.score(all);
    std::vector<double> out(n);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        rest.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) rest.push_back(j);
        }
        out[i] = with - scorer.score(rest);
    }
    return out;
}

/// LASOMO importance of one model, scoring each coalition on demand.
/// Produces exactly the same bits as lasomo_all() for that model.
template <typename Forecast>
double lasomo_task(const TaskPool<Forecast>& tp, Metric metric, const std::string& model_id,
                   WeightScheme scheme = WeightScheme::permutation) {
    const std::size_t n = tp.pool.size();
    detail::check_lasomo_size(n);
    const std::size_t i = tp.pool.index_of(model_id);
    const EnsembleScorer scorer(tp.pool, metric, tp.truth);
    const auto weights = subset_weights(scheme, n);
    const std::uint32_t bit = std::uint32_t{1} << i;
    const std::uint32_t full = (std::uint32_t{1} << n) - 1;
    double phi = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (mask & bit) continue;
        const auto s = static_cast<std::size_t>(std::popcount(mask));
        phi += weights[s] * (scorer.score_mask(mask | bit) - scorer.score_mask(mask));
    }
    return phi;
}

/// LASOMO importance of every pool member using one shared subset-score table.
template <typename Forecast>
std::vector<double> lasomo_all(const TaskPool<Forecast>& tp, Metric metric,
                               WeightScheme scheme = WeightScheme::permutation) {
    const std::size_t n = tp.pool.size();
    detail::check_lasomo_size(n);
    const EnsembleScorer scorer(tp.pool, metric, tp.truth);
    const SubsetScoreTable table(scorer);
    const auto weights = subset_weights(scheme, n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lasomo_from_table(table, i, weights);
    }
    return out;
}

template <typename Forecast>
std::vector<SubsetSizeStats> importance_by_subset_size(const TaskPool<Forecast>& tp, Metric metric,
                                                       const std::string& model_id) {
    detail::check_lasomo_size(tp.pool.size());
    const std::size_t i = tp.pool.index_of(model_id);
    const EnsembleScorer scorer(tp.pool, metric, tp.truth);
    return subset_size_stats_from_table(SubsetScoreTable(scorer), i);
}

/// Equally weighted mean over subset sizes of the per-size mean contribution.
/// Equals the permutation-weight LASOMO value.
inline double mean_over_subset_sizes(std::span<const SubsetSizeStats> stats) {
    double sum = 0.0;
    for (const auto& s : stats) sum += s.mean;
    return sum / static_cast<double>(stats.size());
}

/// Mean of the present values, in order. Empty if no value is present.
inline std::optional<double> overall_importance(std::span<const std::optional<double>> per_task) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : per_task) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    if (count == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(count);
}

struct ModelRank {
    std::string model;
    double value = 0.0;
    int rank = 0;
};

/// Rank 1 is the largest value; ties go to the lexicographically smaller id.
inline std::vector<ModelRank> rank_models(std::vector<std::pair<std::string, double>> values) {
    std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<ModelRank> out;
    out.reserve(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) {
        out.push_back({values[r].first, values[r].second, static_cast<int>(r + 1)});
    }
    return out;
}

/// Importance of every model over a set of tasks.
struct ImportanceResult {
    Algorithm algorithm = Algorithm::lasomo;
    WeightScheme weights = WeightScheme::permutation;
    std::vector<std::string> models;            // ascending
    std::vector<TaskKey> tasks;                 // ascending
    std::vector<std::vector<std::optional<double>>> per_task; // [model][task]; empty when absent
    std::vector<std::optional<double>> overall; // mean over the tasks the model was in
    /// LASOMO only: per model, per subset size r, the mean over tasks of the
    /// per-task size mean and of the per-task size variance. `count` is the
    /// number of tasks contributing to that size.
    std::vector<std::vector<SubsetSizeStats>> by_subset_size;
};

struct ImportanceAnalysis {
    std::optional<ImportanceResult> lasomo;
    std::optional<ImportanceResult> lomo;
};

struct ImportanceOptions {
    Metric metric = Metric::wis;
    WeightScheme weights = WeightScheme::permutation;
    bool lasomo = true;
    bool lomo = true;
    unsigned workers = 1;
};

namespace detail {

struct TaskOutcome {
    std::vector<double> lasomo;
    std::vector<double> lomo;
    std::vector<std::vector<SubsetSizeStats>> by_size;
};

inline ImportanceResult empty_result(Algorithm a, WeightScheme w, const std::vector<std::string>& models,
                                     const std::vector<TaskKey>& tasks) {
    ImportanceResult r;
    r.algorithm = a;
    r.weights = w;
    r.models = models;
    r.tasks = tasks;
    r.per_task.assign(models.size(), std::vector<std::optional<double>>(tasks.size()));
    return r;
}

} // namespace detail

/// Per-task and overall importance for every model appearing in `tasks`.
///
/// Each task is evaluated over the models present for it. Tasks are processed
/// in parallel but reduced in ascending TaskKey order, so the result does not
/// depend on the worker count.
template <typename Forecast>
ImportanceAnalysis analyze_importance(std::span<const TaskPool<Forecast>> tasks,
                                      const ImportanceOptions& opt) {
    std::vector<std::size_t> order(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return tasks[a].task < tasks[b].task; });
    for (std::size_t t = 1; t < order.size(); ++t) {
        if (tasks[order[t]].task == tasks[order[t - 1]].task) {
            throw ValidationError("task " + tasks[order[t]].task.str() + " appears twice");
        }
    }

    std::vector<std::string> models;
    for (const auto& tp : tasks) {
        for (const auto& m : tp.pool.members()) models.push_back(m.model_id);
    }
    std::sort(models.begin(), models.end());
    models.erase(std::unique(models.begin(), models.end()), models.end());
    std::vector<TaskKey> keys;
    keys.reserve(order.size());
    for (std::size_t t : order) keys.push_back(tasks[t].task);

    if (opt.lasomo) {
        for (const auto& tp : tasks) detail::check_lasomo_size(tp.pool.size());
    }

    std::vector<detail::TaskOutcome> outcomes(order.size());
    parallel_for(order.size(), opt.workers, [&](std::size_t t) {
        const TaskPool<Forecast>& tp = tasks[order[t]];
        const std::size_t n = tp.pool.size();
        if (n < 2) {
            throw DomainError("task " + tp.task.str() + " has fewer than two models");
        }
        const EnsembleScorer scorer(tp.pool, opt.metric, tp.truth);
        detail::TaskOutcome& out = outcomes[t];
        if (opt.lasomo) {
            const SubsetScoreTable table(scorer);
            const auto weights = subset_weights(opt.weights, n);
            out.lasomo.resize(n);
            out.by_size.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                out.lasomo[i] = lasomo_from_table(table, i, weights);
                out.by_size[i] = subset_size_stats_from_table(table, i);
            }
            if (opt.lomo) {
                out.lomo.resize(n);
                for (std::size_t i = 0; i < n; ++i) out.lomo[i] = lomo_from_table(table, i);
            }
        } else if (opt.lomo) {
            out.lomo = lomo_all(tp, opt.metric);
        }
    });

    auto model_index = [&](const std::string& id) {
        return static_cast<std::size_t>(std::lower_bound(models.begin(), models.end(), id) - models.begin());
    };

    ImportanceAnalysis analysis;
    if (opt.lasomo) {
        ImportanceResult r = detail::empty_result(Algorithm::lasomo, opt.weights, models, keys);
        std::vector<std::map<std::size_t, std::pair<SubsetSizeStats, double>>> size_acc(models.size());
        for (std::size_t t = 0; t < order.size(); ++t) {
            const auto& pool = tasks[order[t]].pool;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const std::size_t m = model_index(pool[i].model_id);
                r.per_task[m][t] = outcomes[t].lasomo[i];
                for (const auto& s : outcomes[t].by_size[i]) {
                    auto& [acc, var_sum] = size_acc[m][s.size];
                    acc.size = s.size;
                    acc.mean += s.mean;
                    var_sum += s.variance;
                    ++acc.count;
                }
            }
        }
        r.by_subset_size.resize(models.size());
        for (std::size_t m = 0; m < models.size(); ++m) {
            for (auto& [size, entry] : size_acc[m]) {
                SubsetSizeStats s = entry.first;
                s.mean /= static_cast<double>(s.count);
                s.variance = entry.second / static_cast<double>(s.count);
                r.by_subset_size[m].push_back(s);
            }
        }
        for (const auto& row : r.per_task) r.overall.push_back(overall_importance(row));
        analysis.lasomo = std::move(r);
    }
    if (opt.lomo) {
        ImportanceResult r = detail::empty_result(Algorithm::lomo, opt.weights, models, keys);
        for (std::size_t t = 0; t < order.size(); ++t) {
            const auto& pool = tasks[order[t]].pool;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                r.per_task[model_index(pool[i].model_id)][t] = outcomes[t].lomo[i];
            }
        }
        for (const auto& row : r.per_task) r.overall.push_back(overall_importance(row));
        analysis.lomo = std::move(r);
    }
    return analysis;
}

template <typename Forecast>
ImportanceResult compute_importance(std::span<const TaskPool<Forecast>> tasks, Metric metric,
                                    Algorithm algorithm,
                                    WeightScheme weights = WeightScheme::permutation,
                                    unsigned workers = 1) {
    ImportanceOptions opt;
    opt.metric = metric;
    opt.weights = weights;
    opt.lasomo = algorithm == Algorithm::lasomo;
    opt.lomo = algorithm == Algorithm::lomo;
    opt.workers = workers;
    auto a = analyze_importance(tasks, opt);
    return algorithm == Algorithm::lasomo ? std::move(*a.lasomo) : std::move(*a.lomo);
}

} // namespace ensimp
