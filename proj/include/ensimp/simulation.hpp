#pragma once

// Monte-Carlo sweeps of LOMO importance for three forecasters whose third
// member is varied along a grid:
//
//   a_point       point forecasts -1, -0.5, b            scored with -SPE
//   a_prob        N(-1,1), N(-0.5,1), N(b,1) quantiles    scored with -WIS
//   b_dispersion  N(0,0.5^2), N(0,0.7^2), N(0,s^2)        scored with -WIS
//
// against outcomes drawn from the truth distribution (N(0,1) by default).

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "csv.hpp"
#include "ensembling.hpp"
#include "errors.hpp"
#include "importance.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scoring.hpp"

namespace ensimp {

struct NormalSpec {
    double mean = 0.0;
    double sd = 1.0;

    void validate() const {
        detail::require_finite(mean, "normal mean");
        if (!(sd > 0.0) || !std::isfinite(sd)) {
            throw ValidationError("normal standard deviation must be positive, got " + std::to_string(sd));
        }
    }
};

/// Quantiles mean + sd * z(tau_k) at each level.
inline QuantileForecast normal_quantile_forecast(const NormalSpec& spec, const QuantileLevels& levels) {
    spec.validate();
    std::vector<double> v;
    v.reserve(levels.size());
    for (double tau : levels.values()) {
        v.push_back(spec.mean + spec.sd * normal_quantile(tau));
    }
    return QuantileForecast(levels, std::move(v));
}

enum class Scenario { a_point, a_prob, b_dispersion };

inline std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::a_point: return "a_point";
    case Scenario::a_prob: return "a_prob";
    case Scenario::b_dispersion: return "b_dispersion";
    }
    return "?";
}

/// Inclusive arithmetic grid start, start + step, ..., end.
struct Grid {
    double start = 0.0;
    double end = 0.0;
    double step = 1.0;

    void validate() const {
        if (!std::isfinite(start) || !std::isfinite(end) || !std::isfinite(step)) {
            throw ValidationError("grid bounds must be finite");
        }
        if (!(step > 0.0)) {
            throw ValidationError("grid step must be positive");
        }
        if (end < start) {
            throw ValidationError("grid end precedes grid start");
        }
    }

    std::size_t size() const {
        validate();
        return static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    }

    /// Grid values are snapped to 1e-10 so that e.g. 1.5 is hit exactly.
    double value(std::size_t i) const {
        const double v = start + static_cast<double>(i) * step;
        return std::round(v * 1e10) / 1e10;
    }
};

struct SimulationSpec {
    Scenario scenario = Scenario::a_point;
    /// Forecasters 1 and 2. Point scenarios use only the means.
    std::vector<NormalSpec> fixed_components;
    /// Forecaster 3 before the swept parameter is applied: the grid value
    /// replaces its mean (scenario A) or its sd (scenario B).
    NormalSpec swept_component;
    Grid sweep;
    std::size_t replicates = 1000;
    NormalSpec truth{0.0, 1.0};
    QuantileLevels levels = QuantileLevels::canonical();
    std::uint64_t seed = 42;
    /// Reuse the same outcome draws at every grid value (common random numbers).
    bool shared_truth_draws = true;

    static SimulationSpec defaults(Scenario scenario) {
        SimulationSpec s;
        s.scenario = scenario;
        switch (scenario) {
        case Scenario::a_point:
        case Scenario::a_prob:
            s.fixed_components = {{-1.0, 1.0}, {-0.5, 1.0}};
            s.swept_component = {0.0, 1.0};
            s.sweep = {-1.0, 3.0, 0.05};
            break;
        case Scenario::b_dispersion:
            s.fixed_components = {{0.0, 0.5}, {0.0, 0.7}};
            s.swept_component = {0.0, 1.0};
            s.sweep = {0.1, 3.0, 0.05};
            break;
        }
        return s;
    }

    void validate() const {
        sweep.validate();
        if (replicates < 1) {
            throw ValidationError("replicates must be >= 1");
        }
        if (fixed_components.empty()) {
            throw ValidationError("simulation needs at least one fixed component");
        }
        truth.validate();
        for (const auto& c : fixed_components) c.validate();
        if (scenario == Scenario::b_dispersion && !(sweep.start > 0.0)) {
            throw ValidationError("dispersion grid must stay positive");
        }
        if (levels.empty()) {
            throw ValidationError("simulation needs at least one quantile level");
        }
    }

    /// Components of every forecaster at grid value `g`.
    std::vector<NormalSpec> components_at(double g) const {
        std::vector<NormalSpec> c = fixed_components;
        NormalSpec third = swept_component;
        if (scenario == Scenario::b_dispersion) {
            third.sd = g;
        } else {
            third.mean = g;
        }
        c.push_back(third);
        return c;
    }
};

struct SweepResult {
    Scenario scenario = Scenario::a_point;
    std::vector<double> grid_values;
    /// [forecaster][grid index]
    std::vector<std::vector<double>> mean_importance;
    std::vector<std::vector<double>> std_error;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;

    std::size_t forecasters() const { return mean_importance.size(); }
};

/// Outcome of replicate r at grid index g.
inline double simulated_truth(const SimulationSpec& spec, std::size_t grid_index, std::size_t replicate) {
    const std::uint64_t key = spec.shared_truth_draws ? 0 : grid_index + 1;
    return CounterStream(spec.seed, key).normal(replicate, spec.truth.mean, spec.truth.sd);
}

/// LOMO importance of each forecaster for one replicate.
inline std::vector<double> replicate_importance(const SimulationSpec& spec, double grid_value, double y) {
    const auto comps = spec.components_at(grid_value);
    if (spec.scenario == Scenario::a_point) {
        std::vector<PointPool::Member> members;
        for (std::size_t j = 0; j < comps.size(); ++j) {
            members.push_back({std::to_string(j + 1), PointForecast{comps[j].mean}});
        }
        const TaskPool<PointForecast> tp{TaskKey{}, PointPool(std::move(members)), Observation{y}};
        return lomo_all(tp, Metric::spe);
    }
    std::vector<QuantilePool::Member> members;
    for (std::size_t j = 0; j < comps.size(); ++j) {
        members.push_back({std::to_string(j + 1), normal_quantile_forecast(comps[j], spec.levels)});
    }
    const TaskPool<QuantileForecast> tp{TaskKey{}, QuantilePool(std::move(members)), Observation{y}};
    return lomo_all(tp, Metric::wis);
}

namespace detail {

// Scores the leave-one-out ensembles of a fixed pool against many outcomes.
class LomoReplicator {
public:
    explicit LomoReplicator(const SimulationSpec& spec, double grid_value) {
        const auto comps = spec.components_at(grid_value);
        n_ = comps.size();
        if (spec.scenario == Scenario::a_point) {
            metric_ = Metric::spe;
            levels_ = {0.5};
            for (const auto& c : comps) values_.push_back(c.mean);
        } else {
            metric_ = Metric::wis;
            levels_.assign(spec.levels.values().begin(), spec.levels.values().end());
            for (const auto& c : comps) {
                const auto q = normal_quantile_forecast(c, spec.levels);
                values_.insert(values_.end(), q.values().begin(), q.values().end());
            }
        }
        const std::size_t K = levels_.size();
        const MeanCombiner mean;
        std::vector<double> column;
        auto build = [&](std::size_t skip) {
            std::vector<double> ens(K);
            for (std::size_t k = 0; k < K; ++k) {
                column.clear();
                for (std::size_t j = 0; j < n_; ++j) {
                    if (j != skip) column.push_back(values_[j * K + k]);
                }
                ens[k] = mean(column);
            }
            return ens;
        };
        full_ = build(n_);
        for (std::size_t i = 0; i < n_; ++i) without_.push_back(build(i));
    }

    std::size_t forecasters() const { return n_; }

    double importance(std::size_t i, double y) const { return score(full_, y) - score(without_[i], y); }

private:
    double score(const std::vector<double>& ens, double y) const {
        if (metric_ == Metric::spe) {
            const double d = y - ens[0];
            return -(d * d);
        }
        return -wis(levels_, ens, y);
    }

    std::size_t n_ = 0;
    Metric metric_ = Metric::wis;
    std::vector<double> levels_;
    std::vector<double> values_;
    std::vector<double> full_;
    std::vector<std::vector<double>> without_;
};

} // namespace detail

/// Mean LOMO importance (and its standard error) of each forecaster at every
/// grid value. Grid values run in parallel; replicates are accumulated in
/// index order, so the result is independent of `workers`.
inline SweepResult run_sweep(const SimulationSpec& spec, unsigned workers = 1) {
    spec.validate();
    const std::size_t G = spec.sweep.size();
    const std::size_t F = spec.fixed_components.size() + 1;
    SweepResult res;
    res.scenario = spec.scenario;
    res.replicates = spec.replicates;
    res.seed = spec.seed;
    res.grid_values.resize(G);
    res.mean_importance.assign(F, std::vector<double>(G));
    res.std_error.assign(F, std::vector<double>(G));

    std::vector<double> shared_truth;
    if (spec.shared_truth_draws) {
        shared_truth.resize(spec.replicates);
        for (std::size_t r = 0; r < spec.replicates; ++r) shared_truth[r] = simulated_truth(spec, 0, r);
    }

    parallel_for(G, workers, [&](std::size_t g) {
        const double value = spec.sweep.value(g);
        res.grid_values[g] = value;
        const detail::LomoReplicator rep(spec, value);
        std::vector<double> mean(F, 0.0);
        std::vector<double> m2(F, 0.0);
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            const double y = spec.shared_truth_draws ? shared_truth[r] : simulated_truth(spec, g, r);
            for (std::size_t f = 0; f < F; ++f) {
                const double x = rep.importance(f, y);
                const double delta = x - mean[f];
                mean[f] += delta / static_cast<double>(r + 1);
                m2[f] += delta * (x - mean[f]);
            }
        }
        const double R = static_cast<double>(spec.replicates);
        for (std::size_t f = 0; f < F; ++f) {
            res.mean_importance[f][g] = mean[f];
            res.std_error[f][g] = spec.replicates > 1 ? std::sqrt(m2[f] / (R - 1.0) / R) : 0.0;
        }
    });
    return res;
}

/// Long-format CSV: scenario,grid_value,forecaster,mean_importance,replicates,seed.
inline void write_sweep_csv(const SweepResult& r, std::ostream& os) {
    os << "scenario,grid_value,forecaster,mean_importance,replicates,seed\n";
    for (std::size_t g = 0; g < r.grid_values.size(); ++g) {
        for (std::size_t f = 0; f < r.forecasters(); ++f) {
            os << to_string(r.scenario) << ',' << format_double(r.grid_values[g]) << ',' << (f + 1) << ','
               << format_double(r.mean_importance[f][g]) << ',' << r.replicates << ',' << r.seed << '\n';
        }
    }
}

} // namespace ensimp
