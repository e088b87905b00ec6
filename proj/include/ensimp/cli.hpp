#pragma once

// Subcommand implementations behind the `ensimp` tool. Each command takes a
// validated configuration, writes its result to `output` ("-" for stdout)
// and diagnostics to `err`, and returns the process exit status.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "dataio.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "importance.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "simulation.hpp"

namespace ensimp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // validation, parse, capacity or I/O error
inline constexpr int kExitCheckFailed = 2; // decompose-check residual breach

struct CliConfig {
    std::string subcommand;
    std::string forecasts;
    std::string truth;
    Metric metric = Metric::wis;
    Algorithm algorithm = Algorithm::lasomo;
    WeightScheme weights = WeightScheme::permutation;
    NaPolicy na = NaPolicy::worst;
    Scenario scenario = Scenario::a_point;
    std::optional<double> grid_start;
    std::optional<double> grid_end;
    std::optional<double> grid_step;
    std::size_t replicates = 1000;
    std::uint64_t seed = 42;
    bool independent_draws = false;
    std::size_t instances = 1000;
    bool inject_fault = false;
    std::string output = "-";
    std::string per_task_output;
    OutputFormat format = OutputFormat::csv;
    unsigned workers = default_workers();

    void validate() const {
        const bool needs_data = subcommand == "score" || subcommand == "importance" || subcommand == "subset-variance";
        if (needs_data && (forecasts.empty() || truth.empty())) {
            throw ValidationError(subcommand + " needs --forecasts and --truth");
        }
        if (subcommand == "subset-variance" && weights != WeightScheme::permutation) {
            throw ValidationError("subset-variance is defined for permutation weights only");
        }
        if (subcommand == "simulate") {
            if (replicates < 1) throw ValidationError("--replicates must be >= 1");
            simulation_spec().validate();
        }
        if (subcommand == "decompose-check" && instances < 1) {
            throw ValidationError("--instances must be >= 1");
        }
        if (workers < 1) throw ValidationError("--workers must be >= 1");
        if (!per_task_output.empty() && subcommand != "importance") {
            throw ValidationError("--per-task-output only applies to importance");
        }
    }

    SimulationSpec simulation_spec() const {
        SimulationSpec spec = SimulationSpec::defaults(scenario);
        if (grid_start) spec.sweep.start = *grid_start;
        if (grid_end) spec.sweep.end = *grid_end;
        if (grid_step) spec.sweep.step = *grid_step;
        spec.replicates = replicates;
        spec.seed = seed;
        spec.shared_truth_draws = !independent_draws;
        return spec;
    }
};

namespace detail {

/// Output stream for a path, "-" meaning stdout.
class Output {
public:
    explicit Output(const std::string& path) : path_(path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw IoError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return path_ == "-" ? std::cout : file_; }
    void close() {
        if (path_ == "-") {
            std::cout.flush();
            return;
        }
        file_.close();
        if (!file_) throw IoError("failed writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::ofstream file_;
};

inline std::string score_metric_name(Metric m) { return m == Metric::wis ? "neg_wis" : "neg_spe"; }

inline std::string lasomo_metric_name(WeightScheme w) {
    return w == WeightScheme::permutation ? "phi_lasomo" : "phi_lasomo_equal";
}

inline void report_input(const ForecastFile& file, const JoinedTasks& joined, std::ostream& err) {
    for (const auto& w : file.warnings) err << "warning: " << w << '\n';
    for (const auto& inv : file.invalid) {
        err << "invalid forecast: model '" << inv.model << "', task " << inv.task.str() << ": " << inv.reason
            << '\n';
    }
    for (const auto& ex : joined.excluded) err << "excluded task " << ex.task.str() << ": " << ex.reason << '\n';
}

inline JoinedTasks load_tasks(const CliConfig& cfg, std::size_t min_models, std::ostream& err) {
    const TruthTable truth = read_truth(cfg.truth);
    const ForecastFile file = read_forecasts(cfg.forecasts);
    JoinedTasks joined = join_tasks(file, truth, min_models);
    report_input(file, joined, err);
    if (joined.pools.empty()) {
        throw ValidationError("no task has both truth and enough forecasts");
    }
    return joined;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const CapacityError& e) {
        err << "error: " << e.what() << " (--algorithm lomo has no size limit)\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitFailure;
}

} // namespace detail

/// Rows of the Table-1 style summary: mean score, importance under each
/// computed algorithm and the rank of every model by each of them.
inline std::vector<SummaryRow> summarize(const ScorePanel& raw_scores, const ImportanceAnalysis& analysis,
                                         const CliConfig& cfg) {
    std::vector<SummaryRow> rows;
    const std::size_t T = raw_scores.tasks.size();
    auto add_metric = [&](const std::string& name, const ScorePanel& raw) {
        const auto means = model_means(apply_na_policy(raw, cfg.na));
        std::vector<std::pair<std::string, double>> present;
        for (std::size_t m = 0; m < raw_scores.models.size(); ++m) {
            const std::size_t n = raw_scores.present(m);
            const double pct = T == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(T);
            rows.push_back({raw_scores.models[m], name, means[m], n, pct});
            if (means[m]) present.emplace_back(raw_scores.models[m], *means[m]);
        }
        std::vector<std::optional<double>> rank(raw_scores.models.size());
        for (const auto& r : rank_models(present)) {
            const auto m = static_cast<std::size_t>(
                std::lower_bound(raw_scores.models.begin(), raw_scores.models.end(), r.model) -
                raw_scores.models.begin());
            rank[m] = static_cast<double>(r.rank);
        }
        for (std::size_t m = 0; m < raw_scores.models.size(); ++m) {
            const std::size_t n = raw_scores.present(m);
            const double pct = T == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(T);
            rows.push_back({raw_scores.models[m], "rank_" + name, rank[m], n, pct});
        }
    };
    add_metric(detail::score_metric_name(cfg.metric), raw_scores);
    if (analysis.lasomo) add_metric(detail::lasomo_metric_name(cfg.weights), importance_panel(*analysis.lasomo));
    if (analysis.lomo) add_metric("phi_lomo", importance_panel(*analysis.lomo));
    sort_rows(rows);
    return rows;
}

inline int cmd_score(const CliConfig& cfg, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const JoinedTasks joined = detail::load_tasks(cfg, 1, err);
        const ScorePanel raw = score_panel(joined.pools, cfg.metric);
        const auto means = model_means(apply_na_policy(raw, cfg.na));
        const std::string name = detail::score_metric_name(cfg.metric);
        const std::string note = cfg.metric == Metric::spe
                                     ? "spe scores the 0.5 quantile (predictive median) as the point forecast"
                                     : "wis over all quantile levels";

        detail::Output out(cfg.output);
        std::ostream& os = out.stream();
        if (cfg.format == OutputFormat::csv) {
            os << "# metric: " << note << "; na policy for means: " << to_string(cfg.na) << '\n';
            os << "model,forecast_date,location,horizon,target_end_date,metric,value\n";
            for (std::size_t m = 0; m < raw.models.size(); ++m) {
                for (std::size_t t = 0; t < raw.tasks.size(); ++t) {
                    const auto& c = raw.cells[m][t];
                    if (!c) continue;
                    const TaskKey& k = raw.tasks[t];
                    os << quote_csv(raw.models[m]) << ',' << k.forecast_date.str() << ',' << quote_csv(k.location)
                       << ',' << k.horizon << ',' << k.target_end_date.str() << ',' << name << ','
                       << format_double(*c) << '\n';
                }
            }
            for (std::size_t m = 0; m < raw.models.size(); ++m) {
                os << quote_csv(raw.models[m]) << ",,,,,mean_" << name << ','
                   << (means[m] ? format_double(*means[m]) : std::string("NA")) << '\n';
            }
        } else {
            nlohmann::ordered_json doc;
            doc["metadata"] = {{"metric", name}, {"note", note}, {"na_policy", std::string(to_string(cfg.na))}};
            doc["scores"] = nlohmann::ordered_json::array();
            for (std::size_t m = 0; m < raw.models.size(); ++m) {
                for (std::size_t t = 0; t < raw.tasks.size(); ++t) {
                    if (!raw.cells[m][t]) continue;
                    const TaskKey& k = raw.tasks[t];
                    doc["scores"].push_back({{"model", raw.models[m]},
                                             {"forecast_date", k.forecast_date.str()},
                                             {"location", k.location},
                                             {"horizon", k.horizon},
                                             {"target_end_date", k.target_end_date.str()},
                                             {"metric", name},
                                             {"value", *raw.cells[m][t]}});
                }
            }
            doc["summary"] = nlohmann::ordered_json::array();
            for (std::size_t m = 0; m < raw.models.size(); ++m) {
                doc["summary"].push_back(
                    {{"model", raw.models[m]},
                     {"metric", "mean_" + name},
                     {"value", means[m] ? nlohmann::ordered_json(*means[m]) : nlohmann::ordered_json(nullptr)}});
            }
            os << doc.dump(2) << '\n';
        }
        out.close();
        return kExitOk;
    });
}

inline void write_per_task(const ImportanceAnalysis& analysis, const CliConfig& cfg, const std::string& path) {
    detail::Output out(path);
    std::ostream& os = out.stream();
    os << "model,forecast_date,location,horizon,target_end_date,metric,value\n";
    std::vector<std::pair<std::string, const ImportanceResult*>> results;
    if (analysis.lasomo) results.emplace_back(detail::lasomo_metric_name(cfg.weights), &*analysis.lasomo);
    if (analysis.lomo) results.emplace_back("phi_lomo", &*analysis.lomo);
    const ImportanceResult& first = *results.front().second;
    for (std::size_t m = 0; m < first.models.size(); ++m) {
        for (std::size_t t = 0; t < first.tasks.size(); ++t) {
            const TaskKey& k = first.tasks[t];
            for (const auto& [name, r] : results) {
                const auto& c = r->per_task[m][t];
                os << quote_csv(first.models[m]) << ',' << k.forecast_date.str() << ',' << quote_csv(k.location)
                   << ',' << k.horizon << ',' << k.target_end_date.str() << ',' << name << ','
                   << (c ? format_double(*c) : std::string("NA")) << '\n';
            }
        }
    }
    out.close();
}

inline int cmd_importance(const CliConfig& cfg, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const JoinedTasks joined = detail::load_tasks(cfg, 2, err);
        ImportanceOptions opt;
        opt.metric = cfg.metric;
        opt.weights = cfg.weights;
        opt.lasomo = cfg.algorithm == Algorithm::lasomo;
        opt.lomo = true;
        opt.workers = cfg.workers;
        const ImportanceAnalysis analysis =
            analyze_importance(std::span<const TaskPool<QuantileForecast>>(joined.pools), opt);
        const ScorePanel raw = score_panel(joined.pools, cfg.metric);
        write_results(summarize(raw, analysis, cfg), cfg.output, cfg.format);
        if (!cfg.per_task_output.empty()) write_per_task(analysis, cfg, cfg.per_task_output);
        return kExitOk;
    });
}

inline int cmd_simulate(const CliConfig& cfg, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const SweepResult r = run_sweep(cfg.simulation_spec(), cfg.workers);
        detail::Output out(cfg.output);
        write_sweep_csv(r, out.stream());
        out.close();
        return kExitOk;
    });
}

/// Outcome of the randomized identity suites.
struct DecomposeReport {
    std::size_t instances = 0;
    double max_identity_residual = 0.0; // |direct - decomposed| / max(1, |direct|)
    std::size_t worst_identity_instance = 0;
    double max_ambiguity_residual = 0.0; // |residual|
    std::size_t worst_ambiguity_instance = 0;

    bool ok(double tol = 1e-9) const { return max_identity_residual < tol && max_ambiguity_residual < tol; }
};

/// Instance k draws n in [2, 8], standard normal errors and a model index from
/// the counter stream keyed by (seed, suite, k).
inline DecomposeReport run_decompose_check(std::size_t instances, std::uint64_t seed, bool inject_fault = false) {
    DecomposeReport rep;
    rep.instances = instances;
    for (std::size_t k = 0; k < instances; ++k) {
        CounterStream s(seed, 1, k);
        const std::size_t n = 2 + static_cast<std::size_t>(s.next_uniform() * 7.0);
        std::vector<double> e(n);
        for (auto& v : e) v = s.next_normal();
        const std::size_t i = static_cast<std::size_t>(s.next_uniform() * static_cast<double>(n));
        const ErrorVector ev(e);
        const double direct = phi_direct(ev, i);
        double decomposed = phi_decomposed(ev, i);
        if (inject_fault && k == 0) decomposed += 1e-6;
        const double rel = std::abs(direct - decomposed) / std::max(1.0, std::abs(direct));
        if (rel >= rep.max_identity_residual) {
            rep.max_identity_residual = rel;
            rep.worst_identity_instance = k;
        }
    }
    for (std::size_t k = 0; k < instances; ++k) {
        CounterStream s(seed, 2, k);
        const std::size_t n = 2 + static_cast<std::size_t>(s.next_uniform() * 7.0);
        std::vector<double> f(n);
        std::vector<double> w(n);
        for (auto& v : f) v = s.next_normal();
        const double truth = s.next_normal();
        double total = 0.0;
        for (auto& v : w) total += (v = s.next_uniform());
        for (auto& v : w) v /= total;
        const std::size_t i = static_cast<std::size_t>(s.next_uniform() * static_cast<double>(n));
        const double r = std::abs(ambiguity_check(f, truth, w, i));
        if (r >= rep.max_ambiguity_residual) {
            rep.max_ambiguity_residual = r;
            rep.worst_ambiguity_instance = k;
        }
    }
    return rep;
}

inline int cmd_decompose_check(const CliConfig& cfg, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const DecomposeReport rep = run_decompose_check(cfg.instances, cfg.seed, cfg.inject_fault);
        detail::Output out(cfg.output);
        std::ostream& os = out.stream();
        os << "instances," << rep.instances << '\n'
           << "seed," << cfg.seed << '\n'
           << "identity_max_relative_residual," << format_double(rep.max_identity_residual) << '\n'
           << "identity_worst_instance," << rep.worst_identity_instance << '\n'
           << "ambiguity_max_abs_residual," << format_double(rep.max_ambiguity_residual) << '\n'
           << "ambiguity_worst_instance," << rep.worst_ambiguity_instance << '\n'
           << "status," << (rep.ok() ? "ok" : "fail") << '\n';
        out.close();
        if (!rep.ok()) {
            err << "decompose-check: residual above 1e-9 (identity instance " << rep.worst_identity_instance
                << ", ambiguity instance " << rep.worst_ambiguity_instance << ")\n";
            return kExitCheckFailed;
        }
        return kExitOk;
    });
}

inline int cmd_subset_variance(const CliConfig& cfg, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        cfg.validate();
        const JoinedTasks joined = detail::load_tasks(cfg, 2, err);
        for (const auto& tp : joined.pools) ensimp::detail::check_lasomo_size(tp.pool.size());

        struct TaskRows {
            std::vector<std::vector<SubsetSizeStats>> stats; // per pool member
            std::vector<double> lasomo;
        };
        std::vector<TaskRows> per_task(joined.pools.size());
        parallel_for(joined.pools.size(), cfg.workers, [&](std::size_t t) {
            const auto& tp = joined.pools[t];
            const EnsembleScorer scorer(tp.pool, cfg.metric, tp.truth);
            const SubsetScoreTable table(scorer);
            const auto weights = subset_weights(WeightScheme::permutation, tp.pool.size());
            for (std::size_t i = 0; i < tp.pool.size(); ++i) {
                per_task[t].stats.push_back(subset_size_stats_from_table(table, i));
                per_task[t].lasomo.push_back(lasomo_from_table(table, i, weights));
            }
        });

        struct Line {
            std::string model;
            std::size_t task;
            const SubsetSizeStats* stats;
            double mean_over_sizes;
            double lasomo;
        };
        std::vector<Line> lines;
        for (std::size_t t = 0; t < joined.pools.size(); ++t) {
            const auto& pool = joined.pools[t].pool;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const double mos = mean_over_subset_sizes(per_task[t].stats[i]);
                for (const auto& s : per_task[t].stats[i]) {
                    lines.push_back({pool[i].model_id, t, &s, mos, per_task[t].lasomo[i]});
                }
            }
        }
        std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
            return std::tie(a.model, a.task, a.stats->size) < std::tie(b.model, b.task, b.stats->size);
        });

        detail::Output out(cfg.output);
        std::ostream& os = out.stream();
        os << "model,forecast_date,location,horizon,target_end_date,subset_size,mean,variance,mean_over_sizes,"
              "phi_lasomo\n";
        for (const auto& l : lines) {
            const TaskKey& k = joined.pools[l.task].task;
            os << quote_csv(l.model) << ',' << k.forecast_date.str() << ',' << quote_csv(k.location) << ','
               << k.horizon << ',' << k.target_end_date.str() << ',' << l.stats->size << ','
               << format_double(l.stats->mean) << ',' << format_double(l.stats->variance) << ','
               << format_double(l.mean_over_sizes) << ',' << format_double(l.lasomo) << '\n';
        }
        out.close();
        return kExitOk;
    });
}

inline int run(const CliConfig& cfg, std::ostream& err = std::cerr) {
    if (cfg.subcommand == "score") return cmd_score(cfg, err);
    if (cfg.subcommand == "importance") return cmd_importance(cfg, err);
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg, err);
    if (cfg.subcommand == "decompose-check") return cmd_decompose_check(cfg, err);
    if (cfg.subcommand == "subset-variance") return cmd_subset_variance(cfg, err);
    err << "error: unknown subcommand '" << cfg.subcommand << "'\n";
    return kExitFailure;
}

} // namespace ensimp::cli
