#pragma once

// Hub-format forecast and truth files, score panels with missing cells, NA
// policies, and summary output.
//
// Forecast CSV: model,forecast_date,location,horizon,target_end_date,quantile_level,value
// Truth CSV:    location,target_end_date,value

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "importance.hpp"
#include "scoring.hpp"
#include "task_key.hpp"

namespace ensimp {

struct ForecastRecord {
    std::string model;
    TaskKey task;
    QuantileForecast forecast;
};

/// A (model, task) group that could not be turned into a forecast.
struct InvalidRecord {
    std::string model;
    TaskKey task;
    std::string reason;
};

struct ForecastFile {
    std::vector<ForecastRecord> forecasts; // sorted by (task, model)
    std::vector<InvalidRecord> invalid;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return in;
}

} // namespace detail

/// Parses forecast rows and groups them into one quantile forecast per
/// (model, task). Groups whose level set differs from `expected_levels` are
/// reported in `invalid`; duplicate levels and non-monotone quantiles are errors.
inline ForecastFile read_forecasts(std::istream& in, std::string_view path = "<forecasts>",
                                   const QuantileLevels& expected_levels = QuantileLevels::canonical()) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) {
        throw ParseError(std::string(path) + ": empty forecast file");
    }
    const auto col = csv::require_header(
        row, {"model", "forecast_date", "location", "horizon", "target_end_date", "quantile_level", "value"}, path);

    using GroupKey = std::pair<TaskKey, std::string>;
    std::map<GroupKey, std::map<double, double>> groups;
    while (reader.next(row)) {
        const std::size_t line = reader.line();
        if (row.size() < 7) {
            throw ParseError(csv::where(path, line) + ": expected 7 columns, found " + std::to_string(row.size()));
        }
        TaskKey key;
        try {
            key.forecast_date = Date::parse(row[col[1]]);
            key.target_end_date = Date::parse(row[col[4]]);
        } catch (const ParseError& e) {
            throw ParseError(csv::where(path, line) + ": " + e.what());
        }
        key.location = row[col[2]];
        key.horizon = csv::parse_int(row[col[3]], path, line, "horizon");
        try {
            key.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(csv::where(path, line) + ": " + e.what());
        }
        const double level = csv::parse_double(row[col[5]], path, line, "quantile_level");
        const double value = csv::parse_double(row[col[6]], path, line, "value");
        if (!(level > 0.0 && level < 1.0)) {
            throw ParseError(csv::where(path, line) + ": quantile_level must lie in (0, 1)");
        }
        const std::string& model = row[col[0]];
        if (model.empty()) {
            throw ParseError(csv::where(path, line) + ": empty model id");
        }
        auto& levels = groups[{key, model}];
        if (!levels.emplace(level, value).second) {
            throw ValidationError(csv::where(path, line) + ": duplicate row for model '" + model + "', task " +
                                  key.str() + ", level " + format_double(level));
        }
    }

    ForecastFile out;
    for (auto& [gk, levels] : groups) {
        const auto& [task, model] = gk;
        std::vector<double> taus;
        std::vector<double> values;
        for (const auto& [tau, v] : levels) {
            taus.push_back(tau);
            values.push_back(v);
        }
        if (taus != std::vector<double>(expected_levels.values().begin(), expected_levels.values().end())) {
            out.invalid.push_back({model, task,
                                   "has " + std::to_string(taus.size()) + " quantile levels, expected the " +
                                       std::to_string(expected_levels.size()) + " declared levels"});
            continue;
        }
        try {
            out.forecasts.push_back({model, task, QuantileForecast(expected_levels, std::move(values))});
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(path) + ": model '" + model + "', task " + task.str() + ": " +
                                  e.what());
        }
        const auto days = (task.target_end_date.days() - task.forecast_date.days()).count();
        if (days <= 7 * (task.horizon - 1) || days > 7 * task.horizon + 6) {
            out.warnings.push_back("task " + task.str() + ": target_end_date is " + std::to_string(days) +
                                   " days after forecast_date, unusual for horizon " +
                                   std::to_string(task.horizon));
        }
    }
    std::sort(out.warnings.begin(), out.warnings.end());
    out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());
    return out;
}

inline ForecastFile read_forecasts(const std::string& path,
                                   const QuantileLevels& expected_levels = QuantileLevels::canonical()) {
    auto in = detail::open_input(path);
    return read_forecasts(in, path, expected_levels);
}

using TruthKey = std::pair<std::string, Date>; // (location, target_end_date)
using TruthTable = std::map<TruthKey, Observation>;

inline TruthTable read_truth(std::istream& in, std::string_view path = "<truth>") {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) {
        throw ParseError(std::string(path) + ": empty truth file");
    }
    const auto col = csv::require_header(row, {"location", "target_end_date", "value"}, path);
    TruthTable truth;
    while (reader.next(row)) {
        const std::size_t line = reader.line();
        if (row.size() < 3) {
            throw ParseError(csv::where(path, line) + ": expected 3 columns, found " + std::to_string(row.size()));
        }
        Date date;
        try {
            date = Date::parse(row[col[1]]);
        } catch (const ParseError& e) {
            throw ParseError(csv::where(path, line) + ": " + e.what());
        }
        const double value = csv::parse_double(row[col[2]], path, line, "value");
        if (!truth.emplace(TruthKey{row[col[0]], date}, Observation{value}).second) {
            throw ValidationError(csv::where(path, line) + ": duplicate truth for location '" + row[col[0]] +
                                  "' on " + date.str());
        }
    }
    return truth;
}

inline TruthTable read_truth(const std::string& path) {
    auto in = detail::open_input(path);
    return read_truth(in, path);
}

struct ExcludedTask {
    TaskKey task;
    std::string reason;
};

struct JoinedTasks {
    std::vector<TaskPool<QuantileForecast>> pools; // ascending TaskKey
    std::vector<ExcludedTask> excluded;
};

/// Groups forecasts by task and attaches the observed value. Tasks without
/// truth or with fewer than `min_models` valid forecasts are reported in
/// `excluded`, never dropped silently.
inline JoinedTasks join_tasks(const ForecastFile& file, const TruthTable& truth, std::size_t min_models = 2) {
    std::map<TaskKey, std::vector<QuantilePool::Member>> by_task;
    for (const auto& rec : file.forecasts) {
        by_task[rec.task].push_back({rec.model, rec.forecast});
    }
    for (const auto& inv : file.invalid) {
        by_task.try_emplace(inv.task);
    }
    JoinedTasks out;
    for (auto& [task, members] : by_task) {
        const auto it = truth.find(TruthKey{task.location, task.target_end_date});
        if (it == truth.end()) {
            out.excluded.push_back({task, "no truth for location '" + task.location + "' on " +
                                              task.target_end_date.str()});
            continue;
        }
        if (members.size() < min_models) {
            out.excluded.push_back({task, "only " + std::to_string(members.size()) + " valid forecast(s), need " +
                                              std::to_string(min_models)});
            continue;
        }
        out.pools.push_back({task, QuantilePool(std::move(members)), it->second});
    }
    return out;
}

/// Model x task matrix of positively oriented values with explicit missing cells.
struct ScorePanel {
    std::vector<std::string> models; // ascending
    std::vector<TaskKey> tasks;      // ascending
    std::vector<std::vector<std::optional<double>>> cells; // [model][task]

    std::size_t present(std::size_t m) const {
        return static_cast<std::size_t>(
            std::count_if(cells[m].begin(), cells[m].end(), [](const auto& c) { return c.has_value(); }));
    }
};

/// Positively oriented score of each model on each task it forecast.
inline ScorePanel score_panel(std::span<const TaskPool<QuantileForecast>> pools, Metric metric) {
    ScorePanel p;
    for (const auto& tp : pools) {
        p.tasks.push_back(tp.task);
        for (const auto& m : tp.pool.members()) p.models.push_back(m.model_id);
    }
    std::sort(p.models.begin(), p.models.end());
    p.models.erase(std::unique(p.models.begin(), p.models.end()), p.models.end());
    std::vector<std::size_t> order(pools.size());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pools[a].task < pools[b].task; });
    std::sort(p.tasks.begin(), p.tasks.end());
    p.cells.assign(p.models.size(), std::vector<std::optional<double>>(p.tasks.size()));
    for (std::size_t t = 0; t < order.size(); ++t) {
        const auto& tp = pools[order[t]];
        for (const auto& m : tp.pool.members()) {
            const auto mi = static_cast<std::size_t>(
                std::lower_bound(p.models.begin(), p.models.end(), m.model_id) - p.models.begin());
            p.cells[mi][t] = positive_score(metric, m.forecast, tp.truth).value;
        }
    }
    return p;
}

inline ScorePanel importance_panel(const ImportanceResult& r) {
    return ScorePanel{r.models, r.tasks, r.per_task};
}

enum class NaPolicy { drop, worst, mean };

inline std::string_view to_string(NaPolicy p) {
    switch (p) {
    case NaPolicy::drop: return "drop";
    case NaPolicy::worst: return "worst";
    case NaPolicy::mean: return "mean";
    }
    return "?";
}

/// drop leaves missing cells absent; worst fills them with the smallest
/// present value of the task column; mean fills them with the column mean.
/// Columns with no present value are removed under every policy.
inline ScorePanel apply_na_policy(const ScorePanel& panel, NaPolicy policy) {
    ScorePanel out;
    out.models = panel.models;
    out.cells.assign(panel.models.size(), {});
    for (std::size_t t = 0; t < panel.tasks.size(); ++t) {
        std::optional<double> worst;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t m = 0; m < panel.models.size(); ++m) {
            if (const auto& c = panel.cells[m][t]) {
                worst = worst ? std::min(*worst, *c) : *c;
                sum += *c;
                ++count;
            }
        }
        if (count == 0) {
            continue;
        }
        const double fill = policy == NaPolicy::worst ? *worst : sum / static_cast<double>(count);
        out.tasks.push_back(panel.tasks[t]);
        for (std::size_t m = 0; m < panel.models.size(); ++m) {
            auto cell = panel.cells[m][t];
            if (!cell && policy != NaPolicy::drop) cell = fill;
            out.cells[m].push_back(cell);
        }
    }
    return out;
}

/// Per-model mean over present cells, in task order; empty for a model with none.
inline std::vector<std::optional<double>> model_means(const ScorePanel& panel) {
    std::vector<std::optional<double>> out;
    out.reserve(panel.models.size());
    for (const auto& row : panel.cells) out.push_back(overall_importance(row));
    return out;
}

/// One line of a long-format summary.
struct SummaryRow {
    std::string model;
    std::string metric;
    std::optional<double> value; // empty renders as NA / null
    std::size_t n_predictions = 0;
    double pct_submitted = 0.0;

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

enum class OutputFormat { csv, json };

inline void sort_rows(std::vector<SummaryRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return std::tie(a.model, a.metric) < std::tie(b.model, b.metric);
    });
}

inline std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

/// Writes rows sorted by (model, metric). Numbers use 17 significant digits.
inline void write_results(std::vector<SummaryRow> rows, std::ostream& os, OutputFormat format) {
    sort_rows(rows);
    if (format == OutputFormat::csv) {
        os << "model,metric,value,n_predictions,pct_submitted\n";
        for (const auto& r : rows) {
            os << quote_csv(r.model) << ',' << quote_csv(r.metric) << ','
               << (r.value ? format_double(*r.value) : std::string("NA")) << ',' << r.n_predictions << ','
               << format_double(r.pct_submitted) << '\n';
        }
        return;
    }
    nlohmann::ordered_json doc;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["model"] = r.model;
        j["metric"] = r.metric;
        j["value"] = r.value ? nlohmann::ordered_json(*r.value) : nlohmann::ordered_json(nullptr);
        j["n_predictions"] = r.n_predictions;
        j["pct_submitted"] = r.pct_submitted;
        doc["rows"].push_back(std::move(j));
    }
    os << doc.dump(2) << '\n';
}

inline void write_results(std::vector<SummaryRow> rows, const std::string& path, OutputFormat format) {
    if (path == "-") {
        write_results(std::move(rows), std::cout, format);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_results(std::move(rows), os, format);
    if (!os) {
        throw IoError("failed writing '" + path + "'");
    }
}

inline std::vector<SummaryRow> read_results(std::istream& in, OutputFormat format, std::string_view path = "<results>") {
    std::vector<SummaryRow> rows;
    if (format == OutputFormat::json) {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& j : doc.at("rows")) {
            SummaryRow r;
            r.model = j.at("model").get<std::string>();
            r.metric = j.at("metric").get<std::string>();
            if (!j.at("value").is_null()) r.value = j.at("value").get<double>();
            r.n_predictions = j.at("n_predictions").get<std::size_t>();
            r.pct_submitted = j.at("pct_submitted").get<double>();
            rows.push_back(std::move(r));
        }
        return rows;
    }
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) return rows;
    const auto col = csv::require_header(row, {"model", "metric", "value", "n_predictions", "pct_submitted"}, path);
    while (reader.next(row)) {
        const std::size_t line = reader.line();
        if (row.size() < 5) throw ParseError(csv::where(path, line) + ": expected 5 columns");
        SummaryRow r;
        r.model = row[col[0]];
        r.metric = row[col[1]];
        if (row[col[2]] != "NA") r.value = csv::parse_double(row[col[2]], path, line, "value");
        r.n_predictions = static_cast<std::size_t>(csv::parse_int(row[col[3]], path, line, "n_predictions"));
        r.pct_submitted = csv::parse_double(row[col[4]], path, line, "pct_submitted");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<SummaryRow> read_results(const std::string& path, OutputFormat format) {
    auto in = detail::open_input(path);
    return read_results(in, format, path);
}

} // namespace ensimp
