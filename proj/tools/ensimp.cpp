// ensimp: score quantile forecasts, measure each model's importance to the
// mean ensemble, and run the simulation and decomposition checks.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include <ensimp/cli.hpp>

namespace {

using ensimp::cli::CliConfig;

// Choice flags are parsed as text and mapped once parsing has succeeded.
struct Choices {
    std::string metric = "wis";
    std::string na = "worst";
    std::string algorithm = "lasomo";
    std::string weights = "permutation";
    std::string scenario = "a-point";
    std::string format = "csv";
};

const std::map<std::string, ensimp::Metric> kMetrics{{"wis", ensimp::Metric::wis}, {"spe", ensimp::Metric::spe}};
const std::map<std::string, ensimp::NaPolicy> kPolicies{
    {"drop", ensimp::NaPolicy::drop}, {"worst", ensimp::NaPolicy::worst}, {"mean", ensimp::NaPolicy::mean}};
const std::map<std::string, ensimp::Algorithm> kAlgorithms{{"lomo", ensimp::Algorithm::lomo},
                                                           {"lasomo", ensimp::Algorithm::lasomo}};
const std::map<std::string, ensimp::WeightScheme> kSchemes{{"permutation", ensimp::WeightScheme::permutation},
                                                           {"equal", ensimp::WeightScheme::equal}};
const std::map<std::string, ensimp::Scenario> kScenarios{
    {"a-point", ensimp::Scenario::a_point}, {"a_point", ensimp::Scenario::a_point},
    {"a-prob", ensimp::Scenario::a_prob},   {"a_prob", ensimp::Scenario::a_prob},
    {"b", ensimp::Scenario::b_dispersion},  {"b-dispersion", ensimp::Scenario::b_dispersion},
    {"b_dispersion", ensimp::Scenario::b_dispersion}};
const std::map<std::string, ensimp::OutputFormat> kFormats{{"csv", ensimp::OutputFormat::csv},
                                                           {"json", ensimp::OutputFormat::json}};

template <typename T>
std::vector<std::string> keys(const std::map<std::string, T>& m) {
    std::vector<std::string> k;
    for (const auto& [name, _] : m) k.push_back(name);
    return k;
}

void add_data_options(CLI::App* cmd, CliConfig& cfg, Choices& ch) {
    cmd->add_option("--forecasts", cfg.forecasts, "Forecast CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--truth", cfg.truth, "Truth CSV")->required();
    cmd->add_option("--metric", ch.metric, "Scoring rule: wis or spe")->check(CLI::IsMember(keys(kMetrics)))
        ->capture_default_str();
    cmd->add_option("--na", ch.na, "Missing (model, task) cells when averaging: drop, worst or mean")
        ->check(CLI::IsMember(keys(kPolicies)))
        ->capture_default_str();
}

void add_output_options(CLI::App* cmd, CliConfig& cfg, Choices& ch, bool with_format) {
    cmd->add_option("-o,--output", cfg.output, "Output path, '-' for stdout")->capture_default_str();
    if (with_format) {
        cmd->add_option("--format", ch.format, "Output format: csv or json")->check(CLI::IsMember(keys(kFormats)))
            ->capture_default_str();
    }
    cmd->add_option("--workers", cfg.workers, "Worker threads (env ENSIMP_WORKERS)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantile forecast scoring and ensemble model importance"};
    app.require_subcommand(1);
    CliConfig cfg;
    Choices ch;

    auto* score = app.add_subcommand("score", "Score every forecast with -WIS or -SPE");
    add_data_options(score, cfg, ch);
    add_output_options(score, cfg, ch, true);

    auto* importance = app.add_subcommand("importance", "Per-task and overall model importance");
    add_data_options(importance, cfg, ch);
    importance->add_option("--algorithm", ch.algorithm, "lasomo (also reports lomo) or lomo")
        ->check(CLI::IsMember(keys(kAlgorithms)))
        ->capture_default_str();
    importance->add_option("--weights", ch.weights, "Subset weights for lasomo: permutation or equal")
        ->check(CLI::IsMember(keys(kSchemes)))
        ->capture_default_str();
    importance->add_option("--per-task-output", cfg.per_task_output, "Also write per-task importance CSV");
    add_output_options(importance, cfg, ch, true);

    auto* simulate = app.add_subcommand("simulate", "Expected-importance sweeps over bias or dispersion");
    simulate->add_option("--scenario", ch.scenario, "a-point, a-prob or b")->check(CLI::IsMember(keys(kScenarios)))
        ->capture_default_str();
    simulate->add_option("--grid-start", cfg.grid_start, "First grid value (default -1 for A, 0.1 for B)");
    simulate->add_option("--grid-end", cfg.grid_end, "Last grid value (default 3)");
    simulate->add_option("--grid-step", cfg.grid_step, "Grid increment (default 0.05)");
    simulate->add_option("--replicates", cfg.replicates, "Replicates per grid value")->capture_default_str();
    simulate->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    simulate->add_flag("--independent-draws", cfg.independent_draws,
                       "Draw fresh outcomes at every grid value instead of reusing them");
    add_output_options(simulate, cfg, ch, false);

    auto* decompose = app.add_subcommand("decompose-check", "Randomized checks of the LOMO decomposition");
    decompose->add_option("--instances", cfg.instances, "Random instances per identity")->capture_default_str();
    decompose->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    decompose->add_flag("--inject-fault", cfg.inject_fault, "Perturb one instance (tests the failure path)")
        ->group("");
    add_output_options(decompose, cfg, ch, false);

    auto* variance = app.add_subcommand("subset-variance", "Importance by subset size for every task");
    add_data_options(variance, cfg, ch);
    add_output_options(variance, cfg, ch, false);

    CLI11_PARSE(app, argc, argv);
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.metric = kMetrics.at(ch.metric);
    cfg.na = kPolicies.at(ch.na);
    cfg.algorithm = kAlgorithms.at(ch.algorithm);
    cfg.weights = kSchemes.at(ch.weights);
    cfg.scenario = kScenarios.at(ch.scenario);
    cfg.format = kFormats.at(ch.format);
    return ensimp::cli::run(cfg);
}
