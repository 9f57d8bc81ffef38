// possur: probability of success for multi-endpoint trials under a SUR model.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "possur/error.hpp"
#include "possur/io.hpp"
#include "possur/study.hpp"
#include "possur/templates.hpp"

namespace {

using namespace possur;

constexpr Index kDeskReplicates = 500;
constexpr Index kDeskInnerDraws = 1000;

std::vector<Index> parse_grid(const std::string& text) {
    std::vector<Index> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stol(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--n-grid: '" + item + "' is not an integer");
        }
    }
    if (parts.size() != 3 || parts[2] <= 0 || parts[0] > parts[1])
        throw ConfigError("--n-grid expects start:stop:step with start <= stop and step > 0");
    std::vector<Index> grid;
    for (Index n = parts[0]; n <= parts[1]; n += parts[2]) grid.push_back(n);
    return grid;
}

void emit(const Json& doc, const std::optional<std::string>& out, const std::string& format) {
    if (out) emit_document(doc, std::filesystem::path(*out), format);
    else emit_document(doc, std::cout, format);
}

struct CommonOptions {
    std::string config;
    bool desk_scale = false;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

RunConfig load_with_overrides(const CommonOptions& o) {
    RunConfig c = load_run_config(o.config);
    if (o.desk_scale) {
        c.pos.replicates = kDeskReplicates;
        c.pos.inner_draws = kDeskInnerDraws;
    }
    if (o.format) c.format = *o.format;
    if (o.out) c.output = std::filesystem::absolute(*o.out);
    return c;
}

std::optional<std::string> output_of(const RunConfig& c) {
    if (!c.output) return std::nullopt;
    return c.output->string();
}

int cmd_pos(const CommonOptions& o) {
    const RunConfig c = load_with_overrides(o);
    const PosReport r = pos_estimate(resolve_inputs(c), c.validation, c.pos);
    emit(pos_document(c, r), output_of(c), c.format);
    return 0;
}

int cmd_curve(const CommonOptions& o, const std::optional<std::string>& grid_text) {
    RunConfig c = load_with_overrides(o);
    if (grid_text) c.n_grid = parse_grid(*grid_text);
    if (c.n_grid.empty()) throw ConfigError("curve: no n grid (use --n-grid or curve.n_grid in the config)");
    const auto reports = pos_curve(resolve_inputs(c), c.validation, c.pos, c.n_grid);
    emit(curve_document(c, reports), output_of(c), c.format);
    return 0;
}

struct SimulateOptions {
    std::optional<std::string> from;
    std::string scenario = "fwer";
    std::string region = "one-of-two";
    std::vector<std::string> correlations;
    Index replicates = 1000;
    Index inner_draws = 1000;
    Index n = 300;
    Index historical_n = 981;
    double gamma = 0.95;
    std::uint64_t seed = 1;
    bool desk_scale = false;
    std::optional<std::string> out;
    std::string format = "csv";
};

int cmd_simulate(const SimulateOptions& o) {
    std::vector<StudySpec> specs;
    if (o.from) {
        std::ifstream in(*o.from);
        if (!in) throw Error("cannot open '" + *o.from + "'");
        Json doc;
        try {
            doc = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(*o.from + ": " + e.what());
        }
        if (doc.value("kind", "") == "study-table") {
            for (const auto& e : doc.at("entries")) specs.push_back(study_spec_from_json(e.at("study")));
        } else {
            specs.push_back(study_spec_from_json(doc.contains("study") ? doc.at("study") : doc));
        }
    } else {
        std::vector<Correlation> corrs;
        if (o.correlations.empty() || (o.correlations.size() == 1 && o.correlations[0] == "all"))
            corrs.assign(std::begin(kAllCorrelations), std::end(kAllCorrelations));
        else
            for (const auto& c : o.correlations) corrs.push_back(parse_correlation(c));
        for (Correlation corr : corrs) {
            StudySpec s;
            s.scenario = parse_scenario(o.scenario);
            s.region = parse_study_region(o.region);
            s.correlation = corr;
            s.n = o.n;
            s.historical_n = o.historical_n;
            s.replicates = o.desk_scale ? kDeskReplicates : o.replicates;
            s.inner_draws = o.desk_scale ? kDeskInnerDraws : o.inner_draws;
            s.gamma = o.gamma;
            s.seed = o.seed;
            specs.push_back(s);
        }
    }
    std::vector<Json> entries;
    for (const auto& s : specs) {
        const PosReport r = run_study(s);
        entries.push_back(study_document(s, r));
        std::cerr << to_string(s.scenario) << " " << to_string(s.region) << " " << to_string(s.correlation)
                  << ": unadjusted " << r.pos_unadjusted << ", adjusted " << r.pos_adjusted << ", holm "
                  << r.comparator_rate.value_or(0.0) << " (mc se " << r.mc_se << ")\n";
    }
    const Json doc = entries.size() == 1 ? entries.front() : study_table_document(entries);
    emit(doc, o.out, o.format);
    return 0;
}

struct SynthesizeOptions {
    std::string template_name;
    Index n = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string correlation = "ind";
};

int cmd_synthesize(const SynthesizeOptions& o) {
    const TrialTemplate t = make_template(o.template_name, parse_correlation(o.correlation));
    save_dataset(synthesize(t, o.n > 0 ? o.n : t.default_n, o.seed), o.out);
    return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON), or an emitted JSON report")->required();
    cmd->add_flag("--desk-scale", o.desk_scale, "reduced presets B = 500, M = 1000");
    cmd->add_option("--out", o.out, "output file (default: stdout or output.path)");
    cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probability of success for multi-endpoint trials (SUR model, power priors)"};
    app.require_subcommand(1);

    CommonOptions pos_opts;
    auto* pos = app.add_subcommand("pos", "single POS estimate");
    add_common(pos, pos_opts);

    CommonOptions curve_opts;
    std::optional<std::string> grid;
    auto* curve = app.add_subcommand("curve", "POS over a grid of future sample sizes");
    add_common(curve, curve_opts);
    curve->add_option("--n-grid", grid, "start:stop:step");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "operating characteristics on the compass-like template");
    simulate->add_option("--from", sim.from, "re-run the study recorded in an emitted JSON document");
    simulate->add_option("--scenario", sim.scenario, "fwer or bcep")->check(CLI::IsMember({"fwer", "bcep"}));
    simulate->add_option("--region", sim.region, "one-of-two or primary-plus-one")
        ->check(CLI::IsMember({"one-of-two", "primary-plus-one"}));
    simulate->add_option("--correlation", sim.correlations, "HN, LN, ind, LP, HP or all (repeatable)");
    simulate->add_option("--replicates", sim.replicates, "outer replicates B");
    simulate->add_option("--inner-draws", sim.inner_draws, "posterior draws M per replicate");
    simulate->add_option("--n", sim.n, "future sample size");
    simulate->add_option("--historical-n", sim.historical_n, "synthesized historical sample size");
    simulate->add_option("--gamma", sim.gamma, "posterior probability threshold");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_flag("--desk-scale", sim.desk_scale, "reduced presets B = 500, M = 1000");
    simulate->add_option("--out", sim.out, "output file (default: stdout)");
    simulate->add_option("--format", sim.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    SynthesizeOptions syn;
    auto* synth = app.add_subcommand("synthesize", "simulated historical dataset from a template");
    synth->add_option("--template", syn.template_name, "compass-like or ivacaftor-like")
        ->required()
        ->check(CLI::IsMember({"compass-like", "ivacaftor-like"}));
    synth->add_option("--n", syn.n, "sample size (default: the template's)");
    synth->add_option("--seed", syn.seed, "seed");
    synth->add_option("--out", syn.out, "output CSV")->required();
    synth->add_option("--correlation", syn.correlation, "compass-like residual correlation setting")
        ->check(CLI::IsMember({"HN", "LN", "ind", "LP", "HP"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*pos) return cmd_pos(pos_opts);
        if (*curve) return cmd_curve(curve_opts, grid);
        if (*simulate) return cmd_simulate(sim);
        if (*synth) return cmd_synthesize(syn);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
