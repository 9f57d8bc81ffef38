#include "possur/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "possur/error.hpp"

namespace possur {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class ColumnRole { outcome, treatment, covariate };

struct CsvColumn {
    ColumnRole role;
    Index index;  // outcome or covariate position
};

}  // namespace

TrialDataset read_dataset_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
    const std::vector<std::string> header = split(line);

    std::vector<CsvColumn> layout;
    std::map<Index, Index> outcome_pos;  // endpoint number -> header position
    std::vector<CovariateColumn> covs;
    std::set<std::string> cov_names;
    bool has_z = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "z") {
            if (has_z) throw ConfigError(source + ": duplicate column 'z'");
            has_z = true;
            layout.push_back({ColumnRole::treatment, 0});
        } else if (h.size() > 1 && h[0] == 'y' && h.find_first_not_of("0123456789", 1) == std::string::npos) {
            const Index k = std::stol(h.substr(1));
            if (k < 1 || outcome_pos.count(k)) throw ConfigError(source + ": bad or duplicate outcome column '" + h + "'");
            outcome_pos[k] = static_cast<Index>(c);
            layout.push_back({ColumnRole::outcome, k - 1});
        } else if (h.rfind("c_", 0) == 0 && h.find(':') != std::string::npos) {
            const auto colon = h.rfind(':');
            const std::string name = h.substr(2, colon - 2);
            if (name.empty() || cov_names.count(name))
                throw ConfigError(source + ": bad or duplicate covariate column '" + h + "'");
            covs.push_back({name, parse_covariate_kind(h.substr(colon + 1))});
            cov_names.insert(name);
            layout.push_back({ColumnRole::covariate, static_cast<Index>(covs.size()) - 1});
        } else {
            throw ConfigError(source + ": unexpected column '" + h + "'");
        }
    }
    if (!has_z) throw ConfigError(source + ": missing treatment column 'z'");
    const auto J = static_cast<Index>(outcome_pos.size());
    if (J == 0) throw ConfigError(source + ": no outcome columns y1..yJ");
    if (outcome_pos.rbegin()->first != J) throw ConfigError(source + ": outcome columns must be y1..y" + std::to_string(J));

    std::vector<std::vector<double>> rows;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ConfigError(source + ": line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
                throw ConfigError(source + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                                  "': non-numeric value '" + cell + "'");
            values[c] = v;
        }
        rows.push_back(std::move(values));
    }

    TrialDataset d;
    const auto n = static_cast<Index>(rows.size());
    d.outcomes.resize(n, J);
    d.treatment.resize(n);
    d.covariates.resize(n, static_cast<Index>(covs.size()));
    d.columns = covs;
    for (Index i = 0; i < n; ++i)
        for (std::size_t c = 0; c < layout.size(); ++c) {
            const double v = rows[static_cast<std::size_t>(i)][c];
            switch (layout[c].role) {
                case ColumnRole::outcome: d.outcomes(i, layout[c].index) = v; break;
                case ColumnRole::treatment: d.treatment(i) = v; break;
                case ColumnRole::covariate: d.covariates(i, layout[c].index) = v; break;
            }
        }
    try {
        d.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return d;
}

TrialDataset load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
    return read_dataset_csv(in, path.string());
}

void write_dataset_csv(const TrialDataset& data, std::ostream& out) {
    data.validate();
    for (Index j = 0; j < data.J(); ++j) out << "y" << (j + 1) << ",";
    out << "z";
    for (const auto& c : data.columns) out << ",c_" << c.name << ":" << to_string(c.kind);
    out << "\n";
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.J(); ++j) out << format_double(data.outcomes(i, j)) << ",";
        out << format_double(data.treatment(i));
        for (Index c = 0; c < data.L(); ++c) out << "," << format_double(data.covariates(i, c));
        out << "\n";
    }
}

void save_dataset(const TrialDataset& data, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset '" + path.string() + "'");
    write_dataset_csv(data, out);
    if (!out) throw Error("error while writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

Json delta_to_json(double d) {
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    return d;
}

double delta_from_json(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("region: threshold '" + s + "' is not a number");
    }
    return j.get<double>();
}

Index endpoint_from_json(const Json& j, const std::string& where) {
    const auto k = j.get<Index>();
    if (k < 1) throw ConfigError(where + ": endpoints are numbered from 1");
    return k - 1;
}

template <typename F>
auto guarded(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

Json region_to_json(const SuccessRegion& region) {
    if (region.kind() == SuccessRegion::Kind::event) {
        const Event& e = region.event();
        return {{"endpoint", e.endpoint + 1},
                {"op", std::string(to_string(e.direction))},
                {"delta", delta_to_json(e.delta)}};
    }
    Json children = Json::array();
    for (const auto& c : region.children()) children.push_back(region_to_json(c));
    return {{region.kind() == SuccessRegion::Kind::all ? "all" : "any", children}};
}

SuccessRegion region_from_json(const Json& j) {
    return guarded("region", [&] {
        if (!j.is_object()) throw ConfigError("region: expected an object");
        if (j.contains("all") || j.contains("any")) {
            if (j.size() != 1) throw ConfigError("region: an all/any node takes exactly one key");
            const bool all = j.contains("all");
            const Json& list = all ? j.at("all") : j.at("any");
            if (!list.is_array() || list.empty()) throw ConfigError("region: all/any needs a nonempty list");
            std::vector<SuccessRegion> children;
            for (const auto& c : list) children.push_back(region_from_json(c));
            return all ? SuccessRegion::all(std::move(children)) : SuccessRegion::any(std::move(children));
        }
        check_keys(j, {"endpoint", "op", "delta"}, "region leaf");
        return SuccessRegion::leaf(endpoint_from_json(j.at("endpoint"), "region"),
                                   parse_direction(j.at("op").get<std::string>()),
                                   j.contains("delta") ? delta_from_json(j.at("delta")) : 0.0);
    });
}

Json chain_to_json(const CovariateChainSpec& chain) {
    Json list = Json::array();
    for (const auto& c : chain.conditionals)
        list.push_back({{"target", c.target}, {"predictors", c.predictors}, {"family", to_string(c.family)}});
    return {{"hyper", {{"shape", chain.hyper.shape}, {"rate", chain.hyper.rate}}}, {"conditionals", list}};
}

CovariateChainSpec chain_from_json(const Json& j) {
    return guarded("covariate_chain", [&] {
        check_keys(j, {"hyper", "conditionals"}, "covariate_chain");
        CovariateChainSpec chain;
        if (j.contains("hyper")) {
            check_keys(j.at("hyper"), {"shape", "rate"}, "covariate_chain.hyper");
            chain.hyper.shape = j.at("hyper").value("shape", chain.hyper.shape);
            chain.hyper.rate = j.at("hyper").value("rate", chain.hyper.rate);
        }
        for (const auto& c : j.value("conditionals", Json::array())) {
            check_keys(c, {"target", "predictors", "family"}, "covariate_chain entry");
            chain.conditionals.push_back({c.at("target").get<std::string>(),
                                          c.value("predictors", std::vector<std::string>{}),
                                          parse_covariate_family(c.at("family").get<std::string>())});
        }
        chain.validate();
        return chain;
    });
}

CovariateChainSpec default_chain(const ModelSpec& model, const TrialDataset& data) {
    CovariateChainSpec chain;
    const auto used = model.used_covariates();
    for (const auto& name : used)
        if (data.column_index(name) < 0) throw ConfigError("model covariate '" + name + "' is not in the dataset");
    for (const auto& col : data.columns) {
        if (std::find(used.begin(), used.end(), col.name) == used.end()) continue;
        const CovariateFamily family = col.kind == CovariateKind::binary ? CovariateFamily::bernoulli_logit
                                       : col.kind == CovariateKind::count ? CovariateFamily::poisson_log
                                                                          : CovariateFamily::gaussian_identity;
        chain.conditionals.push_back({col.name, {}, family});
    }
    return chain;
}

namespace {

ModelSpec model_from_json(const Json& j) {
    check_keys(j, {"endpoints"}, "model");
    ModelSpec m;
    for (const auto& e : j.at("endpoints")) {
        check_keys(e, {"covariates", "intercept", "direction", "delta"}, "model endpoint");
        EndpointSpec ep;
        ep.covariates = e.value("covariates", std::vector<std::string>{});
        ep.intercept = e.value("intercept", true);
        ep.direction = parse_direction(e.value("direction", std::string(">")));
        ep.delta = e.value("delta", 0.0);
        m.endpoints.push_back(std::move(ep));
    }
    if (m.endpoints.empty()) throw ConfigError("model: at least one endpoint required");
    return m;
}

Json model_to_json(const ModelSpec& m) {
    Json list = Json::array();
    for (const auto& e : m.endpoints)
        list.push_back({{"covariates", e.covariates},
                        {"intercept", e.intercept},
                        {"direction", std::string(to_string(e.direction))},
                        {"delta", e.delta}});
    return {{"endpoints", list}};
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.is_absolute() || base.empty()) return p;
    return fs::weakly_canonical(base / p);
}

}  // namespace

RunConfig parse_run_config(const Json& root, const fs::path& base_dir) {
    if (root.is_object() && root.contains("config")) return parse_run_config(root.at("config"), base_dir);
    return guarded("config", [&] {
        check_keys(root,
                   {"data", "model", "region", "pos", "validation", "power", "covariate_chain", "curve", "output"},
                   "config");
        RunConfig c;
        const Json& data = root.at("data");
        check_keys(data, {"historical", "older_historical"}, "data");
        c.historical = resolve(data.at("historical").get<std::string>(), base_dir);
        if (data.contains("older_historical") && !data.at("older_historical").is_null())
            c.older_historical = resolve(data.at("older_historical").get<std::string>(), base_dir);
        c.model = model_from_json(root.at("model"));
        c.region = region_from_json(root.at("region"));

        if (root.contains("pos")) {
            const Json& p = root.at("pos");
            check_keys(p, {"n", "gamma", "q_rand", "inner_draws", "replicates", "inner_burn_in", "seed", "comparator",
                           "threads"},
                       "pos");
            c.pos.n = p.value("n", c.pos.n);
            c.pos.gamma = p.value("gamma", c.pos.gamma);
            c.pos.q_rand = p.value("q_rand", c.pos.q_rand);
            c.pos.inner_draws = p.value("inner_draws", c.pos.inner_draws);
            c.pos.replicates = p.value("replicates", c.pos.replicates);
            c.pos.inner_burn_in = p.value("inner_burn_in", c.pos.inner_burn_in);
            c.pos.seed = p.value("seed", c.pos.seed);
            c.pos.comparator = p.value("comparator", c.pos.comparator);
            c.pos.threads = p.value("threads", c.pos.threads);
        }
        if (root.contains("power")) {
            const Json& p = root.at("power");
            check_keys(p, {"a0", "b01", "b02"}, "power");
            c.pos.a0 = p.value("a0", c.pos.a0);
            c.b01 = p.value("b01", c.b01);
            c.b02 = p.value("b02", c.b02);
        }
        if (!(c.b01 >= 0.0 && c.b01 <= 1.0 && c.b02 >= 0.0 && c.b02 <= 1.0))
            throw ConfigError("power: b01 and b02 must lie in [0,1]");
        if (root.contains("validation")) {
            const Json& v = root.at("validation");
            check_keys(v, {"mode", "null_endpoints", "null_values", "alternative", "hpd", "burn_in", "thin"},
                       "validation");
            c.validation.mode = parse_validation_mode(v.value("mode", std::string("unconstrained")));
            for (const auto& e : v.value("null_endpoints", Json::array()))
                c.validation.null_endpoints.push_back(endpoint_from_json(e, "validation"));
            c.validation.null_values = v.value("null_values", std::vector<double>(c.validation.null_endpoints.size(), 0.0));
            if (v.contains("alternative") && !v.at("alternative").is_null())
                c.validation.alternative = region_from_json(v.at("alternative"));
            if (v.contains("hpd") && !v.at("hpd").is_null()) {
                const Json& h = v.at("hpd");
                check_keys(h, {"method", "q", "bandwidth_scale"}, "validation.hpd");
                HpdSpec hs;
                hs.method = parse_hpd_method(h.value("method", std::string("log-posterior")));
                hs.q_hpd = h.at("q").get<double>();
                hs.bandwidth_scale = h.value("bandwidth_scale", 1.0);
                c.validation.hpd = hs;
            }
            c.validation.burn_in = v.value("burn_in", c.validation.burn_in);
            c.validation.thin = v.value("thin", c.validation.thin);
        }
        if (root.contains("covariate_chain") && !root.at("covariate_chain").is_null())
            c.chain = chain_from_json(root.at("covariate_chain"));
        if (root.contains("curve")) {
            check_keys(root.at("curve"), {"n_grid"}, "curve");
            c.n_grid = root.at("curve").value("n_grid", std::vector<Index>{});
        }
        if (root.contains("output")) {
            const Json& o = root.at("output");
            check_keys(o, {"path", "format"}, "output");
            if (o.contains("path") && !o.at("path").is_null())
                c.output = resolve(o.at("path").get<std::string>(), base_dir);
            c.format = o.value("format", c.format);
        }
        if (c.format != "json" && c.format != "csv") throw ConfigError("output.format must be json or csv");
        c.pos.validate();
        c.region.validate(c.model.J());
        c.validation.validate(c.model.J());
        return c;
    });
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j, fs::absolute(path).parent_path());
}

Json to_json(const RunConfig& c) {
    Json j;
    j["data"] = {{"historical", fs::absolute(c.historical).string()},
                 {"older_historical", c.older_historical ? Json(fs::absolute(*c.older_historical).string()) : Json()}};
    j["model"] = model_to_json(c.model);
    j["region"] = region_to_json(c.region);
    j["pos"] = {{"n", c.pos.n},
                {"gamma", c.pos.gamma},
                {"q_rand", c.pos.q_rand},
                {"inner_draws", c.pos.inner_draws},
                {"replicates", c.pos.replicates},
                {"inner_burn_in", c.pos.inner_burn_in},
                {"seed", c.pos.seed},
                {"comparator", c.pos.comparator},
                {"threads", c.pos.threads}};
    j["power"] = {{"a0", c.pos.a0}, {"b01", c.b01}, {"b02", c.b02}};
    Json v = {{"mode", to_string(c.validation.mode)},
              {"burn_in", c.validation.burn_in},
              {"thin", c.validation.thin}};
    Json ends = Json::array();
    for (Index e : c.validation.null_endpoints) ends.push_back(e + 1);
    v["null_endpoints"] = ends;
    v["null_values"] = c.validation.null_values;
    v["alternative"] = c.validation.alternative ? region_to_json(*c.validation.alternative) : Json();
    v["hpd"] = c.validation.hpd ? Json{{"method", to_string(c.validation.hpd->method)},
                                        {"q", c.validation.hpd->q_hpd},
                                        {"bandwidth_scale", c.validation.hpd->bandwidth_scale}}
                                : Json();
    j["validation"] = v;
    j["covariate_chain"] = c.chain ? chain_to_json(*c.chain) : Json();
    if (!c.n_grid.empty()) j["curve"] = {{"n_grid", c.n_grid}};
    j["output"] = {{"path", c.output ? Json(c.output->string()) : Json()}, {"format", c.format}};
    return j;
}

PosInputs resolve_inputs(const RunConfig& c) {
    PosInputs in;
    in.model = c.model;
    in.region = c.region;
    in.validation_history = load_dataset(c.historical);
    if (c.older_historical) in.fitting_history = load_dataset(*c.older_historical);
    const CovariateChainSpec chain = c.chain ? *c.chain : default_chain(c.model, in.validation_history);
    std::vector<WeightedHistory> histories{{&in.validation_history, c.b02}};
    if (in.fitting_history) histories.push_back({&*in.fitting_history, c.b01});
    in.covariates = fit_covariate_chain(histories, chain);
    return in;
}

Json report_to_json(const PosReport& r) {
    Json subsets = Json::array();
    for (std::size_t m = 1; m < r.subset_pos.size(); ++m) {
        Json members = Json::array();
        for (std::size_t k = 0; (std::size_t{1} << k) <= m; ++k)
            if (m & (std::size_t{1} << k)) members.push_back(k + 1);
        subsets.push_back({{"clauses", members}, {"pos", r.subset_pos[m]}});
    }
    return {{"n", r.n},
            {"gamma", r.gamma},
            {"replicates", r.replicates},
            {"inner_draws", r.inner_draws},
            {"pos_unadjusted", r.pos_unadjusted},
            {"pos_adjusted", r.pos_adjusted},
            {"mc_se", r.mc_se},
            {"mc_se_adjusted", r.mc_se_adjusted},
            {"clauses", r.clauses},
            {"subset_pos", subsets},
            {"mean_posterior_probability", r.mean_posterior_probability},
            {"comparator_rate", r.comparator_rate ? Json(*r.comparator_rate) : Json()},
            {"comparator_se", r.comparator_se ? Json(*r.comparator_se) : Json()},
            {"validation_acceptance", r.validation_acceptance}};
}

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    bool study = false;
    for (const auto& r : rows) study = study || !r.scenario.empty();
    out << "n,region,a0,b01,b02,pos_unadjusted,pos_adjusted,mc_se,comparator_rate";
    if (study) out << ",scenario,correlation";
    out << "\n";
    for (const auto& r : rows) {
        out << r.n << ",\"" << r.region << "\"," << format_double(r.a0) << "," << format_double(r.b01) << ","
            << format_double(r.b02) << "," << format_double(r.pos_unadjusted) << ","
            << format_double(r.pos_adjusted) << "," << format_double(r.mc_se) << ","
            << (r.comparator_rate ? format_double(*r.comparator_rate) : "");
        if (study) out << "," << r.scenario << "," << r.correlation;
        out << "\n";
    }
}

namespace {

ReportRow row_from(const Json& report, const std::string& region, double a0, double b01, double b02) {
    ReportRow r;
    r.n = report.at("n").get<Index>();
    r.region = region;
    r.a0 = a0;
    r.b01 = b01;
    r.b02 = b02;
    r.pos_unadjusted = report.at("pos_unadjusted").get<double>();
    r.pos_adjusted = report.at("pos_adjusted").get<double>();
    r.mc_se = report.at("mc_se").get<double>();
    if (report.contains("comparator_rate") && !report.at("comparator_rate").is_null())
        r.comparator_rate = report.at("comparator_rate").get<double>();
    return r;
}

}  // namespace

std::vector<ReportRow> rows_from_json(const Json& doc) {
    return guarded("report document", [&] {
        const std::string kind = doc.at("kind").get<std::string>();
        std::vector<ReportRow> rows;
        if (kind == "study-table") {
            for (const auto& entry : doc.at("entries")) {
                auto part = rows_from_json(entry);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            return rows;
        }
        if (kind == "study") {
            const StudySpec s = study_spec_from_json(doc.at("study"));
            ReportRow r = row_from(doc.at("report"), to_string(s.region), 0.0, 0.0, 1.0);
            r.scenario = to_string(s.scenario);
            r.correlation = to_string(s.correlation);
            rows.push_back(r);
            return rows;
        }
        const Json& cfg = doc.at("config");
        const std::string region = region_from_json(cfg.at("region")).describe();
        const double a0 = cfg.at("power").at("a0").get<double>();
        const double b01 = cfg.at("power").at("b01").get<double>();
        const double b02 = cfg.at("power").at("b02").get<double>();
        if (kind == "pos") {
            rows.push_back(row_from(doc.at("report"), region, a0, b01, b02));
        } else if (kind == "curve") {
            for (const auto& rep : doc.at("curve")) rows.push_back(row_from(rep, region, a0, b01, b02));
        } else {
            throw ConfigError("unknown document kind '" + kind + "'");
        }
        return rows;
    });
}

namespace {

// Embedded configs drop the output path so that re-running a report never
// overwrites it.
Json embedded_config(RunConfig c) {
    c.output.reset();
    return to_json(c);
}

}  // namespace

Json pos_document(const RunConfig& config, const PosReport& report) {
    return {{"kind", "pos"}, {"config", embedded_config(config)}, {"report", report_to_json(report)}};
}

Json curve_document(const RunConfig& config, const std::vector<PosReport>& reports) {
    RunConfig c = config;
    c.n_grid.clear();
    for (const auto& r : reports) c.n_grid.push_back(r.n);
    Json list = Json::array();
    for (const auto& r : reports) list.push_back(report_to_json(r));
    return {{"kind", "curve"}, {"config", embedded_config(c)}, {"curve", list}};
}

Json study_document(const StudySpec& s, const PosReport& report) {
    Json spec = {{"scenario", to_string(s.scenario)},
                 {"region", to_string(s.region)},
                 {"correlation", to_string(s.correlation)},
                 {"n", s.n},
                 {"historical_n", s.historical_n},
                 {"replicates", s.replicates},
                 {"inner_draws", s.inner_draws},
                 {"gamma", s.gamma},
                 {"seed", s.seed},
                 {"threads", s.threads}};
    return {{"kind", "study"}, {"study", spec}, {"report", report_to_json(report)}};
}

Json study_table_document(const std::vector<Json>& entries) {
    return {{"kind", "study-table"}, {"entries", entries}};
}

StudySpec study_spec_from_json(const Json& j) {
    return guarded("study", [&] {
        check_keys(j, {"scenario", "region", "correlation", "n", "historical_n", "replicates", "inner_draws", "gamma",
                       "seed", "threads"},
                   "study");
        StudySpec s;
        s.scenario = parse_scenario(j.value("scenario", std::string("fwer")));
        s.region = parse_study_region(j.value("region", std::string("one-of-two")));
        s.correlation = parse_correlation(j.value("correlation", std::string("ind")));
        s.n = j.value("n", s.n);
        s.historical_n = j.value("historical_n", s.historical_n);
        s.replicates = j.value("replicates", s.replicates);
        s.inner_draws = j.value("inner_draws", s.inner_draws);
        s.gamma = j.value("gamma", s.gamma);
        s.seed = j.value("seed", s.seed);
        s.threads = j.value("threads", s.threads);
        return s;
    });
}

void emit_document(const Json& doc, std::ostream& out, const std::string& format) {
    if (format == "json") {
        out << doc.dump(2) << "\n";
    } else if (format == "csv") {
        write_report_csv(rows_from_json(doc), out);
    } else {
        throw ConfigError("unknown output format '" + format + "'");
    }
}

void emit_document(const Json& doc, const fs::path& path, const std::string& format) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report '" + path.string() + "'");
    emit_document(doc, out, format);
    if (!out) throw Error("error while writing '" + path.string() + "'");
}

}  // namespace possur
