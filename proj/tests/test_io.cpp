#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "possur/error.hpp"
#include "possur/io.hpp"
#include "possur/templates.hpp"
#include "support.hpp"

using namespace possur;
namespace fs = std::filesystem;

namespace {

TrialDataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_dataset_csv(in, "test.csv");
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "possur_io_test";
    fs::create_directories(dir);
    return dir;
}

Json minimal_config(const fs::path& data) {
    return Json{{"data", {{"historical", data.string()}}},
                {"model", {{"endpoints", Json::array({Json{{"intercept", true}}, Json{{"intercept", true}},
                                                      Json{{"intercept", true}}})}}},
                {"region", {{"any", Json::array({Json{{"endpoint", 1}, {"op", ">"}, {"delta", 0.0}},
                                                 Json{{"endpoint", 2}, {"op", ">"}, {"delta", 0.0}}})}}},
                {"pos", {{"n", 40}, {"inner_draws", 50}, {"replicates", 20}, {"seed", 3}, {"threads", 1}}}};
}

}  // namespace

TEST_CASE("dataset CSV parsing") {
    SUBCASE("two rows, one covariate") {
        const TrialDataset d = parse("y1,y2,z,c_age:continuous\n1.5,2,1,40\n-0.5,3.25,0,51\n");
        CHECK(d.n() == 2);
        CHECK(d.J() == 2);
        CHECK(d.L() == 1);
        CHECK(d.outcomes(1, 1) == 3.25);
        CHECK(d.treatment(0) == 1.0);
        CHECK(d.columns[0].name == "age");
        CHECK(d.columns[0].kind == CovariateKind::continuous);
    }
    SUBCASE("invalid treatment names the row") {
        CHECK_THROWS_WITH(parse("y1,z\n1,0\n2,2\n"), doctest::Contains("row"));
    }
    SUBCASE("ragged line gives coordinates") {
        CHECK_THROWS_WITH(parse("y1,z\n1,0\n2\n"), doctest::Contains("line 3: expected 2 fields, found 1"));
    }
    SUBCASE("non-numeric cell gives line and column") {
        CHECK_THROWS_WITH(parse("y1,z\n1,0\nabc,1\n"), doctest::Contains("line 3, column 'y1'"));
    }
    SUBCASE("header errors") {
        CHECK_THROWS_WITH(parse("y1,c_a:continuous\n1,2\n"), doctest::Contains("missing treatment column"));
        CHECK_THROWS_WITH(parse("y1,z,w\n1,0,2\n"), doctest::Contains("unexpected column 'w'"));
        CHECK_THROWS_WITH(parse("y1,y3,z\n1,0,1\n"), doctest::Contains("y1..y2"));
        CHECK_THROWS_AS(parse("y1,z,c_s:binary\n1,0,0.5\n"), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH(load_dataset("/nonexistent/none.csv"), doctest::Contains("cannot open dataset"));
    }
}

TEST_CASE("dataset round trip is bit-identical") {
    const TrialDataset d = synthesize(compass_like(Correlation::HP), 200, 4);
    std::ostringstream out;
    write_dataset_csv(d, out);
    const TrialDataset back = parse(out.str());
    CHECK(back.outcomes == d.outcomes);
    CHECK(back.treatment == d.treatment);
    CHECK(back.covariates == d.covariates);
    REQUIRE(back.columns.size() == d.columns.size());
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
        CHECK(back.columns[c].name == d.columns[c].name);
        CHECK(back.columns[c].kind == d.columns[c].kind);
    }
    std::ostringstream again;
    write_dataset_csv(back, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("region JSON") {
    const Json j = {{"all", Json::array({Json{{"endpoint", 1}, {"op", ">"}, {"delta", "-inf"}},
                                         Json{{"any", Json::array({Json{{"endpoint", 2}, {"op", "<"}, {"delta", 0.5}},
                                                                   Json{{"endpoint", 3}, {"op", ">"}, {"delta", 0}}})}}})}};
    const SuccessRegion r = region_from_json(j);
    CHECK(r.contains(Eigen::Vector3d(-1e300, 0.0, -1.0)));
    CHECK_FALSE(r.contains(Eigen::Vector3d(0.0, 1.0, -1.0)));
    CHECK(region_from_json(region_to_json(r)).contains(Eigen::Vector3d(-5.0, 1.0, 1.0)));
    CHECK(region_to_json(region_from_json(region_to_json(r))) == region_to_json(r));
    CHECK_THROWS_AS(region_from_json(Json{{"endpoint", 1}, {"op", ">="}, {"delta", 0}}), ConfigError);
    CHECK_THROWS_AS(region_from_json(Json{{"endpoint", 1}, {"op", ">"}, {"delta", 0}, {"extra", 1}}), ConfigError);
}

TEST_CASE("run config") {
    const fs::path dir = scratch_dir();
    const fs::path data = dir / "hist.csv";
    save_dataset(synthesize(compass_like(), 120, 2), data);
    Json j = minimal_config(data);
    j["model"]["endpoints"][0]["covariates"] = {"age"};

    SUBCASE("defaults and round trip") {
        const RunConfig c = parse_run_config(j);
        CHECK(c.pos.n == 40);
        CHECK(c.pos.gamma == 0.95);
        CHECK(c.b02 == 1.0);
        const Json resolved = to_json(c);
        CHECK(to_json(parse_run_config(resolved)) == resolved);
    }
    SUBCASE("unknown keys are rejected") {
        j["pos"]["replicate"] = 10;
        CHECK_THROWS_WITH_AS(parse_run_config(j), doctest::Contains("replicate"), ConfigError);
    }
    SUBCASE("wrong types become config errors") {
        j["pos"]["n"] = "many";
        CHECK_THROWS_AS(parse_run_config(j), ConfigError);
    }
    SUBCASE("relative paths resolve against the config directory") {
        j["data"]["historical"] = "hist.csv";
        CHECK(parse_run_config(j, dir).historical == data);
    }
    SUBCASE("resolved inputs fit a default chain for the used covariates") {
        const PosInputs in = resolve_inputs(parse_run_config(j));
        REQUIRE(in.covariates.L() == 1);
        CHECK(in.covariates.conditionals[0].spec.target == "age");
        CHECK(in.covariates.conditionals[0].spec.family == CovariateFamily::gaussian_identity);
    }
    SUBCASE("a model covariate missing from the data is named") {
        j["model"]["endpoints"][1]["covariates"] = {"bmi"};
        CHECK_THROWS_WITH_AS(resolve_inputs(parse_run_config(j)), doctest::Contains("'bmi'"), ConfigError);
    }
}

TEST_CASE("report output") {
    SUBCASE("empty curve gives a header-only CSV") {
        std::ostringstream out;
        write_report_csv({}, out);
        CHECK(out.str() == "n,region,a0,b01,b02,pos_unadjusted,pos_adjusted,mc_se,comparator_rate\n");
    }
    SUBCASE("one report gives one row") {
        PosReport r;
        r.n = 300;
        r.gamma = 0.95;
        r.replicates = 100;
        r.inner_draws = 100;
        r.pos_unadjusted = 0.25;
        r.pos_adjusted = 0.2;
        r.mc_se = std::sqrt(0.25 * 0.75 / 100);
        r.clauses = {"b1 > 0"};
        r.subset_pos = {0.0, 0.25};
        RunConfig c;
        c.historical = "/tmp/h.csv";
        c.model.endpoints.push_back({});
        c.region = SuccessRegion::leaf(0, Direction::greater, 0.0);
        const Json doc = pos_document(c, r);
        const auto rows = rows_from_json(doc);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].n == 300);
        CHECK(rows[0].pos_unadjusted == 0.25);
        CHECK(rows[0].pos_adjusted == 0.2);
        CHECK(rows[0].pos_adjusted >= 0.0);
        CHECK(rows[0].pos_adjusted <= 1.0);
        CHECK_FALSE(rows[0].comparator_rate);
        std::ostringstream out;
        emit_document(doc, out, "csv");
        const std::string text = out.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
        CHECK(text.find("300,") != std::string::npos);
    }
    SUBCASE("unwritable output path") {
        CHECK_THROWS_WITH(emit_document(Json{{"kind", "pos"}}, "/nonexistent/dir/out.json", "json"),
                          doctest::Contains("cannot write report"));
    }
    SUBCASE("unknown format") {
        std::ostringstream out;
        CHECK_THROWS_AS(emit_document(Json{{"kind", "pos"}}, out, "xml"), ConfigError);
    }
}

TEST_CASE("emitted reports re-run bit-identically") {
    const fs::path dir = scratch_dir();
    const fs::path data = dir / "rerun.csv";
    save_dataset(synthesize(compass_like(), 120, 3), data);
    const RunConfig c = parse_run_config(minimal_config(data));
    const Json first = pos_document(c, pos_estimate(resolve_inputs(c), c.validation, c.pos));
    const fs::path out = dir / "first.json";
    emit_document(first, out, "json");

    const RunConfig again = load_run_config(out);
    const Json second = pos_document(again, pos_estimate(resolve_inputs(again), again.validation, again.pos));
    CHECK(second.dump() == first.dump());
}
