#pragma once

// Operating characteristics on the compass-like template: FWER under
// null-boundary validation and BCEP under alternative validation, for the
// adjusted and unadjusted Bayesian rules and the Holm comparator.

#include <cstdint>
#include <string>
#include <string_view>

#include "possur/pos_engine.hpp"
#include "possur/templates.hpp"

namespace possur {

enum class Scenario { fwer, bcep };
/// one_of_two: b1 > 0 or b2 > 0. primary_plus_one: b1 > 0 and (b2 > 0 or b3 > 0).
enum class StudyRegion { one_of_two, primary_plus_one };

std::string to_string(Scenario s);
Scenario parse_scenario(std::string_view text);
std::string to_string(StudyRegion r);
StudyRegion parse_study_region(std::string_view text);

SuccessRegion study_region(StudyRegion r);

struct StudySpec {
    Scenario scenario = Scenario::fwer;
    StudyRegion region = StudyRegion::one_of_two;
    Correlation correlation = Correlation::ind;
    Index n = 300;
    Index historical_n = 981;
    Index replicates = 1000;
    Index inner_draws = 1000;
    double gamma = 0.95;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// Synthesized historical data, covariate fit (b0 = 1), model and region.
PosInputs study_inputs(const StudySpec& spec);
ValidationSpec study_validation(const StudySpec& spec);
PosConfig study_config(const StudySpec& spec);

PosReport run_study(const StudySpec& spec);

}  // namespace possur
