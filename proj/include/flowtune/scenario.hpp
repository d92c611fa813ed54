#pragma once

#include <optional>
#include <string>

#include "flowtune/netsim.hpp"
#include "flowtune/types.hpp"

namespace flowtune {

// A scenario file is a JSON document describing the simulated link (with its
// load timeline) plus, depending on the command, a transfer request to tune
// and/or a measurement design for log generation. See README for the schema.
struct Scenario {
    SimConfig sim;
    std::optional<TransferRequest> request;
    std::optional<LogDesign> design;
};

Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::string& path);

} // namespace flowtune
