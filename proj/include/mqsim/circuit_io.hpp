#pragma once

// JSON readers and writers for device specs, phase plans and circuits.
// Lengths are in mm, widths and gaps in um, propagation constants in rad/m.
// Unknown keys are a ConfigError so typos do not silently fall back to defaults.

#include <array>
#include <optional>
#include <string>

#include "json.hpp"
#include "mqsim/devices.hpp"

namespace mqsim {

Imperfection imperfection_from_json(const nlohmann::json& j);
ModeAnalyzerSpec analyzer_from_json(const nlohmann::json& j, ModeAnalyzerSpec base = {});
TwoModeCouplerSpec coupler_from_json(const nlohmann::json& j, TwoModeCouplerSpec base = {});
ModeRotatorSpec rotator_spec_from_json(const nlohmann::json& j, ModeRotatorSpec base = {});
PhasePlan plan_from_json(const nlohmann::json& j, PhasePlan base = {});
LengthBounds bounds_from_json(const nlohmann::json& j);
CnotDesignOptions design_options_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModeAnalyzerSpec& s);
nlohmann::json to_json(const TwoModeCouplerSpec& s);
nlohmann::json to_json(const ModeRotatorSpec& s);
nlohmann::json to_json(const PhasePlan& p);

// Rotator as the CLI reads it: the spec plus optional n_index / r_pm_per_V overrides.
struct RotatorInput {
    ModeRotatorSpec spec;
    std::optional<double> n_index;
    std::optional<double> r_pm_per_V;
    Imperfection error;
};
RotatorInput rotator_from_json(const nlohmann::json& j);

// Device for coupler-evolution: a two-mode coupler or an analyzer.
struct DeviceInput {
    enum class Kind { tmw_coupler, analyzer } kind = Kind::tmw_coupler;
    TwoModeCouplerSpec coupler;
    bool tune = false;          // move the coupler to its crossing voltage and length first
    ModeAnalyzerSpec analyzer;
    bool design = false;        // phase-match the analyzer SMW first
    double lambda_um = 0.812;
};
DeviceInput device_from_json(const nlohmann::json& j);

// Circuit for cnot-verify. Either designed from the solver or given as an explicit plan.
struct CircuitInput {
    std::optional<CnotDesignOptions> design;
    std::optional<PhasePlan> plan;
    bool solve_lengths = true;  // run phase_equalize on the explicit plan
    LengthBounds bounds;
    PhaseConvention convention = PhaseConvention::physical;
    std::optional<std::array<double, 3>> lengths_mm;  // override l1, l2, l3 after solving
    std::array<double, 4> phase_errors_rad{};
    bool ideal = false;
};
CircuitInput circuit_from_json(const nlohmann::json& j);

// Phase-plan inputs for the phase-plan command.
struct PlanInput {
    PhasePlan plan;
    LengthBounds bounds;
    PhaseConvention convention = PhaseConvention::physical;
};
PlanInput plan_input_from_json(const nlohmann::json& j);

// Reads and parses a JSON file; ConfigError on I/O or syntax errors. `text` receives the raw bytes.
nlohmann::json read_json_file(const std::string& path, std::string* text = nullptr);

}  // namespace mqsim
