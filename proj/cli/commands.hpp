#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mqsim/material.hpp"
#include "output.hpp"

namespace mqsim::cli {

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_verification = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_numeric = 3;

struct Common {
    std::optional<std::string> config;  // material file; built-in congruent LiNbO3 when absent
    std::optional<std::string> out;
    std::uint64_t seed = 1;
    Format format = Format::csv;
};

struct DispersionArgs {
    double w_min_um = 2.0;
    double w_max_um = 8.0;
    double w_step_um = 0.1;
    double lambda_um = 0.812;
    std::string pol = "TM";
    double w1_um = 5.6;  // two-mode width whose odd mode is phase matched
};

struct EvolutionArgs {
    std::optional<std::string> device;
    std::string input = "tm-even";
    int points = 201;
};

struct RotatorArgs {
    std::optional<std::string> rotator;
    int points = 50;
    bool solver_index = false;
};

struct CnotArgs {
    std::optional<std::string> circuit;
};

struct PlanArgs {
    std::optional<std::string> plan;
};

// Each returns an exit code; library exceptions propagate to main.
int run_dispersion(const Common& c, const std::string& cmdline, const DispersionArgs& a);
int run_coupler_evolution(const Common& c, const std::string& cmdline, const EvolutionArgs& a);
int run_rotator_curve(const Common& c, const std::string& cmdline, const RotatorArgs& a);
int run_cnot_verify(const Common& c, const std::string& cmdline, const CnotArgs& a);
int run_phase_plan(const Common& c, const std::string& cmdline, const PlanArgs& a);
int run_selftest(const Common& c, const std::string& cmdline);

}  // namespace mqsim::cli
