// mqsim: modal-qubit circuit simulator, command-line front end.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "mqsim/errors.hpp"

using namespace mqsim;
using namespace mqsim::cli;

namespace {

// The command as typed, minus --out, so output files do not depend on where they are written.
std::string recorded_command(int argc, char** argv)
{
    std::string s = "mqsim";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0) continue;
        s += " " + a;
    }
    return s;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Modal-qubit circuit simulator for Ti:LiNbO3 waveguides"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    std::string format = "csv";
    app.add_option("--config", common.config, "Material config file (INI); built-in congruent LiNbO3 if omitted")
        ->check(CLI::ExistingFile);
    app.add_option("--out", common.out, "Output directory; stdout if omitted");
    app.add_option("--seed", common.seed, "Random seed for property suites");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    DispersionArgs disp;
    auto* c_disp = app.add_subcommand("dispersion", "n_eff and beta of the even and odd modes against width");
    c_disp->add_option("--w-min", disp.w_min_um, "Smallest width (um)");
    c_disp->add_option("--w-max", disp.w_max_um, "Largest width (um)");
    c_disp->add_option("--w-step", disp.w_step_um, "Width step (um)");
    c_disp->add_option("--lambda", disp.lambda_um, "Wavelength (um)");
    c_disp->add_option("--pol", disp.pol, "TE or TM");
    c_disp->add_option("--w1", disp.w1_um, "Two-mode width whose odd mode is phase matched (um)");

    EvolutionArgs evo;
    auto* c_evo = app.add_subcommand("coupler-evolution", "Mode amplitudes along a coupler");
    c_evo->add_option("--device", evo.device, "Device spec (JSON); tuned two-mode coupler if omitted")
        ->check(CLI::ExistingFile);
    c_evo->add_option("--input", evo.input, "tm-even, tm-odd, te-even or te-odd");
    c_evo->add_option("--points", evo.points, "Number of z samples");

    RotatorArgs rot;
    auto* c_rot = app.add_subcommand("rotator-curve", "Rotator voltages against rotation angle");
    c_rot->add_option("--rotator", rot.rotator, "Rotator spec (JSON)")->check(CLI::ExistingFile);
    c_rot->add_option("--points", rot.points, "Number of angles in [0, pi]");
    c_rot->add_flag("--solver-index", rot.solver_index, "Take n from the SMW even mode instead of 2.2");

    CnotArgs cnot;
    auto* c_cnot = app.add_subcommand("cnot-verify", "Truth table, fidelity and concurrence of a CNOT circuit");
    c_cnot->add_option("--circuit", cnot.circuit, "Circuit spec (JSON); designed circuit if omitted")
        ->check(CLI::ExistingFile);

    PlanArgs plan;
    auto* c_plan = app.add_subcommand("phase-plan", "Path lengths that equalize the component phases");
    c_plan->add_option("--plan", plan.plan, "Plan inputs (JSON); designed circuit if omitted")->check(CLI::ExistingFile);

    auto* c_self = app.add_subcommand("selftest", "Seeded property checks written as artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    common.format = format == "json" ? Format::json : Format::csv;
    const std::string cmd = recorded_command(argc, argv);

    try {
        if (*c_disp) return run_dispersion(common, cmd, disp);
        if (*c_evo) return run_coupler_evolution(common, cmd, evo);
        if (*c_rot) return run_rotator_curve(common, cmd, rot);
        if (*c_cnot) return run_cnot_verify(common, cmd, cnot);
        if (*c_plan) return run_phase_plan(common, cmd, plan);
        if (*c_self) return run_selftest(common, cmd);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        // NumericError, NotGuidedError, DesignError and anything else the solvers raise
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_config;
}
