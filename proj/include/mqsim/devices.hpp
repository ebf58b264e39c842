#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mqsim/coupling.hpp"
#include "mqsim/modesolver.hpp"
#include "mqsim/quantum.hpp"

namespace mqsim {

// Overlap kappa (rad/m) between mode ma of guide a and mode mb of guide b,
// edges gap_um apart. Both fields are sampled on one grid spanning the pair.
double pair_kappa(const ModeSolver& solver, const WaveguideGeometry& a, int ma, const WaveguideGeometry& b, int mb,
                  double gap_um, double lambda_um, Polarization pol);

// Fabrication errors every device accepts.
struct Imperfection {
    double phase_rad = 0.0;              // extra phase on the affected path
    double delta_beta_offset_per_m = 0.0;  // added to the coupler mismatch
};

// ---------------------------------------------------------------- analyzer

enum class AnalyzerVariant { even_output, odd_output };

struct ModeAnalyzerSpec {
    double tmw_width_um = 5.6;
    double smw_width_um = 3.4;
    double gap_um = 4.0;  // edge to edge
    double coupling_length_mm = 6.2;
    double sbend_length_mm = 10.0;
    double port_separation_um = 127.0;
    Polarization design = Polarization::TM;
    AnalyzerVariant variant = AnalyzerVariant::odd_output;
    Imperfection error;

    void validate() const;
    int crossings() const { return variant == AnalyzerVariant::odd_output ? 2 : 1; }
};

// The analyzer's couplings at one polarization. Port order: TMW even, TMW odd, SMW even.
struct AnalyzerModel {
    ModeAnalyzerSpec spec;
    Polarization pol = Polarization::TM;
    double beta_even_tmw = 0.0;
    double beta_odd_tmw = 0.0;
    double beta_even_smw = 0.0;
    CouplerParams odd_block;   // TMW odd -> SMW even
    CouplerParams even_block;  // TMW even -> SMW even
    BlockReduction reduction;

    bool design_matched() const;  // odd block below the matched threshold
    MatX forward() const;         // 3x3, propagation phases included
    MatX reverse() const;         // same device operated from the output side
};

// Throws DesignError when the spec's design polarization is not phase matched.
AnalyzerModel build_analyzer(const ModeSolver& solver, const ModeAnalyzerSpec& spec, double lambda_um,
                             Polarization pol);

// SMW width phase-matched to the TMW odd mode, and L2 = pi / 2 kappa (odd multiple `q`).
ModeAnalyzerSpec design_analyzer(const ModeSolver& solver, ModeAnalyzerSpec base, double lambda_um, int q = 1);

struct AnalyzerAction {
    // Amplitudes relative to free propagation of the launched mode over L2.
    cd kept_even;
    cd kept_odd;
    cd extracted;  // SMW even, from the odd input
    cd leaked;     // SMW even, from the even input
    PolarForm odd_polar;  // phi_A is the phase the odd component keeps when not extracted
};

AnalyzerAction analyzer_action(const AnalyzerModel& model, const ModalQubit& input);

// ---------------------------------------------------------------- sigma_z

// pi / |beta_e - beta_o|; DesignError when degenerate.
double sigma_z_tmw_length(double beta_even_per_m, double beta_odd_per_m);
double sigma_z_tmw_length(const ModeSolver& solver, double lambda_um, Polarization pol, double width_um);

struct SigmaZReport {
    Mat2 u;
    double phase_deviation_rad = 0.0;  // arg(u11 / u00) - pi, wrapped
    double odd_power = 0.0;            // |u11|^2
    double residual = 0.0;             // phase-insensitive distance to diag(1, -1)
};

// Odd component crosses out through `analyzer` and back through `combiner`;
// path_mismatch_rad = beta_o L_o - beta_e L_e (zero under the design rule).
SigmaZReport sigma_z_cascade(const CouplerParams& analyzer, const CouplerParams& combiner,
                             double path_mismatch_rad = 0.0);

// ---------------------------------------------------------------- rotator

struct ModeRotatorSpec {
    double smw_width_um = 2.2;
    double coupler_length_mm = 1.73;
    double coupler_gap_um = 5.0;
    double modulator_length_mm = 5.0;
    double modulator_gap_um = 5.0;
    double lambda_um = 0.812;
    Polarization pol = Polarization::TM;

    void validate() const;
};

struct RotatorModel {
    ModeRotatorSpec spec;
    double n_index = 2.2;      // index in the Pockels formulas
    double r_pm_per_V = 32.6;  // r33 for TM, r13 for TE
    Imperfection error;        // delta_beta offset on the coupler, phase on the odd arm

    double kappa_per_m() const;  // pi / 2L
    double delta_beta_per_volt() const;
    double modulator_phase_per_volt() const;

    // n from the SMW even mode, r from the material.
    static RotatorModel from_solver(const ModeSolver& solver, const ModeRotatorSpec& spec);
};

struct RotatorVoltages {
    double v1 = 0.0;  // coupler
    double v2 = 0.0;  // modulator before the coupler, odd arm
    double v3 = 0.0;  // modulator after the coupler, even arm
};

// Inverts theta = 2 asin[(kappa / gamma) sin gamma L] on |delta_beta L| in [0, sqrt(3) pi].
RotatorVoltages rotator_voltages(double theta, const RotatorModel& model);
Mat2 rotator_unitary(const RotatorVoltages& v, const RotatorModel& model);

// R(theta) = [[cos theta/2, -j sin theta/2], [-j sin theta/2, cos theta/2]]
Mat2 rotation(double theta);

// Angle of the coupler alone at voltage v1.
double rotator_theta(double v1, const RotatorModel& model);

// ---------------------------------------------------------------- two-mode EO coupler

struct TwoModeCouplerSpec {
    double width_um = 5.6;
    double gap_um = 4.0;  // waveguide edge gap
    double electrode_length_mm = 2.2;
    double electrode_gap_um = 4.0;
    double voltage_V = 36.0;
    int orientation_wg1 = +1;
    Imperfection error;

    void validate() const;
};

inline constexpr std::array<const char*, 4> coupler_labels{"e1", "o1", "e2", "o2"};

struct TwoModeCouplerModel {
    TwoModeCouplerSpec spec;
    Polarization pol = Polarization::TM;
    std::array<GuidedMode, 4> modes;  // e1, o1, e2, o2
    std::array<std::array<double, 4>, 4> kappa{};
    BlockReduction reduction;
    MatX u;  // 4x4

    double power(int from, int to) const { return std::norm(u(to, from)); }
};

TwoModeCouplerModel build_tmw_coupler(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um,
                                      Polarization pol);
Mat4 tmw_coupler_unitary(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um,
                         Polarization pol);

struct CouplerTuning {
    TwoModeCouplerSpec spec;  // retuned voltage and length
    double crossing_voltage_V = 0.0;
    double kappa_cross_per_m = 0.0;
    int q = 1;                // length is q pi / 2 kappa
    double tm_transfer = 0.0;  // e1 -> o2
    double te_passthrough = 0.0;  // e1 -> e1
};

// Voltage at the even/odd crossing, length at the odd multiple of the coupling length nearest spec's.
CouplerTuning tune_tmw_coupler(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um,
                               double v_max = 200.0, double v_step = 10.0);

// ---------------------------------------------------------------- CNOT

enum class PhaseConvention {
    printed,   // crossings contribute -q pi/2 and phi_A enters with +2
    physical,  // the same terms from exp(-j beta z) propagation
};

std::string_view to_string(PhaseConvention c);
PhaseConvention parse_phase_convention(std::string_view s);

struct PhasePlan {
    double l1_m = 0.0;
    double l2_m = 0.0;
    double l3_m = 0.0;
    double LD_m = 0.0;
    int q1 = 1;
    int q2 = 1;
    int q3 = 1;
    double phi_A = 0.0;
    double beta_prime = 0.0;         // TM even WG1 = TM odd WG2 inside the coupler
    double beta_double_prime = 0.0;  // TE even WG1 inside the coupler
    double beta_eTM = 0.0;
    double beta_oTM = 0.0;
    double beta_eTE = 0.0;
    double beta_oTE = 0.0;

    void validate() const;

    // Phase of each component in joint-basis order (input label).
    std::array<double, 4> phases(PhaseConvention c) const;
    std::array<double, 4> wrapped_phases(PhaseConvention c) const;  // reduced in extended precision

    // Wrapped differences (eTM - eTE, eTM - oTE, oTM - eTM).
    std::array<double, 3> residuals(PhaseConvention c) const;
};

struct LengthBounds {
    double l1_min_m = 0.0;
    double l2_min_m = 0.0;
    double l3_min_m = 0.0;
    std::optional<double> l1_max_m;
    std::optional<double> l2_max_m;
    std::optional<double> l3_max_m;
};

struct PhaseSolution {
    bool feasible = false;
    PhasePlan plan;
    std::array<double, 3> residual_rad{};
    double total_length_m = 0.0;  // 2 l1 + 2 l2 + 2 l3
    std::string report;
};

PhaseSolution phase_equalize(const PhasePlan& plan, const LengthBounds& bounds,
                             PhaseConvention convention = PhaseConvention::physical);

struct CnotCircuit {
    PhasePlan plan;
    bool ideal_phases = false;
    std::array<double, 4> phase_errors{};  // additive, joint-basis order
    std::array<double, 4> transmission{1.0, 1.0, 1.0, 1.0};  // path amplitude magnitudes

    // Always evaluated with physical phases; the printed convention is a bookkeeping choice only.
    Mat4 unitary() const;
};

Mat4 cnot_unitary(const CnotCircuit& circuit);

// 1D fit of a compensating phase on one component that maximizes fidelity.
struct CompensationFit {
    int component = oTE;
    double phase_rad = 0.0;
    double fidelity_before = 0.0;
    double fidelity_after = 0.0;
};

CompensationFit fit_compensation(const CnotCircuit& circuit, int component);

inline ModeAnalyzerSpec te_analyzer_defaults()
{
    ModeAnalyzerSpec s;
    s.smw_width_um = 3.0;
    s.coupling_length_mm = 3.7;
    s.design = Polarization::TE;
    return s;
}

// Everything the dispersion-managed circuit needs from the solver.
struct CnotDesignOptions {
    double lambda_um = 0.812;
    ModeAnalyzerSpec tm_analyzer{};
    ModeAnalyzerSpec te_analyzer = te_analyzer_defaults();
    TwoModeCouplerSpec coupler{};
    bool design_tm_analyzer = true;  // phase-match the SMW width and set L2 = q pi / 2 kappa
    bool design_te_analyzer = true;
    bool tune_coupler = true;
    bool include_device_loss = false;  // fold device_transmission into the circuit
    int q1 = 1;
    int q2 = 1;
    int q3 = 1;
    std::optional<LengthBounds> bounds;  // default: each path at least one analyzer plus S-bend
};

struct CnotDesign {
    CnotDesignOptions options;
    ModeAnalyzerSpec tm_analyzer;
    ModeAnalyzerSpec te_analyzer;
    CouplerTuning coupler;
    LengthBounds bounds;  // as used by the solve
    PhaseSolution solution;
    // |amplitude| each component keeps along its path through analyzers, coupler and combiners.
    std::array<double, 4> device_transmission{};
    CnotCircuit circuit;
};

CnotDesign design_cnot(const ModeSolver& solver, const CnotDesignOptions& opt);

}  // namespace mqsim
