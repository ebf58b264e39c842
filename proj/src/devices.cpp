#include "mqsim/devices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mqsim/errors.hpp"
#include "mqsim/units.hpp"
#include "text_util.hpp"

namespace mqsim {

namespace {

constexpr double two_pi = 2.0 * units::pi;

// x mod 2 pi in [0, 2 pi), with values a hair below 2 pi folded to zero (the same point, shorter length).
long double mod_2pi(long double x)
{
    const long double tp = 2 * std::numbers::pi_v<long double>;
    long double r = std::fmod(x, tp);
    if (r < 0) r += tp;
    if (r > tp - 1e-9L) r = 0;  // candidate lengths carry ~1e-10 rad of rounding
    return r;
}

GuidedMode require_mode(const ModeSolver& solver, const WaveguideGeometry& g, double lambda_um, Polarization pol,
                        int m, const std::string& what)
{
    if (auto mode = solver.try_effective_index(g, lambda_um, pol, m)) return *mode;
    throw DesignError(what + ": mode m=" + std::to_string(m) + " (" + std::string(to_string(pol)) +
                      ") is not guided at w=" + detail::fmt12(g.width_um) + " um");
}

}  // namespace

double pair_kappa(const ModeSolver& solver, const WaveguideGeometry& a, int ma, const WaveguideGeometry& b, int mb,
                  double gap_um, double lambda_um, Polarization pol)
{
    if (!(gap_um > 0.0)) throw DomainError("waveguide gap must be positive");
    const double D = solver.material().indiffusion.diffusion_length_um;
    const double h = D / solver.grid().samples_per_D;
    const double margin = solver.grid().lateral_margin_D * D;
    const double sep = 0.5 * a.width_um + gap_um + 0.5 * b.width_um;
    const double x0 = -(0.5 * a.width_um + margin);
    const double x1 = sep + 0.5 * b.width_um + margin;
    const auto n = static_cast<std::size_t>(std::ceil((x1 - x0) / h)) + 1;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = x0 + static_cast<double>(i) * h;
    const LateralField fa = solver.lateral_field(a, lambda_um, pol, ma, 0.0, x);
    const LateralField fb = solver.lateral_field(b, lambda_um, pol, mb, sep, x);
    return coupling_coefficient(fa, fb, lambda_um);
}

// ---------------------------------------------------------------- analyzer

void ModeAnalyzerSpec::validate() const
{
    if (!(tmw_width_um > 0.0) || !(smw_width_um > 0.0)) throw DomainError("analyzer widths must be positive");
    if (!(gap_um > 0.0)) throw DomainError("analyzer gap must be positive");
    if (!(coupling_length_mm > 0.0)) throw DomainError("analyzer coupling length must be positive");
    if (sbend_length_mm < 0.0 || port_separation_um < 0.0) throw DomainError("S-bend dimensions must be nonnegative");
}

bool AnalyzerModel::design_matched() const
{
    return std::abs(odd_block.delta_beta_per_m) * odd_block.length_m < BlockThresholds{}.matched_rad;
}

MatX AnalyzerModel::forward() const
{
    MatX u = reduction.unitary();
    u.row(2) *= std::exp(-J * spec.error.phase_rad);
    return u;
}

MatX AnalyzerModel::reverse() const
{
    // Reciprocal device: the reverse transfer is the transpose.
    return forward().transpose();
}

AnalyzerModel build_analyzer(const ModeSolver& solver, const ModeAnalyzerSpec& spec, double lambda_um,
                             Polarization pol)
{
    spec.validate();
    const WaveguideGeometry tmw{spec.tmw_width_um, std::nullopt};
    const WaveguideGeometry smw{spec.smw_width_um, std::nullopt};
    AnalyzerModel m;
    m.spec = spec;
    m.pol = pol;
    m.beta_even_tmw = require_mode(solver, tmw, lambda_um, pol, 0, "analyzer TMW").beta_per_m;
    m.beta_odd_tmw = require_mode(solver, tmw, lambda_um, pol, 1, "analyzer TMW").beta_per_m;
    // The offset models a width error on the SMW.
    m.beta_even_smw =
        require_mode(solver, smw, lambda_um, pol, 0, "analyzer SMW").beta_per_m - spec.error.delta_beta_offset_per_m;

    const double L = units::mm_to_m(spec.coupling_length_mm);
    const double k_odd = pair_kappa(solver, tmw, 1, smw, 0, spec.gap_um, lambda_um, pol);
    const double k_even = pair_kappa(solver, tmw, 0, smw, 0, spec.gap_um, lambda_um, pol);
    m.odd_block = CouplerParams{k_odd, m.beta_odd_tmw - m.beta_even_smw, L};
    m.even_block = CouplerParams{k_even, m.beta_even_tmw - m.beta_even_smw, L};

    const std::vector<ModeEntry> modes{{"tmw_even", m.beta_even_tmw}, {"tmw_odd", m.beta_odd_tmw},
                                       {"smw_even", m.beta_even_smw}};
    m.reduction = reduce_to_blocks(modes, {{1, 2, k_odd}, {0, 2, k_even}}, L);

    if (pol == spec.design && !m.design_matched())
        throw DesignError("analyzer is not phase matched for " + std::string(to_string(pol)) +
                          ": |dbeta| L = " + detail::fmt12(std::abs(m.odd_block.delta_beta_per_m) * L) + " rad");
    return m;
}

ModeAnalyzerSpec design_analyzer(const ModeSolver& solver, ModeAnalyzerSpec base, double lambda_um, int q)
{
    if (q < 1 || q % 2 == 0) throw DomainError("analyzer length multiple must be an odd positive integer");
    const WaveguideGeometry tmw{base.tmw_width_um, std::nullopt};
    const double target = require_mode(solver, tmw, lambda_um, base.design, 1, "analyzer TMW").beta_per_m;
    const auto w2 = find_phasematch_width(solver, target, lambda_um, base.design, 0);
    if (!w2) throw DesignError("analyzer: no SMW width phase matches the TMW odd mode");
    base.smw_width_um = *w2;
    const double k = pair_kappa(solver, tmw, 1, WaveguideGeometry{*w2, std::nullopt}, 0, base.gap_um, lambda_um,
                                base.design);
    base.coupling_length_mm = units::m_to_mm(q * units::pi / (2.0 * k));
    return base;
}

AnalyzerAction analyzer_action(const AnalyzerModel& model, const ModalQubit& input)
{
    input.validate();
    const MatX u = model.forward();
    const double L = model.reduction.length_m;
    const cd free_e = std::exp(J * (model.beta_even_tmw * L));
    const cd free_o = std::exp(J * (model.beta_odd_tmw * L));
    AnalyzerAction a;
    a.kept_even = input.alpha(0) * u(0, 0) * free_e;
    a.kept_odd = input.alpha(1) * u(1, 1) * free_o;
    a.extracted = input.alpha(1) * u(2, 1) * free_o;
    a.leaked = input.alpha(0) * u(2, 0) * free_e;
    a.odd_polar = polar_form(model.odd_block);
    return a;
}

// ---------------------------------------------------------------- sigma_z

double sigma_z_tmw_length(double beta_even_per_m, double beta_odd_per_m)
{
    const double d = std::abs(beta_even_per_m - beta_odd_per_m);
    if (!(d > 0.0)) throw DesignError("sigma_z: even and odd modes are degenerate, length would be infinite");
    return units::pi / d;
}

double sigma_z_tmw_length(const ModeSolver& solver, double lambda_um, Polarization pol, double width_um)
{
    const WaveguideGeometry g{width_um, std::nullopt};
    return sigma_z_tmw_length(require_mode(solver, g, lambda_um, pol, 0, "sigma_z").beta_per_m,
                              require_mode(solver, g, lambda_um, pol, 1, "sigma_z").beta_per_m);
}

SigmaZReport sigma_z_cascade(const CouplerParams& analyzer, const CouplerParams& combiner, double path_mismatch_rad)
{
    // Cross amplitudes relative to free propagation of the launched mode.
    const Mat2 ta = transfer_matrix(analyzer);
    const Mat2 tc = transfer_matrix(combiner);
    const cd out = std::exp(J * (analyzer.delta_beta_per_m * analyzer.length_m)) * ta(1, 0);
    const cd back = std::exp(-J * (combiner.delta_beta_per_m * combiner.length_m)) * tc(0, 1);

    SigmaZReport r;
    r.u = Mat2::Identity();
    r.u(1, 1) = out * back * std::exp(-J * path_mismatch_rad);
    r.odd_power = std::norm(r.u(1, 1));
    r.phase_deviation_rad = wrap_phase(std::arg(r.u(1, 1) / r.u(0, 0)) - units::pi);
    Mat2 z = Mat2::Identity();
    z(1, 1) = -1.0;
    r.residual = phase_insensitive_distance(MatX(r.u), MatX(z));
    return r;
}

// ---------------------------------------------------------------- rotator

void ModeRotatorSpec::validate() const
{
    if (!(smw_width_um > 0.0)) throw DomainError("rotator SMW width must be positive");
    if (!(coupler_length_mm > 0.0) || !(modulator_length_mm > 0.0))
        throw DomainError("rotator lengths must be positive");
    if (!(coupler_gap_um > 0.0) || !(modulator_gap_um > 0.0)) throw DomainError("rotator gaps must be positive");
    if (!(lambda_um > 0.0)) throw DomainError("wavelength must be positive");
}

double RotatorModel::kappa_per_m() const { return units::pi / (2.0 * units::mm_to_m(spec.coupler_length_mm)); }

double RotatorModel::delta_beta_per_volt() const
{
    // Opposite Pockels shifts in the two guides: dbeta = 2 pi r n^3 V / (lambda d).
    return 2.0 * units::pi * r_pm_per_V * units::pm_per_V * n_index * n_index * n_index /
           (units::um_to_m(spec.lambda_um) * units::um_to_m(spec.coupler_gap_um));
}

double RotatorModel::modulator_phase_per_volt() const
{
    return units::pi * n_index * n_index * n_index * r_pm_per_V * units::pm_per_V *
           units::mm_to_m(spec.modulator_length_mm) /
           (units::um_to_m(spec.lambda_um) * units::um_to_m(spec.modulator_gap_um));
}

RotatorModel RotatorModel::from_solver(const ModeSolver& solver, const ModeRotatorSpec& spec)
{
    spec.validate();
    RotatorModel m;
    m.spec = spec;
    m.n_index = require_mode(solver, WaveguideGeometry{spec.smw_width_um, std::nullopt}, spec.lambda_um, spec.pol, 0,
                             "rotator SMW")
                    .n_eff;
    m.r_pm_per_V = solver.material().pockels_pm_per_V(spec.pol);
    return m;
}

namespace {

CouplerParams rotator_coupler(double v1, const RotatorModel& model)
{
    return CouplerParams{model.kappa_per_m(), v1 * model.delta_beta_per_volt() + model.error.delta_beta_offset_per_m,
                         units::mm_to_m(model.spec.coupler_length_mm)};
}

}  // namespace

double rotator_theta(double v1, const RotatorModel& model) { return polar_form(rotator_coupler(v1, model)).theta; }

Mat2 rotation(double theta) { return CascadeForm::T2(theta); }

RotatorVoltages rotator_voltages(double theta, const RotatorModel& model)
{
    model.spec.validate();
    if (!(theta >= 0.0 && theta <= units::pi)) throw DomainError("rotation angle must lie in [0, pi]");
    const double L = units::mm_to_m(model.spec.coupler_length_mm);
    const double kappa = model.kappa_per_m();
    // theta(x) with x = delta_beta L / 2 falls from pi at x = 0 to 0 at x = sqrt(3) pi / 2.
    auto theta_of = [&](double x) { return polar_form(CouplerParams{kappa, 2.0 * x / L, L}).theta; };
    double lo = 0.0;
    double hi = std::sqrt(3.0) * units::pi / 2.0;
    double x;
    if (theta == units::pi) {
        x = 0.0;
    } else if (theta == 0.0) {
        x = hi;
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (theta_of(mid) > theta) lo = mid;
            else hi = mid;
        }
        x = 0.5 * (lo + hi);
    }
    RotatorVoltages v;
    v.v1 = (2.0 * x / L - model.error.delta_beta_offset_per_m) / model.delta_beta_per_volt();
    const CascadeForm c = cascade_decomposition(rotator_coupler(v.v1, model));
    // P2 = diag(1, e^{j Gamma(V2)}) undoes T1 (and the odd-arm error); P3 = diag(e^{j Gamma(V3)}, 1) undoes T3.
    v.v2 = wrap_phase(c.gamma1 + model.error.phase_rad) / model.modulator_phase_per_volt();
    v.v3 = wrap_phase(c.gamma2) / model.modulator_phase_per_volt();
    return v;
}

Mat2 rotator_unitary(const RotatorVoltages& v, const RotatorModel& model)
{
    model.spec.validate();
    const double g = model.modulator_phase_per_volt();
    Mat2 p2 = Mat2::Identity();
    p2(1, 1) = std::exp(J * (g * v.v2 - model.error.phase_rad));
    Mat2 p3 = Mat2::Identity();
    p3(0, 0) = std::exp(J * (g * v.v3));
    return p3 * transfer_matrix(rotator_coupler(v.v1, model)) * p2;
}

// ---------------------------------------------------------------- two-mode coupler

void TwoModeCouplerSpec::validate() const
{
    if (!(width_um > 0.0)) throw DomainError("coupler width must be positive");
    if (!(gap_um > 0.0) || !(electrode_gap_um > 0.0)) throw DomainError("coupler gaps must be positive");
    if (!(electrode_length_mm >= 0.0)) throw DomainError("coupler length must be nonnegative");
    if (orientation_wg1 != 1 && orientation_wg1 != -1) throw ConfigError("orientation must be +1 or -1");
}

TwoModeCouplerModel build_tmw_coupler(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um,
                                      Polarization pol)
{
    spec.validate();
    TwoModeCouplerModel m;
    m.spec = spec;
    m.pol = pol;
    const std::array<WaveguideGeometry, 2> guide{
        WaveguideGeometry{spec.width_um, Electrode{spec.electrode_gap_um, spec.orientation_wg1, spec.voltage_V}},
        WaveguideGeometry{spec.width_um, Electrode{spec.electrode_gap_um, -spec.orientation_wg1, spec.voltage_V}}};
    for (int g = 0; g < 2; ++g)
        for (int order = 0; order < 2; ++order)
            m.modes[2 * g + order] =
                require_mode(solver, guide[g], lambda_um, pol, order, "two-mode coupler WG" + std::to_string(g + 1));

    std::vector<ModeEntry> entries;
    for (int k = 0; k < 4; ++k)
        entries.push_back({coupler_labels[k], m.modes[k].beta_per_m + (k >= 2 ? spec.error.delta_beta_offset_per_m : 0.0)});
    std::vector<CouplingEntry> couplings;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double k = pair_kappa(solver, guide[0], i, guide[1], j, spec.gap_um, lambda_um, pol);
            m.kappa[i][2 + j] = m.kappa[2 + j][i] = k;
            couplings.push_back({i, 2 + j, k});
        }
    }
    m.reduction = reduce_to_blocks(entries, couplings, units::mm_to_m(spec.electrode_length_mm));
    m.u = m.reduction.unitary();
    m.u.row(2) *= std::exp(-J * spec.error.phase_rad);
    m.u.row(3) *= std::exp(-J * spec.error.phase_rad);
    return m;
}

Mat4 tmw_coupler_unitary(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um, Polarization pol)
{
    return build_tmw_coupler(solver, spec, lambda_um, pol).u;
}

CouplerTuning tune_tmw_coupler(const ModeSolver& solver, const TwoModeCouplerSpec& spec, double lambda_um,
                               double v_max, double v_step)
{
    spec.validate();
    if (!(v_max > 0.0) || !(v_step > 0.0)) throw ConfigError("voltage sweep range must be positive");
    // WG1 with orientation +1 loses index for V > 0, so the crossing sits at the sign of the orientation.
    std::vector<double> volts;
    for (double v = 0.0; v <= v_max + 1e-9; v += v_step)
        volts.push_back(spec.orientation_wg1 * v);
    const PairSweep sweep =
        voltage_sweep_pair(solver, spec.width_um, spec.electrode_gap_um, lambda_um, Polarization::TM, volts,
                           spec.orientation_wg1);
    const auto vstar = find_crossing_voltage(solver, sweep);
    if (!vstar) throw DesignError("two-mode coupler: no even/odd crossing within +-" + detail::fmt12(v_max) + " V");

    CouplerTuning t;
    t.crossing_voltage_V = *vstar;
    t.spec = spec;
    t.spec.voltage_V = *vstar;
    const WaveguideGeometry g1{spec.width_um, Electrode{spec.electrode_gap_um, spec.orientation_wg1, *vstar}};
    const WaveguideGeometry g2{spec.width_um, Electrode{spec.electrode_gap_um, -spec.orientation_wg1, *vstar}};
    t.kappa_cross_per_m = pair_kappa(solver, g1, 0, g2, 1, spec.gap_um, lambda_um, Polarization::TM);
    const double lc = units::pi / (2.0 * t.kappa_cross_per_m);
    const double ratio = units::mm_to_m(spec.electrode_length_mm) / lc;
    t.q = std::max(1, 2 * static_cast<int>(std::lround((ratio - 1.0) / 2.0)) + 1);
    t.spec.electrode_length_mm = units::m_to_mm(t.q * lc);

    t.tm_transfer = build_tmw_coupler(solver, t.spec, lambda_um, Polarization::TM).power(0, 3);
    t.te_passthrough = build_tmw_coupler(solver, t.spec, lambda_um, Polarization::TE).power(0, 0);
    return t;
}

// ---------------------------------------------------------------- CNOT

std::string_view to_string(PhaseConvention c) { return c == PhaseConvention::printed ? "printed" : "physical"; }

PhaseConvention parse_phase_convention(std::string_view s)
{
    if (s == "printed") return PhaseConvention::printed;
    if (s == "physical") return PhaseConvention::physical;
    throw ConfigError("unknown phase convention '" + std::string(s) + "' (expected printed or physical)");
}

void PhasePlan::validate() const
{
    for (int q : {q1, q2, q3})
        if (q < 1 || q % 2 == 0) throw DomainError("q1, q2, q3 must be odd positive integers");
    if (!(beta_oTM > 0.0) || !(beta_oTE > 0.0) || !(beta_eTM > 0.0) || !(beta_eTE > 0.0))
        throw DomainError("propagation constants must be positive");
    if (l1_m < 0.0 || l2_m < 0.0 || l3_m < 0.0 || LD_m < 0.0) throw DomainError("lengths must be nonnegative");
}

namespace {

// Component phases in extended precision; they reach 1e6 rad, where a double keeps only ~1e-10 rad.
std::array<long double, 4> phases_ld(const PhasePlan& p, PhaseConvention c)
{
    using L = long double;
    const L s = c == PhaseConvention::physical ? 1.0L : -1.0L;
    const L pi = std::numbers::pi_v<long double>;
    std::array<L, 4> out{};
    out[eTM] = L(p.beta_eTM) * p.l1_m + L(p.beta_oTM) * p.l2_m + L(p.beta_prime) * p.LD_m + s * (2 * p.q1 + p.q2) * pi / 2;
    // The odd component runs the same path in reverse order.
    out[oTM] = L(p.beta_oTM) * p.l2_m + L(p.beta_prime) * p.LD_m + L(p.beta_eTM) * p.l1_m + s * (2 * p.q1 + p.q2) * pi / 2;
    out[eTE] = 2 * L(p.beta_eTE) * p.l1_m + L(p.beta_double_prime) * p.LD_m;
    out[oTE] = 2 * L(p.beta_oTE) * p.l3_m + s * (p.q3 * pi - 2 * L(p.phi_A));
    return out;
}

double wrap_ld(long double x)
{
    const long double two_pi_ld = 2 * std::numbers::pi_v<long double>;
    long double w = std::remainder(x, two_pi_ld);
    if (w <= -two_pi_ld / 2) w += two_pi_ld;
    return static_cast<double>(w);
}

}  // namespace

std::array<double, 4> PhasePlan::phases(PhaseConvention c) const
{
    const auto p = phases_ld(*this, c);
    return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]), static_cast<double>(p[3])};
}

std::array<double, 4> PhasePlan::wrapped_phases(PhaseConvention c) const
{
    const auto p = phases_ld(*this, c);
    return {wrap_ld(p[0]), wrap_ld(p[1]), wrap_ld(p[2]), wrap_ld(p[3])};
}

std::array<double, 3> PhasePlan::residuals(PhaseConvention c) const
{
    const auto p = phases_ld(*this, c);
    return {wrap_ld(p[eTM] - p[eTE]), wrap_ld(p[eTM] - p[oTE]), wrap_ld(p[oTM] - p[eTM])};
}

PhaseSolution phase_equalize(const PhasePlan& plan, const LengthBounds& bounds, PhaseConvention convention)
{
    PhasePlan base = plan;
    base.l1_m = base.l2_m = base.l3_m = 0.0;
    base.validate();
    if (bounds.l1_min_m < 0.0 || bounds.l2_min_m < 0.0 || bounds.l3_min_m < 0.0)
        throw DomainError("minimum lengths must be nonnegative");

    using L = long double;
    const L s = convention == PhaseConvention::physical ? 1.0L : -1.0L;
    const L lpi = std::numbers::pi_v<long double>;
    const PhasePlan& p = base;
    // Upper path: beta_oTM l2 = -c2(l1) (mod 2 pi). Lower path: 2 beta_oTE l3 = c3(l1) (mod 2 pi).
    auto c2 = [&](double l1) {
        return (L(p.beta_eTM) - 2 * L(p.beta_eTE)) * l1 + (L(p.beta_prime) - L(p.beta_double_prime)) * p.LD_m +
               s * (2 * p.q1 + p.q2) * lpi / 2;
    };
    auto c3 = [&](double l1) {
        return 2 * L(p.beta_eTE) * l1 + L(p.beta_double_prime) * p.LD_m - s * (p.q3 * lpi - 2 * L(p.phi_A));
    };
    auto l2_of = [&](double l1) {
        return static_cast<double>(bounds.l2_min_m + mod_2pi(-c2(l1) - L(p.beta_oTM) * bounds.l2_min_m) / p.beta_oTM);
    };
    auto l3_of = [&](double l1) {
        return static_cast<double>(bounds.l3_min_m +
                                   mod_2pi(c3(l1) - 2 * L(p.beta_oTE) * bounds.l3_min_m) / (2 * L(p.beta_oTE)));
    };

    // Any l1 further than one period of l2 and l3 beyond the minimum only adds length,
    // and inside that window the optimum is at l1_min or where l2 or l3 wraps to its minimum.
    const double l1_min = bounds.l1_min_m;
    const double window = two_pi / p.beta_oTM + units::pi / p.beta_oTE;
    std::vector<double> cand{l1_min};
    auto add_wraps = [&](long double f0, double slope) {
        if (slope == 0.0) return;
        double d = static_cast<double>((slope > 0.0 ? mod_2pi(-f0) : mod_2pi(f0)) / std::abs(slope));
        for (; d <= window; d += two_pi / std::abs(slope))
            cand.push_back(l1_min + d);
    };
    add_wraps(-c2(l1_min) - L(p.beta_oTM) * bounds.l2_min_m, -(p.beta_eTM - 2.0 * p.beta_eTE));
    add_wraps(c3(l1_min) - 2 * L(p.beta_oTE) * bounds.l3_min_m, 2.0 * p.beta_eTE);

    PhaseSolution best;
    bool have = false;
    PhaseSolution fallback;
    bool have_fallback = false;
    for (double l1 : cand) {
        PhasePlan t = p;
        t.l1_m = l1;
        t.l2_m = l2_of(l1);
        t.l3_m = l3_of(l1);
        PhaseSolution sol;
        sol.plan = t;
        sol.residual_rad = t.residuals(convention);
        sol.total_length_m = 2.0 * (t.l1_m + t.l2_m + t.l3_m);
        const bool within = (!bounds.l1_max_m || t.l1_m <= *bounds.l1_max_m) &&
                            (!bounds.l2_max_m || t.l2_m <= *bounds.l2_max_m) &&
                            (!bounds.l3_max_m || t.l3_m <= *bounds.l3_max_m);
        if (within && (!have || sol.total_length_m < best.total_length_m)) {
            best = sol;
            have = true;
        }
        if (!have_fallback || sol.total_length_m < fallback.total_length_m) {
            fallback = sol;
            have_fallback = true;
        }
    }

    std::ostringstream os;
    if (have) {
        best.feasible = true;
        os << "solved (" << to_string(convention) << " phases): l1 = " << detail::fmt12(units::m_to_mm(best.plan.l1_m))
           << " mm, l2 = " << detail::fmt12(units::m_to_mm(best.plan.l2_m))
           << " mm, l3 = " << detail::fmt12(units::m_to_mm(best.plan.l3_m)) << " mm";
        best.report = os.str();
        return best;
    }
    // Infeasible: return the shortest unconstrained candidate clamped to the maxima, with the congruences it misses.
    PhasePlan& t = fallback.plan;
    if (bounds.l1_max_m) t.l1_m = std::min(t.l1_m, *bounds.l1_max_m);
    if (bounds.l2_max_m) t.l2_m = std::min(t.l2_m, *bounds.l2_max_m);
    if (bounds.l3_max_m) t.l3_m = std::min(t.l3_m, *bounds.l3_max_m);
    fallback.residual_rad = t.residuals(convention);
    fallback.total_length_m = 2.0 * (t.l1_m + t.l2_m + t.l3_m);
    fallback.feasible = false;
    os << "infeasible: no lengths within the maxima satisfy both congruences; residuals at the clamped lengths "
       << "(eTM-eTE, eTM-oTE, oTM-eTM) = " << detail::fmt12(fallback.residual_rad[0]) << ", "
       << detail::fmt12(fallback.residual_rad[1]) << ", " << detail::fmt12(fallback.residual_rad[2]) << " rad";
    if (bounds.l1_max_m && l1_min > *bounds.l1_max_m) os << "; l1 minimum exceeds its maximum";
    fallback.report = os.str();
    return fallback;
}

Mat4 CnotCircuit::unitary() const
{
    std::array<double, 4> phi{};
    if (!ideal_phases) phi = plan.wrapped_phases(PhaseConvention::physical);
    for (int k = 0; k < 4; ++k)
        phi[k] += phase_errors[k];
    Mat4 u = Mat4::Zero();
    u(oTM, eTM) = transmission[eTM] * std::exp(-J * phi[eTM]);
    u(eTM, oTM) = transmission[oTM] * std::exp(-J * phi[oTM]);
    u(eTE, eTE) = transmission[eTE] * std::exp(-J * phi[eTE]);
    u(oTE, oTE) = transmission[oTE] * std::exp(-J * phi[oTE]);
    return u;
}

Mat4 cnot_unitary(const CnotCircuit& circuit) { return circuit.unitary(); }

CompensationFit fit_compensation(const CnotCircuit& circuit, int component)
{
    if (component < 0 || component > 3) throw DomainError("component index out of range");
    auto fidelity = [&](double phase) {
        CnotCircuit c = circuit;
        c.phase_errors[component] += phase;
        return truth_table(c.unitary()).fidelity;
    };
    CompensationFit fit;
    fit.component = component;
    fit.fidelity_before = fidelity(0.0);
    // Coarse scan, then golden section around the best sample.
    constexpr int n = 720;
    double best = 0.0;
    double best_f = fit.fidelity_before;
    for (int i = 0; i < n; ++i) {
        const double ph = -units::pi + two_pi * i / n;
        const double f = fidelity(ph);
        if (f > best_f) {
            best_f = f;
            best = ph;
        }
    }
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best - two_pi / n;
    double b = best + two_pi / n;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (fidelity(c) > fidelity(d)) b = d;
        else a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    const double refined = 0.5 * (a + b);
    if (fidelity(refined) >= best_f) best = refined;
    fit.phase_rad = wrap_phase(best);
    fit.fidelity_after = fidelity(best);
    return fit;
}

CnotDesign design_cnot(const ModeSolver& solver, const CnotDesignOptions& opt)
{
    CnotDesign d;
    d.options = opt;
    const double lambda = opt.lambda_um;
    d.tm_analyzer = opt.tm_analyzer;
    d.te_analyzer = opt.te_analyzer;
    d.tm_analyzer.design = Polarization::TM;
    d.te_analyzer.design = Polarization::TE;
    if (opt.design_tm_analyzer) d.tm_analyzer = design_analyzer(solver, d.tm_analyzer, lambda, opt.q1);
    if (opt.design_te_analyzer) d.te_analyzer = design_analyzer(solver, d.te_analyzer, lambda, opt.q3);
    const AnalyzerModel tm_at_tm = build_analyzer(solver, d.tm_analyzer, lambda, Polarization::TM);
    const AnalyzerModel tm_at_te = build_analyzer(solver, d.tm_analyzer, lambda, Polarization::TE);
    const AnalyzerModel te_at_te = build_analyzer(solver, d.te_analyzer, lambda, Polarization::TE);
    const AnalyzerModel te_at_tm = build_analyzer(solver, d.te_analyzer, lambda, Polarization::TM);
    // The odd TE component rides through the TM analyzer detuned; its phase is phi_A.
    const PolarForm te_through = polar_form(tm_at_te.odd_block);

    if (opt.tune_coupler) {
        d.coupler = tune_tmw_coupler(solver, opt.coupler, lambda);
    } else {
        d.coupler.spec = opt.coupler;
        d.coupler.crossing_voltage_V = opt.coupler.voltage_V;
    }
    const TwoModeCouplerModel tm = build_tmw_coupler(solver, d.coupler.spec, lambda, Polarization::TM);
    const TwoModeCouplerModel te = build_tmw_coupler(solver, d.coupler.spec, lambda, Polarization::TE);
    if (!opt.tune_coupler) {
        d.coupler.tm_transfer = tm.power(0, 3);
        d.coupler.te_passthrough = te.power(0, 0);
    }

    const WaveguideGeometry tmw{d.coupler.spec.width_um, std::nullopt};
    PhasePlan plan;
    plan.q1 = opt.q1;
    plan.q2 = opt.q2;
    plan.q3 = opt.q3;
    plan.LD_m = units::mm_to_m(d.coupler.spec.electrode_length_mm);
    plan.beta_eTM = require_mode(solver, tmw, lambda, Polarization::TM, 0, "CNOT path").beta_per_m;
    plan.beta_oTM = require_mode(solver, tmw, lambda, Polarization::TM, 1, "CNOT path").beta_per_m;
    plan.beta_eTE = require_mode(solver, tmw, lambda, Polarization::TE, 0, "CNOT path").beta_per_m;
    plan.beta_oTE = require_mode(solver, tmw, lambda, Polarization::TE, 1, "CNOT path").beta_per_m;
    // The matched block carries exp(-j beta_mean L) on its cross elements.
    plan.beta_prime = 0.5 * (tm.modes[0].beta_per_m + tm.modes[3].beta_per_m);
    plan.beta_double_prime = te.modes[0].beta_per_m;
    plan.phi_A = te_through.phi_A;

    // Path transmissions; combiners mirror the analyzers, so each is visited twice where it applies.
    const Vec2 even(1.0, 0.0), odd(0.0, 1.0);
    const auto tm_e = analyzer_action(tm_at_tm, ModalQubit{even});
    const auto tm_o = analyzer_action(tm_at_tm, ModalQubit{odd});
    const auto tmA_te_e = analyzer_action(tm_at_te, ModalQubit{even});
    const auto tmA_te_o = analyzer_action(tm_at_te, ModalQubit{odd});
    const auto te_e = analyzer_action(te_at_te, ModalQubit{even});
    const auto te_o = analyzer_action(te_at_te, ModalQubit{odd});
    const auto teA_tm_e = analyzer_action(te_at_tm, ModalQubit{even});
    const double x_tm = std::pow(std::abs(tm_o.extracted), d.tm_analyzer.crossings());
    const double x_te = std::pow(std::abs(te_o.extracted), d.te_analyzer.crossings());
    const double c_tm = std::sqrt(tm.power(0, 3));
    const double c_tm_back = std::sqrt(tm.power(3, 0));
    const double c_te = std::sqrt(te.power(0, 0));
    d.device_transmission[eTM] = std::abs(tm_e.kept_even) * std::abs(teA_tm_e.kept_even) * c_tm * x_tm;
    d.device_transmission[oTM] = x_tm * c_tm_back * std::abs(teA_tm_e.kept_even) * std::abs(tm_e.kept_even);
    d.device_transmission[eTE] = std::pow(std::abs(tmA_te_e.kept_even) * std::abs(te_e.kept_even), 2) * c_te;
    d.device_transmission[oTE] = std::pow(std::abs(tmA_te_o.kept_odd), 2) * x_te * x_te;

    LengthBounds bounds;
    if (opt.bounds) {
        bounds = *opt.bounds;
    } else {
        const double tm_len = units::mm_to_m(d.tm_analyzer.coupling_length_mm + d.tm_analyzer.sbend_length_mm);
        const double te_len = units::mm_to_m(d.te_analyzer.coupling_length_mm + d.te_analyzer.sbend_length_mm);
        bounds.l1_min_m = tm_len;
        bounds.l2_min_m = tm_len;
        bounds.l3_min_m = tm_len + te_len;
    }
    d.bounds = bounds;
    d.solution = phase_equalize(plan, bounds, PhaseConvention::physical);
    d.circuit.plan = d.solution.plan;
    if (opt.include_device_loss) d.circuit.transmission = d.device_transmission;
    return d;
}

}  // namespace mqsim
