#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "mqsim/circuit_io.hpp"
#include "mqsim/devices.hpp"
#include "mqsim/errors.hpp"
#include "text_util.hpp"

namespace mqsim::cli {

namespace {

constexpr double pi = units::pi;

struct Setup {
    MaterialModel material;
    std::string bytes;  // hashed into every header
};

Setup load_material(const Common& c)
{
    Setup s;
    if (c.config) {
        std::ifstream in(*c.config, std::ios::binary);
        if (!in) throw ConfigError("cannot open material config '" + *c.config + "'");
        std::ostringstream os;
        os << in.rdbuf();
        s.bytes = os.str();
        s.material = MaterialModel::from_config(s.bytes);
    } else {
        s.material = MaterialModel::congruent_lithium_niobate();
        s.bytes = s.material.to_config();
    }
    return s;
}

Run make_run(const Common& c, const std::string& cmdline, const std::string& bytes)
{
    Run r;
    r.command_line = cmdline;
    r.config_hash = detail::hex64(detail::fnv1a64(bytes));
    r.format = c.format;
    r.out_dir = c.out;
    return r;
}

std::string f12(double v) { return detail::fmt12(v); }

std::string yes_no(bool b) { return b ? "yes" : "no"; }

// Runs body(i) for i in [0, n) on a few threads; results go to caller-owned slots.
template <class F>
void parallel_rows(std::size_t n, F&& body)
{
    const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < t; ++k)
        pool.emplace_back([&, k] {
            for (std::size_t i = k; i < n; i += t)
                body(i);
        });
    for (auto& th : pool)
        th.join();
}

std::string block_text(const BlockReduction& r)
{
    if (r.blocks.empty()) return "none";
    std::string s;
    for (const auto& b : r.blocks) {
        if (!s.empty()) s += "; ";
        s += r.modes[b.a].label + "-" + r.modes[b.b].label + " " +
             (b.kind == BlockKind::matched ? "matched" : "partial") + " (kappa " + f12(b.params.kappa_per_m) +
             " rad/m, |dbeta| L " + f12(std::abs(b.params.delta_beta_per_m) * b.params.length_m) + " rad)";
    }
    return s;
}

// ---------------------------------------------------------------- selftest helpers

PhasePlan random_plan(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> beta(1.5e7, 1.8e7), phi(-10.0, 10.0), ld(0.0, 0.05);
    std::uniform_int_distribution<int> q(0, 2);
    PhasePlan p;
    p.beta_eTM = beta(rng);
    p.beta_oTM = beta(rng);
    p.beta_eTE = beta(rng);
    p.beta_oTE = beta(rng);
    p.beta_prime = beta(rng);
    p.beta_double_prime = beta(rng);
    p.phi_A = phi(rng);
    p.LD_m = ld(rng);
    p.q1 = 2 * q(rng) + 1;
    p.q2 = 2 * q(rng) + 1;
    p.q3 = 2 * q(rng) + 1;
    return p;
}

Vec4 random_state(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Vec4 v;
    for (int i = 0; i < 4; ++i)
        v(i) = cd(g(rng), g(rng));
    return v.normalized();
}

struct Check {
    std::string name;
    long long samples = 0;
    double worst = 0.0;
    double tol = 0.0;
    bool pass() const { return worst < tol; }
};

}  // namespace

// ---------------------------------------------------------------- dispersion

int run_dispersion(const Common& c, const std::string& cmdline, const DispersionArgs& a)
{
    if (!(a.w_step_um > 0.0)) throw ConfigError("--w-step must be positive");
    if (!(a.w_min_um > 0.0)) throw ConfigError("--w-min must be positive");
    const Polarization pol = parse_polarization(a.pol);
    const Setup setup = load_material(c);
    const ModeSolver solver(setup.material);
    Run run = make_run(c, cmdline, setup.bytes);

    std::vector<double> widths;
    if (a.w_min_um <= a.w_max_um) {
        const auto n = static_cast<std::size_t>(std::floor((a.w_max_um - a.w_min_um) / a.w_step_um + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i)
            widths.push_back(a.w_min_um + static_cast<double>(i) * a.w_step_um);
    }

    struct Row {
        std::optional<GuidedMode> m[2];
        std::string error;
    };
    std::vector<Row> rows(widths.size());
    parallel_rows(widths.size(), [&](std::size_t i) {
        try {
            for (int m = 0; m < 2; ++m)
                rows[i].m[m] = solver.try_effective_index({widths[i], std::nullopt}, a.lambda_um, pol, m);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });

    const double nb = setup.material.bulk_index(a.lambda_um, pol);
    const double k0nb = units::wavenumber_per_m(a.lambda_um) * nb;

    // Width whose even mode matches the odd mode of w1.
    std::optional<double> w2;
    std::string match_note;
    try {
        const auto odd = solver.try_effective_index({a.w1_um, std::nullopt}, a.lambda_um, pol, 1);
        if (!odd) {
            match_note = "none (odd mode of w1 = " + f12(a.w1_um) + " um is not guided)";
        } else {
            w2 = find_phasematch_width(solver, odd->beta_per_m, a.lambda_um, pol, 0);
            match_note = w2 ? "even mode at w = " + f12(*w2) + " um matches the odd mode of w1 = " + f12(a.w1_um) +
                                  " um (beta " + f12(odd->beta_per_m) + " rad/m)"
                            : "none (no even-mode width reaches the odd mode of w1 = " + f12(a.w1_um) + " um)";
        }
    } catch (const std::exception& e) {
        match_note = std::string("not computed: ") + e.what();
    }
    auto nearest = [&](std::optional<double> target) -> long long {
        if (!target || widths.empty()) return -1;
        std::size_t best = 0;
        for (std::size_t i = 1; i < widths.size(); ++i)
            if (std::abs(widths[i] - *target) < std::abs(widths[best] - *target)) best = i;
        return std::abs(widths[best] - *target) <= 0.5 * a.w_step_um + 1e-12 ? static_cast<long long>(best) : -1;
    };
    const long long at_w1 = nearest(a.w1_um);
    const long long at_w2 = nearest(w2);

    Table t;
    t.name = "dispersion";
    t.units = "w_um um; neff dimensionless; beta rad/m; nbeta = beta / (k0 n_b) dimensionless";
    t.note("lambda_um", f12(a.lambda_um));
    t.note("pol", std::string(to_string(pol)));
    t.note("n_b", f12(nb) + " (bulk index at lambda and pol)");
    t.note("phase_match", match_note);
    t.columns = {"w_um", "neff_m0", "neff_m1", "beta_m0", "beta_m1", "nbeta_m0", "nbeta_m1", "mark", "error"};
    for (std::size_t i = 0; i < widths.size(); ++i) {
        std::vector<Cell> r{widths[i]};
        for (int m = 0; m < 2; ++m)
            r.push_back(rows[i].m[m] ? Cell(rows[i].m[m]->n_eff) : Cell());
        for (int m = 0; m < 2; ++m)
            r.push_back(rows[i].m[m] ? Cell(rows[i].m[m]->beta_per_m) : Cell());
        for (int m = 0; m < 2; ++m)
            r.push_back(rows[i].m[m] ? Cell(rows[i].m[m]->beta_per_m / k0nb) : Cell());
        std::string mark;
        if (static_cast<long long>(i) == at_w1) mark = "w1-odd";
        if (static_cast<long long>(i) == at_w2) mark += mark.empty() ? "match-even" : " match-even";
        r.push_back(mark.empty() ? Cell() : Cell(mark));
        r.push_back(rows[i].error.empty() ? Cell() : Cell(rows[i].error));
        t.rows.push_back(std::move(r));
    }
    t.report = {{"w1_um", a.w1_um}, {"w2_um", w2 ? nlohmann::json(*w2) : nlohmann::json(nullptr)}};
    emit(run, t);
    return exit_ok;
}

// ---------------------------------------------------------------- coupler-evolution

int run_coupler_evolution(const Common& c, const std::string& cmdline, const EvolutionArgs& a)
{
    if (a.points < 1) throw ConfigError("--points must be at least 1");
    Polarization pol = Polarization::TM;
    int in_mode = 0;
    if (a.input == "tm-even") {
    } else if (a.input == "tm-odd") {
        in_mode = 1;
    } else if (a.input == "te-even") {
        pol = Polarization::TE;
    } else if (a.input == "te-odd") {
        pol = Polarization::TE;
        in_mode = 1;
    } else {
        throw ConfigError("--input must be tm-even, tm-odd, te-even or te-odd");
    }

    const Setup setup = load_material(c);
    DeviceInput d;
    std::string dev_bytes;
    if (a.device)
        d = device_from_json(read_json_file(*a.device, &dev_bytes));
    else
        d.tune = true;  // the default coupler at its crossing
    const ModeSolver solver(setup.material);
    Run run = make_run(c, cmdline, setup.bytes + dev_bytes);

    Table t;
    t.name = "coupler_evolution";
    t.units = "z_mm mm; amplitudes |a| normalized to the input; power dimensionless";
    t.note("input", a.input);
    t.note("lambda_um", f12(d.lambda_um));

    BlockReduction red;
    if (d.kind == DeviceInput::Kind::tmw_coupler) {
        TwoModeCouplerSpec spec = d.coupler;
        if (d.tune) {
            const auto tune = tune_tmw_coupler(solver, spec, d.lambda_um);
            spec = tune.spec;
            t.note("crossing_voltage_V", f12(tune.crossing_voltage_V));
            t.note("kappa_cross_per_m", f12(tune.kappa_cross_per_m));
            t.note("coupling_order", std::to_string(tune.q));
        }
        const auto model = build_tmw_coupler(solver, spec, d.lambda_um, pol);
        red = model.reduction;
        t.note("device", "two-mode coupler");
        t.note("voltage_V", f12(spec.voltage_V));
        t.note("electrode_length_mm", f12(spec.electrode_length_mm));
        t.report = {{"device", to_json(spec)}};
    } else {
        const ModeAnalyzerSpec spec = d.design ? design_analyzer(solver, d.analyzer, d.lambda_um) : d.analyzer;
        const auto model = build_analyzer(solver, spec, d.lambda_um, pol);
        red = model.reduction;
        t.note("device", "mode analyzer");
        t.note("smw_width_um", f12(spec.smw_width_um));
        t.note("coupling_length_mm", f12(spec.coupling_length_mm));
        t.report = {{"device", to_json(spec)}};
    }
    t.note("blocks", block_text(red));

    const int n = static_cast<int>(red.modes.size());
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(n);
    in(in_mode) = 1.0;
    t.columns = {"z_mm"};
    for (const auto& m : red.modes)
        t.columns.push_back("amp_" + m.label);
    t.columns.push_back("total_power");
    const double L = red.length_m;
    for (int i = 0; i < a.points; ++i) {
        const double z = a.points == 1 ? L : L * i / (a.points - 1);
        const Eigen::VectorXcd out = red.unitary_at(z) * in;
        std::vector<Cell> r{units::m_to_mm(z)};
        for (int k = 0; k < n; ++k)
            r.push_back(std::abs(out(k)));
        r.push_back(out.squaredNorm());
        t.rows.push_back(std::move(r));
    }
    emit(run, t);
    return exit_ok;
}

// ---------------------------------------------------------------- rotator-curve

int run_rotator_curve(const Common& c, const std::string& cmdline, const RotatorArgs& a)
{
    if (a.points < 1) throw ConfigError("--points must be at least 1");
    const Setup setup = load_material(c);
    RotatorInput in;
    std::string bytes;
    if (a.rotator) in = rotator_from_json(read_json_file(*a.rotator, &bytes));
    Run run = make_run(c, cmdline, setup.bytes + bytes);

    RotatorModel m;
    if (a.solver_index && !in.n_index) {
        const ModeSolver solver(setup.material);
        m = RotatorModel::from_solver(solver, in.spec);
    } else {
        m.spec = in.spec;
        m.r_pm_per_V = setup.material.pockels_pm_per_V(in.spec.pol);
    }
    if (in.n_index) m.n_index = *in.n_index;
    if (in.r_pm_per_V) m.r_pm_per_V = *in.r_pm_per_V;
    m.error = in.error;

    Table t;
    t.name = "rotator_curve";
    t.units = "theta rad; voltages V; residual dimensionless";
    t.note("n_index", f12(m.n_index));
    t.note("r_pm_per_V", f12(m.r_pm_per_V));
    t.note("kappa_per_m", f12(m.kappa_per_m()));
    t.note("delta_beta_per_volt", f12(m.delta_beta_per_volt()) + " rad/m/V");
    t.columns = {"theta_rad", "v1_V", "v2_V", "v3_V", "residual"};

    bool monotone = true, round_trip = true, endpoint = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < a.points; ++i) {
        const double theta = a.points == 1 ? 0.0 : pi * i / (a.points - 1);
        const auto v = rotator_voltages(theta, m);
        const double res = phase_insensitive_distance(MatX(rotator_unitary(v, m)), MatX(rotation(theta)));
        monotone = monotone && v.v1 < prev;
        round_trip = round_trip && res < 1e-9;
        if (i == a.points - 1 && a.points > 1)
            endpoint = std::abs(v.v1) < 1e-12 && std::abs(v.v2 + v.v3) < 1e-9;
        prev = v.v1;
        t.rows.push_back({theta, v.v1, v.v2, v.v3, res});
    }
    const bool ok = monotone && round_trip && endpoint;
    t.note("v1_strictly_decreasing", yes_no(monotone));
    t.note("round_trip_below_1e-9", yes_no(round_trip));
    t.note("v1_zero_at_pi", a.points > 1 ? yes_no(endpoint) : "not sampled");
    emit(run, t);
    if (!ok) std::cerr << "rotator-curve: verification failed\n";
    return ok ? exit_ok : exit_verification;
}

// ---------------------------------------------------------------- cnot-verify

int run_cnot_verify(const Common& c, const std::string& cmdline, const CnotArgs& a)
{
    const Setup setup = load_material(c);
    CircuitInput ci;
    std::string bytes;
    if (a.circuit)
        ci = circuit_from_json(read_json_file(*a.circuit, &bytes));
    else
        ci.design = CnotDesignOptions{};
    Run run = make_run(c, cmdline, setup.bytes + bytes);

    Table t;
    t.name = "cnot_verify";
    t.units = "phase rad; weight dimensionless; lengths mm";
    t.report = nlohmann::json::object();

    CnotCircuit circuit;
    bool solved = true;
    std::string solve_report;
    if (ci.ideal) {
        circuit.ideal_phases = true;
        t.note("circuit", "ideal phases");
    } else if (ci.design) {
        const ModeSolver solver(setup.material);
        const CnotDesign d = design_cnot(solver, *ci.design);
        circuit = d.circuit;
        PhaseSolution sol = d.solution;
        if (ci.convention == PhaseConvention::printed) {
            sol = phase_equalize(d.solution.plan, d.bounds, PhaseConvention::printed);
            circuit.plan = sol.plan;
        }
        solved = sol.feasible;
        solve_report = sol.report;
        t.note("circuit", "designed from the solver");
        t.note("tm_analyzer", "smw " + f12(d.tm_analyzer.smw_width_um) + " um, L2 " +
                                  f12(d.tm_analyzer.coupling_length_mm) + " mm");
        t.note("te_analyzer", "smw " + f12(d.te_analyzer.smw_width_um) + " um, L2 " +
                                  f12(d.te_analyzer.coupling_length_mm) + " mm");
        t.note("coupler", f12(d.coupler.spec.voltage_V) + " V over " + f12(d.coupler.spec.electrode_length_mm) +
                              " mm, TM transfer " + f12(d.coupler.tm_transfer) + ", TE passthrough " +
                              f12(d.coupler.te_passthrough));
        t.note("device_transmission", f12(d.device_transmission[0]) + " " + f12(d.device_transmission[1]) + " " +
                                          f12(d.device_transmission[2]) + " " + f12(d.device_transmission[3]));
        t.report["tm_analyzer"] = to_json(d.tm_analyzer);
        t.report["te_analyzer"] = to_json(d.te_analyzer);
        t.report["coupler"] = to_json(d.coupler.spec);
    } else {
        if (ci.solve_lengths) {
            const auto sol = phase_equalize(*ci.plan, ci.bounds, ci.convention);
            circuit.plan = sol.plan;
            solved = sol.feasible;
            solve_report = sol.report;
        } else {
            circuit.plan = *ci.plan;
            solve_report = "lengths taken as given";
        }
        t.note("circuit", "explicit phase plan");
    }
    if (ci.lengths_mm) {
        circuit.plan.l1_m = units::mm_to_m((*ci.lengths_mm)[0]);
        circuit.plan.l2_m = units::mm_to_m((*ci.lengths_mm)[1]);
        circuit.plan.l3_m = units::mm_to_m((*ci.lengths_mm)[2]);
        solve_report += "; lengths overridden";
    }
    circuit.phase_errors = ci.phase_errors_rad;
    if (!solve_report.empty()) t.note("phase_plan", solve_report);
    t.note("convention", std::string(to_string(ci.convention)));

    const Mat4 u = circuit.unitary();
    const TruthTable tt = truth_table(u);
    const double r = 1.0 / std::sqrt(2.0);
    const Vec4 ent = u * JointState::product(Vec2(r, r), Vec2(1.0, 0.0)).alpha;
    const double conc = concurrence(JointState{ent.normalized()});
    bool te_no_flip = true;
    for (int k : {eTE, oTE})
        te_no_flip = te_no_flip && std::norm(u(k, k)) >= (1.0 - 1e-6) * u.col(k).squaredNorm();

    if (!ci.ideal) {
        const auto res = circuit.plan.residuals(PhaseConvention::physical);
        t.note("residual_eTM_eTE_rad", f12(res[0]));
        t.note("residual_eTM_oTE_rad", f12(res[1]));
        t.note("residual_oTM_eTM_rad", f12(res[2]));
        t.note("lengths_mm", f12(units::m_to_mm(circuit.plan.l1_m)) + " " + f12(units::m_to_mm(circuit.plan.l2_m)) +
                                 " " + f12(units::m_to_mm(circuit.plan.l3_m)));
        t.report["plan"] = to_json(circuit.plan);
    }
    const bool conc_ok = std::abs(conc - 1.0) <= 1e-9;
    const bool ok = solved && tt.is_cnot && conc_ok && te_no_flip;
    t.note("fidelity", f12(tt.fidelity));
    t.note("concurrence", f12(conc));
    t.note("te_control_no_flip", yes_no(te_no_flip));
    t.note("verdict", ok ? "PASS" : "FAIL");
    t.report["truth_table"] = tt.to_json();

    t.columns = {"input", "expected_output", "weight", "phase_rad", "ok"};
    const int flip[4] = {oTM, eTM, eTE, oTE};
    for (int k = 0; k < 4; ++k)
        t.rows.push_back({std::string(joint_labels[k]), std::string(joint_labels[flip[k]]), tt.target_weight[k],
                          tt.phase[k], std::string(tt.ok[k] ? "yes" : "no")});
    emit(run, t);
    if (!ok) {
        std::cerr << "cnot-verify: FAIL (is_cnot " << yes_no(tt.is_cnot) << ", fidelity " << f12(tt.fidelity)
                  << ", concurrence " << f12(conc) << ")\n";
        if (!ci.ideal) {
            const auto res = circuit.plan.residuals(PhaseConvention::physical);
            std::cerr << "  phase residuals (eTM-eTE, eTM-oTE, oTM-eTM): " << f12(res[0]) << " " << f12(res[1])
                      << " " << f12(res[2]) << " rad\n";
        }
    }
    return ok ? exit_ok : exit_verification;
}

// ---------------------------------------------------------------- phase-plan

int run_phase_plan(const Common& c, const std::string& cmdline, const PlanArgs& a)
{
    const Setup setup = load_material(c);
    std::string bytes;
    PhaseSolution sol;
    PhaseConvention conv = PhaseConvention::physical;
    if (a.plan) {
        const PlanInput in = plan_input_from_json(read_json_file(*a.plan, &bytes));
        conv = in.convention;
        sol = phase_equalize(in.plan, in.bounds, conv);
    } else {
        const ModeSolver solver(setup.material);
        sol = design_cnot(solver, CnotDesignOptions{}).solution;
    }
    Run run = make_run(c, cmdline, setup.bytes + bytes);

    Table t;
    t.name = "phase_plan";
    t.units = "lengths mm; phases rad, relative to e,TM and wrapped";
    t.note("convention", std::string(to_string(conv)));
    t.note("report", sol.report);
    t.columns = {"quantity", "value"};
    const auto& p = sol.plan;
    t.rows.push_back({std::string("l1_mm"), units::m_to_mm(p.l1_m)});
    t.rows.push_back({std::string("l2_mm"), units::m_to_mm(p.l2_m)});
    t.rows.push_back({std::string("l3_mm"), units::m_to_mm(p.l3_m)});
    t.rows.push_back({std::string("total_mm"), units::m_to_mm(sol.total_length_m)});
    const auto ph = p.phases(conv);
    for (int k = 0; k < 4; ++k)
        t.rows.push_back({"phase_" + std::string(k == eTM ? "eTM" : k == oTM ? "oTM" : k == eTE ? "eTE" : "oTE"),
                          wrap_phase(ph[k] - ph[eTM])});
    t.rows.push_back({std::string("residual_eTM_eTE"), sol.residual_rad[0]});
    t.rows.push_back({std::string("residual_eTM_oTE"), sol.residual_rad[1]});
    t.rows.push_back({std::string("residual_oTM_eTM"), sol.residual_rad[2]});
    t.rows.push_back({std::string("feasible"), std::string(yes_no(sol.feasible))});
    t.report = {{"plan", to_json(p)}, {"feasible", sol.feasible}};
    emit(run, t);
    bool ok = sol.feasible;
    for (double r : sol.residual_rad)
        ok = ok && std::abs(r) < 1e-9;
    if (!ok) std::cerr << "phase-plan: " << sol.report << "\n";
    return ok ? exit_ok : exit_verification;
}

// ---------------------------------------------------------------- selftest

int run_selftest(const Common& c, const std::string& cmdline)
{
    const Setup setup = load_material(c);
    Run run = make_run(c, cmdline, setup.bytes);
    std::mt19937_64 rng(c.seed);

    Table samples;
    samples.name = "selftest_samples";
    samples.units = "kappa rad/m; dbeta rad/m; L mm; power dimensionless; angles rad";
    samples.note("seed", std::to_string(c.seed));
    samples.columns = {"draw", "kappa_per_m", "delta_beta_per_m", "length_mm", "cross_power", "theta_rad", "phi_A_rad"};

    Check unit{"transfer_unitarity", 0, 0.0, 1e-12};
    Check polar{"polar_reconstruction", 0, 0.0, 1e-12};
    Check casc{"cascade_reconstruction", 0, 0.0, 1e-12};
    std::uniform_real_distribution<double> kd(0.0, 500.0), dbd(-2000.0, 2000.0), ld(1e-4, 2e-2);
    for (int i = 0; i < 2000; ++i) {
        const CouplerParams p{kd(rng), dbd(rng), ld(rng)};
        const Mat2 m = transfer_matrix(p);
        const auto f = polar_form(p);
        unit.worst = std::max(unit.worst, unitarity_residual(m));
        polar.worst = std::max(polar.worst, (f.matrix() - m).cwiseAbs().maxCoeff());
        casc.worst = std::max(casc.worst, (cascade_decomposition(p).product() - m).cwiseAbs().maxCoeff());
        if (i < 20)
            samples.rows.push_back({static_cast<long long>(i), p.kappa_per_m, p.delta_beta_per_m,
                                    units::m_to_mm(p.length_m), std::norm(m(1, 0)), f.theta, f.phi_A});
    }
    unit.samples = polar.samples = casc.samples = 2000;

    Check flip{"full_flip", 1, 0.0, 1e-12};
    {
        const double k = 250.0;
        Mat2 want;
        want << 0.0, -J, -J, 0.0;
        flip.worst = (transfer_matrix({k, 0.0, pi / (2 * k)}) - want).cwiseAbs().maxCoeff();
    }
    Check null{"sqrt3pi_null", 1, 0.0, 1e-12};
    {
        const double k = 300.0, L = pi / (2 * k);
        null.worst = std::abs(std::norm(transfer_matrix({k, std::sqrt(3.0) * pi / L, L})(0, 0)) - 1.0);
    }

    Check rot{"rotator_round_trip", 50, 0.0, 1e-9};
    {
        const RotatorModel m;
        std::uniform_real_distribution<double> th(0.0, pi);
        for (int i = 0; i < 50; ++i) {
            const double theta = th(rng);
            rot.worst = std::max(rot.worst, phase_insensitive_distance(
                                                MatX(rotator_unitary(rotator_voltages(theta, m), m)),
                                                MatX(rotation(theta))));
        }
    }
    Check pauli{"pauli_square", 2, 0.0, 1e-6};
    {
        const RotatorModel m;
        const Mat2 x = rotator_unitary(rotator_voltages(pi, m), m);
        const double k = 222.0;
        const CouplerParams cz{k, 0.0, pi / (2 * k)};
        const Mat2 z = sigma_z_cascade(cz, cz).u;
        pauli.worst = std::max(phase_insensitive_distance(MatX(x * x), MatX(Mat2::Identity())),
                               phase_insensitive_distance(MatX(z * z), MatX(Mat2::Identity())));
    }

    Check plug{"phase_plan_plugback", 100, 0.0, 1e-9};
    PhasePlan solved_plan;
    {
        std::uniform_real_distribution<double> mn(0.0, 0.03);
        for (int i = 0; i < 100; ++i) {
            const auto sol = phase_equalize(random_plan(rng), LengthBounds{mn(rng), mn(rng), mn(rng), {}, {}, {}});
            if (!sol.feasible) {
                plug.worst = std::numeric_limits<double>::infinity();
                continue;
            }
            for (double r : sol.plan.residuals(PhaseConvention::physical))
                plug.worst = std::max(plug.worst, std::abs(r));
            if (i == 0) solved_plan = sol.plan;
        }
    }
    Check perm{"cnot_permutation", 100, 0.0, 1e-9};
    Check conc{"cnot_concurrence", 1, 0.0, 1e-9};
    {
        CnotCircuit circuit;
        circuit.plan = solved_plan;
        const Mat4 u = circuit.unitary();
        const cd g = u(oTM, eTM);
        for (int i = 0; i < 100; ++i) {
            const Vec4 in = random_state(rng);
            const Vec4 out = u * in / g;
            Vec4 want = in;
            std::swap(want(0), want(1));
            perm.worst = std::max(perm.worst, (out - want).cwiseAbs().maxCoeff());
        }
        const double r = 1.0 / std::sqrt(2.0);
        conc.worst = std::abs(concurrence(JointState{u * JointState::product(Vec2(r, r), Vec2(1.0, 0.0)).alpha}) - 1.0);
    }

    Table t;
    t.name = "selftest";
    t.units = "worst and tolerance in the unit of each check (matrix entries, rad or concurrence)";
    t.note("seed", std::to_string(c.seed));
    t.columns = {"check", "samples", "worst", "tolerance", "pass"};
    bool ok = true;
    for (const Check* k : {&unit, &polar, &casc, &flip, &null, &rot, &pauli, &plug, &perm, &conc}) {
        ok = ok && k->pass();
        t.rows.push_back({k->name, k->samples, k->worst, k->tol, std::string(k->pass() ? "yes" : "no")});
    }
    t.note("verdict", ok ? "PASS" : "FAIL");
    emit(run, t);
    emit(run, samples);
    if (!ok) std::cerr << "selftest: FAIL\n";
    return ok ? exit_ok : exit_verification;
}

}  // namespace mqsim::cli
