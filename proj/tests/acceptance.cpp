// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
// Exit status is 0 only when the failing set equals --expect-fail exactly.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "mqsim/devices.hpp"
#include "oracles.hpp"

using namespace mqsim;
namespace fs = std::filesystem;

namespace {

constexpr double pi = units::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
        pass = pass && ok;
    }
};

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const ModeSolver& solver()
{
    static const ModeSolver s(MaterialModel::congruent_lithium_niobate());
    return s;
}

double maxabs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------- 1

Outcome transfer_forms()
{
    Outcome o;
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> k(0.0, 500.0), db(-2000.0, 2000.0), L(1e-4, 2e-2);
    double w_polar = 0, w_casc = 0, w_unit = 0, w_oracle = 0;
    for (int i = 0; i < 10000; ++i) {
        const CouplerParams p{k(rng), db(rng), L(rng)};
        const Mat2 t = transfer_matrix(p);
        w_polar = std::max(w_polar, maxabs(polar_form(p).matrix() - t));
        w_casc = std::max(w_casc, maxabs(cascade_decomposition(p).product() - t));
        w_unit = std::max(w_unit, unitarity_residual(t));
        w_oracle = std::max(w_oracle, maxabs(oracle::cmt_reduced(p.kappa_per_m, p.delta_beta_per_m, p.length_m) - t));
    }
    o.require(w_polar < 1e-12, "polar " + sci(w_polar));
    o.require(w_casc < 1e-12, "cascade " + sci(w_casc));
    o.require(w_unit < 1e-12, "unitarity " + sci(w_unit));
    o.require(w_oracle < 1e-10, "matrix-exponential oracle " + sci(w_oracle));
    return o;
}

// ---------------------------------------------------------------- 2

Outcome special_cases()
{
    Outcome o;
    const double kappa = 250.0;
    Mat2 flip;
    flip << 0.0, -J, -J, 0.0;
    const double w_flip = maxabs(transfer_matrix({kappa, 0.0, pi / (2 * kappa)}) - flip);
    o.require(w_flip < 1e-12, "flip " + sci(w_flip));

    double w_diag = 0;
    for (int p = 1; p <= 4; ++p)
        for (double db : {100.0, -400.0, 900.0}) {
            const double g = std::hypot(180.0, 0.5 * db);
            const CouplerParams c{180.0, db, p * pi / g};
            const Mat2 t = transfer_matrix(c);
            Mat2 want = Mat2::Zero();
            want(0, 0) = std::pow(-1.0, p) * std::exp(J * (0.5 * db * c.length_m));
            want(1, 1) = std::pow(-1.0, p) * std::exp(-J * (0.5 * db * c.length_m));
            w_diag = std::max(w_diag, maxabs(t - want));
        }
    o.require(w_diag < 1e-12, "gamma L = p pi diagonal " + sci(w_diag));

    double w_id = 0;
    for (double db : {0.0, 350.0, -1234.0})
        w_id = std::max(w_id, maxabs(transfer_matrix({0.0, db, 3.7e-3}) - Mat2::Identity()));
    o.require(w_id < 1e-12, "kappa = 0 identity " + sci(w_id));
    return o;
}

// ---------------------------------------------------------------- 3

Outcome null_condition()
{
    Outcome o;
    double w = 0;
    for (double kappa : {100.0, 300.0, 907.97})
        for (double sign : {1.0, -1.0}) {
            const double L = pi / (2 * kappa);
            const Mat2 t = transfer_matrix({kappa, sign * std::sqrt(3.0) * pi / L, L});
            w = std::max(w, std::abs(std::norm(t(0, 0)) - 1.0));
        }
    o.require(w < 1e-12, "launch-guide power deviation " + sci(w));
    return o;
}

// ---------------------------------------------------------------- 4

Outcome rotator()
{
    Outcome o;
    const auto m = RotatorModel::from_solver(solver(), ModeRotatorSpec{});
    double worst = 0, prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    RotatorVoltages last;
    for (int i = 0; i < 50; ++i) {
        const double theta = pi * i / 49.0;
        const auto v = rotator_voltages(theta, m);
        decreasing = decreasing && v.v1 < prev;
        prev = v.v1;
        worst = std::max(worst, phase_insensitive_distance(MatX(rotator_unitary(v, m)), MatX(rotation(theta))));
        last = v;
    }
    o.require(worst < 1e-9, "round trip " + sci(worst));
    o.require(decreasing, std::string("V1 strictly decreasing (") + sci(rotator_voltages(0.0, m).v1) + " V at 0)");
    o.require(last.v1 == 0.0 && std::abs(last.v2 + last.v3) < 1e-12,
              "V1(pi) = " + sci(last.v1) + ", V2 + V3 = " + sci(last.v2 + last.v3));
    return o;
}

// ---------------------------------------------------------------- 5

Outcome pauli()
{
    Outcome o;
    const auto m = RotatorModel::from_solver(solver(), ModeRotatorSpec{});
    const Mat2 x = rotator_unitary(rotator_voltages(pi, m), m);
    const double wx = phase_insensitive_distance(MatX(x * x), MatX(Mat2::Identity()));
    o.require(wx < 1e-6, "sigma_x^2 " + sci(wx));

    // sigma_z by a two-mode guide of length pi / |beta_e - beta_o|
    const WaveguideGeometry g{5.6, std::nullopt};
    const double be = solver().effective_index(g, 0.812, Polarization::TM, 0).beta_per_m;
    const double bo = solver().effective_index(g, 0.812, Polarization::TM, 1).beta_per_m;
    const double L = sigma_z_tmw_length(be, bo);
    Mat2 z = Mat2::Zero();
    z(0, 0) = std::exp(-J * (be * L));
    z(1, 1) = std::exp(-J * (bo * L));
    Mat2 zref = Mat2::Identity();
    zref(1, 1) = -1.0;
    const double wz_form = phase_insensitive_distance(MatX(z), MatX(zref));
    const double wz = phase_insensitive_distance(MatX(z * z), MatX(Mat2::Identity()));
    o.require(wz < 1e-6 && wz_form < 1e-6, "sigma_z (two-mode guide)^2 " + sci(wz));

    // sigma_z by analyzer and combiner at the designed coupling strength
    const auto spec = design_analyzer(solver(), ModeAnalyzerSpec{}, 0.812);
    const auto model = build_analyzer(solver(), spec, 0.812, Polarization::TM);
    const double k = model.odd_block.kappa_per_m;
    const CouplerParams c{k, 0.0, pi / (2 * k)};
    const Mat2 zc = sigma_z_cascade(c, c).u;
    const double wc = phase_insensitive_distance(MatX(zc * zc), MatX(Mat2::Identity()));
    o.require(wc < 1e-6, "sigma_z (analyzer + combiner)^2 " + sci(wc));
    return o;
}

// ---------------------------------------------------------------- 6

Outcome solver_parity()
{
    Outcome o;
    const auto& s = solver();
    const double bo = s.effective_index({5.6, std::nullopt}, 0.812, Polarization::TM, 1).beta_per_m;
    const auto w2 = find_phasematch_width(s, bo, 0.812, Polarization::TM, 0);
    o.require(w2 && std::abs(*w2 - 3.4) <= 0.5, "phase-match width " + (w2 ? sci(*w2) : std::string("none")) + " um");
    const int n22 = s.guided_mode_count({2.2, std::nullopt}, 0.812, Polarization::TM);
    o.require(n22 == 1, "2.2 um guides " + std::to_string(n22) + " TM mode(s)");
    const int n56 = s.guided_mode_count({5.6, std::nullopt}, 0.812, Polarization::TM);
    o.require(n56 == 2, "5.6 um guides " + std::to_string(n56) + " TM mode(s)");
    bool mono = true;
    for (int m = 0; m < 2; ++m) {
        double prev = 0.0;
        for (double w = 2.0; w <= 8.0 + 1e-9; w += 0.1) {
            const auto g = s.try_effective_index({w, std::nullopt}, 0.812, Polarization::TM, m);
            if (!g) continue;
            mono = mono && g->beta_per_m > prev;
            prev = g->beta_per_m;
        }
    }
    o.require(mono, "beta(w) increasing on [2, 8] um");
    return o;
}

// ---------------------------------------------------------------- 7

Outcome two_mode_coupler()
{
    Outcome o;
    const auto& s = solver();
    std::vector<double> volts;
    for (double v = 0.0; v <= 200.0; v += 10.0)
        volts.push_back(v);
    const auto sw4 = voltage_sweep_pair(s, 4.0, 4.0, 0.812, Polarization::TM, volts, +1);
    const auto v4 = find_crossing_voltage(s, sw4);
    std::vector<double> neg;
    for (double v : volts)
        neg.push_back(-v);
    const auto v4r = find_crossing_voltage(s, voltage_sweep_pair(s, 4.0, 4.0, 0.812, Polarization::TM, neg, -1));
    o.require(v4 && std::isfinite(*v4) && *v4 > 0.0 && v4r && *v4r < 0.0,
              "w = 4 um crossing " + (v4 ? sci(*v4) : std::string("none")) + " V, reversed " +
                  (v4r ? sci(*v4r) : std::string("none")) + " V");

    const auto t = tune_tmw_coupler(s, TwoModeCouplerSpec{}, 0.812);
    o.require(t.crossing_voltage_V > 0.0 && t.crossing_voltage_V <= 100.0,
              "w = 5.6 um crossing " + sci(t.crossing_voltage_V) + " V");
    o.require(t.tm_transfer >= 0.999, "TM even1 -> odd2 " + std::to_string(t.tm_transfer) + " at L1 = " +
                                          sci(t.spec.electrode_length_mm) + " mm");
    o.require(t.te_passthrough >= 0.99, "TE even passthrough " + std::to_string(t.te_passthrough));
    return o;
}

// ---------------------------------------------------------------- 8

Outcome cnot()
{
    Outcome o;
    const auto d = design_cnot(solver(), CnotDesignOptions{});
    const Mat4 u = d.circuit.unitary();
    const auto tt = truth_table(u);
    o.require(tt.is_cnot && tt.fidelity >= 1.0 - 1e-6, "fidelity 1 - " + sci(1.0 - tt.fidelity));

    std::mt19937_64 rng(1008);
    const cd g = u(oTM, eTM);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const Vec4 in = oracle::random_state4(rng);
        const Vec4 out = u * in / g;
        Vec4 want = in;
        std::swap(want(0), want(1));
        worst = std::max(worst, (out - want).cwiseAbs().maxCoeff());
    }
    o.require(worst < 1e-9, "amplitude permutation " + sci(worst));

    const double r = 1.0 / std::sqrt(2.0);
    const double c = concurrence(JointState{u * JointState::product(Vec2(r, r), Vec2(1.0, 0.0)).alpha});
    o.require(std::abs(c - 1.0) <= 1e-9, "concurrence 1 - " + sci(1.0 - c));
    return o;
}

// ---------------------------------------------------------------- 9

Outcome phase_plans()
{
    Outcome o;
    std::mt19937_64 rng(1009);
    std::uniform_real_distribution<double> beta(1.5e7, 1.8e7), phi(-10.0, 10.0), ld(0.0, 0.05), mn(0.0, 0.03);
    std::uniform_int_distribution<int> q(0, 2);
    double worst = 0;
    int infeasible = 0;
    for (int i = 0; i < 100; ++i) {
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
        const auto sol = phase_equalize(p, LengthBounds{mn(rng), mn(rng), mn(rng), {}, {}, {}});
        if (!sol.feasible) {
            ++infeasible;
            continue;
        }
        const auto& s = sol.plan;
        const auto ph = oracle::plan_phases(s.l1_m, s.l2_m, s.l3_m, p.LD_m, p.q1, p.q2, p.q3, p.phi_A, p.beta_prime,
                                            p.beta_double_prime, p.beta_eTM, p.beta_oTM, p.beta_eTE, p.beta_oTE, 1.0);
        for (long double x : {ph.oTM, ph.eTE, ph.oTE})
            worst = std::max(worst, std::abs(oracle::wrap(x - ph.eTM)));
    }
    o.require(infeasible == 0, std::to_string(100 - infeasible) + " of 100 solved");
    o.require(worst < 1e-9, "plug-back " + sci(worst) + " rad");
    return o;
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism(const std::string& cli)
{
    Outcome o;
    const fs::path base = fs::temp_directory_path() / ("mqsim_acceptance_" + std::to_string(::getpid()));
    const fs::path a = base / "a", b = base / "b";
    fs::remove_all(base);
    auto run = [&](const fs::path& dir) {
        const std::string cmd = "\"" + cli + "\" selftest --seed 20240611 --out \"" + dir.string() + "\" > /dev/null";
        return std::system(cmd.c_str());
    };
    const int ra = run(a), rb = run(b);
    o.require(ra == 0 && rb == 0, "selftest exit " + std::to_string(ra) + ", " + std::to_string(rb));
    std::set<std::string> fa, fb;
    if (fs::exists(a))
        for (const auto& e : fs::directory_iterator(a))
            fa.insert(e.path().filename().string());
    if (fs::exists(b))
        for (const auto& e : fs::directory_iterator(b))
            fb.insert(e.path().filename().string());
    bool same = !fa.empty() && fa == fb;
    for (const auto& f : fa)
        same = same && fb.count(f) && !slurp(a / f).empty() && slurp(a / f) == slurp(b / f);
    o.require(same, std::to_string(fa.size()) + " artifacts byte-identical");
    fs::remove_all(base);
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::vector<int> expect;
    std::string cli = MQSIM_CLI;
    app.add_option("--expect-fail", expect, "Criteria known to fail")->delimiter(',');
    app.add_option("--cli", cli, "Path of the mqsim executable");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char* what;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "transfer matrix, polar and cascade forms agree", 5.0, transfer_forms},
        {2, "special cases (flip, gamma L = p pi, kappa = 0)", 0.0, special_cases},
        {3, "sqrt(3) pi mismatch transfers no power", 0.0, null_condition},
        {4, "mode rotator realizes R(theta)", 10.0, rotator},
        {5, "Pauli devices square to the identity", 0.0, pauli},
        {6, "mode-solver widths and mode counts", 60.0, solver_parity},
        {7, "two-mode electro-optic coupler", 120.0, two_mode_coupler},
        {8, "CNOT truth table, permutation and entanglement", 5.0, cnot},
        {9, "phase equalization plug-back", 5.0, phase_plans},
        {10, "selftest artifacts are deterministic", 0.0, [&] { return determinism(cli); }},
    };

    std::set<int> failing;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0) o.require(secs < c.budget_s, "runtime " + sci(secs) + " s < " + sci(c.budget_s) + " s");
        else o.detail += "; runtime " + sci(secs) + " s";
        if (!o.pass) failing.insert(c.id);
        std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.what << " (" << o.detail
                  << ")" << std::endl;
    }

    const std::set<int> expected(expect.begin(), expect.end());
    auto list = [](const std::set<int>& s) {
        std::string out;
        for (int i : s)
            out += (out.empty() ? "" : ",") + std::to_string(i);
        return out.empty() ? std::string("none") : out;
    };
    const bool as_expected = failing == expected;
    std::cout << "summary: " << (all.size() - failing.size()) << "/" << all.size() << " pass; failing " << list(failing)
              << "; expected to fail " << list(expected) << (as_expected ? "" : "; MISMATCH") << std::endl;
    return as_expected ? 0 : 1;
}
