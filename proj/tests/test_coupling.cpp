#include "doctest.h"

#include <cmath>
#include <random>

#include "mqsim/coupling.hpp"
#include "mqsim/errors.hpp"
#include "oracles.hpp"

using namespace mqsim;

namespace {

constexpr double pi = units::pi;

double maxabs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

CouplerParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> k(0.0, 500.0), db(-2000.0, 2000.0), L(1e-4, 2e-2);
    return {k(rng), db(rng), L(rng)};
}

const ModeSolver& solver()
{
    static const ModeSolver s(MaterialModel::congruent_lithium_niobate());
    return s;
}

std::vector<double> common_grid(double x0, double x1, double h)
{
    std::vector<double> x;
    for (double v = x0; v <= x1 + 1e-12; v += h)
        x.push_back(v);
    return x;
}

}  // namespace

TEST_CASE("random draws: unitarity, polar and cascade reconstruction")
{
    std::mt19937_64 rng(20240611);
    double worst_unit = 0, worst_polar = 0, worst_cascade = 0, worst_oracle = 0, worst_power = 0, worst_det = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto p = random_params(rng);
        const Mat2 t = transfer_matrix(p);
        worst_unit = std::max(worst_unit, unitarity_residual(t));
        worst_power = std::max(worst_power, std::abs(std::norm(t(0, 0)) + std::norm(t(0, 1)) - 1.0));
        worst_det = std::max(worst_det, std::abs(std::abs(t.determinant()) - 1.0));
        const auto f = polar_form(p);
        REQUIRE(f.theta >= 0.0);
        REQUIRE(f.theta <= pi);
        worst_polar = std::max(worst_polar, maxabs(f.matrix() - t));
        worst_cascade = std::max(worst_cascade, maxabs(cascade_decomposition(p).product() - t));
        worst_oracle = std::max(worst_oracle, maxabs(oracle::cmt_reduced(p.kappa_per_m, p.delta_beta_per_m, p.length_m) - t));
    }
    CHECK(worst_unit < 1e-12);
    CHECK(worst_power < 1e-12);
    CHECK(worst_det < 1e-12);
    CHECK(worst_polar < 1e-12);
    CHECK(worst_cascade < 1e-12);
    CHECK(worst_oracle < 1e-10);
}

TEST_CASE("composition in length")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> frac(0.0, 1.0), beta(1.6e7, 1.8e7);
    double worst = 0, worst_matched = 0;
    for (int i = 0; i < 2000; ++i) {
        auto p = random_params(rng);
        const double L1 = p.length_m * frac(rng);
        CouplerParams a = p, b = p;
        a.length_m = L1;
        b.length_m = p.length_m - L1;
        // Propagation phases included, the matrices compose for any mismatch.
        const double bb = beta(rng);
        const double ba = bb + p.delta_beta_per_m;
        const Mat2 whole = physical_transfer(p, ba, bb);
        worst = std::max(worst, maxabs(physical_transfer(b, ba, bb) * physical_transfer(a, ba, bb) - whole));
        // The reduced matrix composes on its own only when phase matched.
        a.delta_beta_per_m = b.delta_beta_per_m = p.delta_beta_per_m = 0.0;
        worst_matched = std::max(worst_matched, maxabs(transfer_matrix(b) * transfer_matrix(a) - transfer_matrix(p)));
    }
    // beta L reaches 3.6e5 rad here, so the phases themselves carry ~1e-11 of rounding
    CHECK(worst < 1e-10);
    CHECK(worst_matched < 1e-12);

    SUBCASE("reduced matrix composes in the co-moving frame")
    {
        auto p = random_params(rng);
        p.delta_beta_per_m = 800.0;
        const double L1 = 0.3 * p.length_m;
        CouplerParams a = p, b = p;
        a.length_m = L1;
        b.length_m = p.length_m - L1;
        Mat2 shift = Mat2::Zero();
        shift(0, 0) = std::exp(J * (0.5 * p.delta_beta_per_m * L1));
        shift(1, 1) = std::exp(-J * (0.5 * p.delta_beta_per_m * L1));
        CHECK(maxabs(shift * transfer_matrix(b) * shift.adjoint() * transfer_matrix(a) - transfer_matrix(p)) < 1e-12);
    }
}

TEST_CASE("full flip and double flip")
{
    const double kappa = 250.0;
    const CouplerParams p{kappa, 0.0, pi / (2.0 * kappa)};
    Mat2 flip;
    flip << 0.0, -J, -J, 0.0;
    CHECK(maxabs(transfer_matrix(p) - flip) < 1e-12);
    const auto f = polar_form(p);
    CHECK(f.theta == doctest::Approx(pi).epsilon(1e-15));
    CHECK(std::abs(f.phi_A) < 1e-12);
    CHECK(std::abs(f.phi_B) < 1e-12);
    // twice: the input comes back with phase 2 (pi / 2)
    const Mat2 tt = transfer_matrix(p) * transfer_matrix(p);
    CHECK(maxabs(tt + Mat2::Identity()) < 1e-12);
    // odd multiples flip as well, with phase q pi / 2
    const CouplerParams p3{kappa, 0.0, 3 * pi / (2.0 * kappa)};
    CHECK(maxabs(transfer_matrix(p3) + flip) < 1e-12);
}

TEST_CASE("no coupling gives the identity")
{
    for (double db : {0.0, 1.0, -350.0, 12345.0}) {
        const CouplerParams p{0.0, db, 3.7e-3};
        CHECK(maxabs(transfer_matrix(p) - Mat2::Identity()) < 1e-12);
    }
}

TEST_CASE("gamma L = p pi leaves a diagonal matrix")
{
    const double kappa = 180.0;
    for (int p = 1; p <= 4; ++p) {
        for (double db : {100.0, -400.0, 900.0}) {
            const double g = std::hypot(kappa, 0.5 * db);
            const CouplerParams c{kappa, db, p * pi / g};
            const Mat2 t = transfer_matrix(c);
            const double half = 0.5 * db * c.length_m;
            Mat2 expect = Mat2::Zero();
            expect(0, 0) = std::pow(-1.0, p) * std::exp(J * half);
            expect(1, 1) = std::pow(-1.0, p) * std::exp(-J * half);
            CHECK(maxabs(t - expect) < 1e-12);
            const auto f = polar_form(c);
            CHECK(f.theta < 1e-12);
            CHECK(std::abs(wrap_phase(f.phi_A - half - (p % 2 ? pi : 0.0))) < 1e-12);
        }
    }
}

TEST_CASE("phase mismatch of sqrt(3) pi over a coupling length stops the transfer")
{
    const double kappa = 300.0;
    const double L = pi / (2.0 * kappa);
    for (double sign : {1.0, -1.0}) {
        const CouplerParams p{kappa, sign * std::sqrt(3.0) * pi / L, L};
        CHECK(p.gamma() * L == doctest::Approx(pi).epsilon(1e-15));
        const Mat2 t = transfer_matrix(p);
        CHECK(std::abs(std::norm(t(0, 0)) - 1.0) < 1e-12);
        CHECK(std::norm(t(1, 0)) < 1e-12);
        CHECK(polar_form(p).theta < 1e-12);
        const auto rows = amplitude_evolution(p, Vec2(1.0, 0.0), {L});
        CHECK(std::abs(std::norm(rows.back().a1) - 1.0) < 1e-12);
    }
}

TEST_CASE("polar angles agree with the closed forms")
{
    std::mt19937_64 rng(99);
    int compared = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto p = random_params(rng);
        const double g = p.gamma();
        const double L = p.length_m;
        const auto f = polar_form(p);
        // theta = 2 asin[(kappa / gamma) sin gamma L], folded to [0, pi]
        const double x = p.kappa_per_m / g * std::sin(g * L);
        if (std::abs(x) < 0.999) {
            CHECK(f.theta == doctest::Approx(2.0 * std::abs(std::asin(x))).epsilon(1e-9));
            ++compared;
        }
        // phi_A with the one-argument arctangent; equal modulo pi (the branch the two-argument form fixes)
        const double c = std::cos(g * L);
        if (std::abs(c) > 1e-6) {
            const double principal = 0.5 * p.delta_beta_per_m * L + std::atan(-0.5 * p.delta_beta_per_m / g * std::tan(g * L));
            const double d = wrap_phase(f.phi_A - principal);
            REQUIRE((std::abs(d) < 1e-9 || std::abs(std::abs(d) - pi) < 1e-9));
            CHECK((c > 0.0) == (std::abs(d) < 1e-9));
        }
        CHECK(std::abs(wrap_phase(f.phi_B - 0.5 * p.delta_beta_per_m * L - (x < 0 ? pi : 0.0))) < 1e-12);
    }
    CHECK(compared > 4000);
}

TEST_CASE("cascade of a phase-matched coupler is a pure rotation")
{
    const CouplerParams p{123.0, 0.0, 4.2e-3};
    const auto c = cascade_decomposition(p);
    CHECK(std::abs(c.gamma1) < 1e-15);
    CHECK(std::abs(c.gamma2) < 1e-15);
    CHECK(maxabs(CascadeForm::T2(c.theta) - transfer_matrix(p)) < 1e-12);
}

TEST_CASE("amplitude evolution")
{
    const double kappa = 200.0;
    const double L = pi / (2.0 * kappa);
    const CouplerParams p{kappa, 0.0, L};
    std::vector<double> z;
    for (int i = 0; i <= 100; ++i)
        z.push_back(L * i / 100.0);
    const auto rows = amplitude_evolution(p, Vec2(1.0, 0.0), z);
    REQUIRE(rows.size() == z.size());
    for (const auto& r : rows) {
        CHECK(std::abs(std::abs(r.a1) - std::abs(std::cos(kappa * r.z_m))) < 1e-12);
        CHECK(std::abs(std::abs(r.a2) - std::abs(std::sin(kappa * r.z_m))) < 1e-12);
    }
    CHECK(std::norm(rows.back().a2) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("power is conserved for detuned couplers and arbitrary inputs")
    {
        const CouplerParams q{310.0, 777.0, 9e-3};
        const Vec2 in = Vec2(cd(0.3, 0.4), cd(-0.5, 0.2)).normalized();
        std::vector<double> zz;
        for (int i = 0; i <= 50; ++i)
            zz.push_back(q.length_m * i / 50.0);
        for (const auto& r : amplitude_evolution(q, in, zz)) {
            CHECK(std::abs(std::norm(r.a1) + std::norm(r.a2) - 1.0) < 1e-12);
            CouplerParams at = q;
            at.length_m = r.z_m;
            const Eigen::Vector2cd ref = oracle::cmt_reduced(q.kappa_per_m, q.delta_beta_per_m, r.z_m) * in;
            CHECK(std::abs(r.a1 - ref(0)) < 1e-10);
            CHECK(std::abs(r.a2 - ref(1)) < 1e-10);
        }
    }
    SUBCASE("z outside the coupler")
    {
        CHECK_THROWS_AS(amplitude_evolution(p, Vec2(1.0, 0.0), {-1e-6}), DomainError);
        CHECK_THROWS_AS(amplitude_evolution(p, Vec2(1.0, 0.0), {2 * L}), DomainError);
    }
}

TEST_CASE("overlap coupling coefficient")
{
    const auto& s = solver();
    const WaveguideGeometry a{5.6, std::nullopt};
    const WaveguideGeometry b{3.4, std::nullopt};
    auto kappa_at = [&](double gap) {
        const double sep = 2.8 + gap + 1.7;
        const auto x = common_grid(-20.0, sep + 20.0, 0.125);
        const auto fa = s.lateral_field(a, 0.812, Polarization::TM, 1, 0.0, x);
        const auto fb = s.lateral_field(b, 0.812, Polarization::TM, 0, sep, x);
        return coupling_coefficient(fa, fb, 0.812);
    };

    SUBCASE("analyzer geometry: coupling length within a factor of two of 6.2 mm")
    {
        const double k = kappa_at(4.0);
        const double k_ref = pi / (2.0 * 6.2e-3);
        CHECK(k > 0.5 * k_ref);
        CHECK(k < 2.0 * k_ref);
    }
    SUBCASE("falls off with separation")
    {
        double prev = kappa_at(1.0);
        for (double gap : {2.0, 4.0, 6.0, 8.0, 12.0}) {
            const double k = kappa_at(gap);
            CHECK(k < prev);
            CHECK(k >= 0.0);
            prev = k;
        }
        CHECK(kappa_at(30.0) < 1e-3 * kappa_at(2.0));
    }
    SUBCASE("symmetric for identical guides")
    {
        const auto x = common_grid(-20.0, 35.0, 0.125);
        const double sep = 10.0;
        const auto f1 = s.lateral_field(a, 0.812, Polarization::TM, 0, 0.0, x);
        const auto f2 = s.lateral_field(a, 0.812, Polarization::TM, 0, sep, x);
        CHECK(coupling_coefficient(f1, f2, 0.812) == doctest::Approx(coupling_coefficient(f2, f1, 0.812)).epsilon(1e-12));
    }
    SUBCASE("fields on different grids")
    {
        const auto x1 = common_grid(-20.0, 20.0, 0.125);
        const auto x2 = common_grid(-19.0, 21.0, 0.125);
        const auto f1 = s.lateral_field(a, 0.812, Polarization::TM, 0, 0.0, x1);
        const auto f2 = s.lateral_field(a, 0.812, Polarization::TM, 0, 10.0, x2);
        CHECK_THROWS_AS(coupling_coefficient(f1, f2, 0.812), ConfigError);
    }
}

TEST_CASE("splitting a four-mode coupler into blocks")
{
    const double L = 5e-3;
    SUBCASE("identical guides couple like parity only")
    {
        const std::vector<ModeEntry> modes{{"e1", 1.70e7}, {"o1", 1.69e7}, {"e2", 1.70e7}, {"o2", 1.69e7}};
        const std::vector<CouplingEntry> k{{0, 2, 100.0}, {1, 3, 300.0}, {0, 3, 50.0}, {1, 2, 50.0}};
        const auto r = reduce_to_blocks(modes, k, L);
        REQUIRE(r.blocks.size() == 2);
        CHECK(r.passthrough.empty());
        for (const auto& b : r.blocks) {
            CHECK(b.kind == BlockKind::matched);
            CHECK(((b.a == 0 && b.b == 2) || (b.a == 1 && b.b == 3)));
        }
        CHECK(unitarity_residual(r.unitary()) < 1e-12);
    }
    SUBCASE("at the crossing only even-odd couples")
    {
        const std::vector<ModeEntry> modes{{"e1", 1.7000e7}, {"o1", 1.6900e7}, {"e2", 1.7100e7}, {"o2", 1.7000e7}};
        const std::vector<CouplingEntry> k{{0, 2, 100.0}, {1, 3, 300.0}, {0, 3, 30.0}, {1, 2, 30.0}};
        const auto r = reduce_to_blocks(modes, k, L);
        REQUIRE(r.blocks.size() == 1);
        CHECK(r.blocks[0].a == 0);
        CHECK(r.blocks[0].b == 3);
        CHECK(r.passthrough == std::vector<int>{1, 2});
        const MatX u = r.unitary();
        CHECK(unitarity_residual(u) < 1e-12);
        CHECK(std::abs(u(1, 1) - std::exp(-J * (1.69e7 * L))) < 1e-12);
    }
    SUBCASE("everything mismatched passes through")
    {
        const std::vector<ModeEntry> modes{{"a", 1.0e7}, {"b", 1.1e7}, {"c", 1.2e7}};
        const auto r = reduce_to_blocks(modes, {{0, 1, 100.0}, {1, 2, 100.0}}, L);
        CHECK(r.blocks.empty());
        CHECK(r.passthrough.size() == 3);
        const MatX u = r.unitary();
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(u(i, i) - std::exp(-J * (modes[i].beta_per_m * L))) < 1e-12);
    }
    SUBCASE("detuned pair in the gap is kept as a genuine block")
    {
        const double db = 0.5 * pi / L;  // |dbeta| L = pi / 2
        const std::vector<ModeEntry> modes{{"a", 1.0e7 + db}, {"b", 1.0e7}};
        const auto r = reduce_to_blocks(modes, {{0, 1, 200.0}}, L);
        REQUIRE(r.blocks.size() == 1);
        CHECK(r.blocks[0].kind == BlockKind::partial);
        const MatX u = r.unitary();
        const Mat2 t = physical_transfer(CouplerParams{200.0, db, L}, modes[0].beta_per_m, modes[1].beta_per_m);
        CHECK(maxabs(u - MatX(t)) < 1e-10);  // beta L ~ 5e4 rad
        CHECK(std::norm(u(1, 0)) > 0.05);
        CHECK(std::norm(u(1, 0)) < 0.95);
    }
    SUBCASE("one mode matched to two partners is an error")
    {
        const std::vector<ModeEntry> modes{{"e1", 1.7e7}, {"e2", 1.7e7}, {"e3", 1.7e7}};
        CHECK_THROWS_AS(reduce_to_blocks(modes, {{0, 1, 100.0}, {0, 2, 100.0}}, L), DesignError);
    }
    SUBCASE("bad indices")
    {
        const std::vector<ModeEntry> modes{{"a", 1.0}, {"b", 1.0}};
        CHECK_THROWS_AS(reduce_to_blocks(modes, {{0, 2, 1.0}}, L), ConfigError);
        CHECK_THROWS_AS(reduce_to_blocks(modes, {{1, 1, 1.0}}, L), ConfigError);
    }
    SUBCASE("evaluation along the coupler")
    {
        const std::vector<ModeEntry> modes{{"a", 1.0e7}, {"b", 1.0e7}};
        const double kappa = pi / (2.0 * L);
        const auto r = reduce_to_blocks(modes, {{0, 1, kappa}}, L);
        CHECK(maxabs(r.unitary_at(0.0) - MatX::Identity(2, 2)) < 1e-12);
        CHECK(maxabs(r.unitary_at(L) - r.unitary()) == 0.0);
        CHECK(std::norm(r.unitary_at(0.5 * L)(1, 0)) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK_THROWS_AS(r.unitary_at(1.1 * L), DomainError);
    }
}

TEST_CASE("unitary documents")
{
    std::mt19937_64 rng(3);
    const auto p = random_params(rng);
    const MatX u = transfer_matrix(p);
    const auto j = unitary_to_json(u, 0.25);
    CHECK(j.at("global_phase").get<double>() == 0.25);
    CHECK(j.at("entries").size() == 4);
    CHECK(j.at("entries")[1][0].get<double>() == u(0, 1).real());  // row-major
    const MatX back = unitary_from_json(nlohmann::json::parse(j.dump()));
    CHECK(maxabs(back - u) == 0.0);

    auto bad = j;
    bad["rows"] = 3;
    CHECK_THROWS_AS(unitary_from_json(bad), ConfigError);
    CHECK_THROWS_AS(unitary_from_json(nlohmann::json::object()), ConfigError);
}

TEST_CASE("phase wrapping")
{
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(pi) == doctest::Approx(pi));
    CHECK(wrap_phase(-pi) == doctest::Approx(pi));
    CHECK(wrap_phase(3 * pi / 2) == doctest::Approx(-pi / 2));
    CHECK(wrap_phase(1e5 + 0.1) == doctest::Approx(std::remainder(1e5 + 0.1, 2 * pi)));
}

TEST_CASE("invalid parameters")
{
    CHECK_THROWS_AS(transfer_matrix({-1.0, 0.0, 1e-3}), DomainError);
    CHECK_THROWS_AS(transfer_matrix({1.0, 0.0, -1e-3}), DomainError);
    CHECK_THROWS_AS(transfer_matrix({1.0, std::nan(""), 1e-3}), DomainError);
    // gamma = 0 is the identity, not an error
    CHECK(maxabs(transfer_matrix({0.0, 0.0, 1e-3}) - Mat2::Identity()) == 0.0);
}
