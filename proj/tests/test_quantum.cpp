#include "doctest.h"

#include <cmath>
#include <random>

#include "mqsim/errors.hpp"
#include "mqsim/quantum.hpp"
#include "oracles.hpp"

using namespace mqsim;

namespace {

constexpr double pi = units::pi;

Mat2 sigma_x()
{
    Mat2 s;
    s << 0.0, 1.0, 1.0, 0.0;
    return s;
}

}  // namespace

TEST_CASE("apply")
{
    const ModalQubit psi{Vec2(cd(0.6, 0.0), cd(0.0, 0.8))};
    CHECK((mqsim::apply(Mat2(Mat2::Identity()), psi).alpha - psi.alpha).norm() == 0.0);
    const auto flipped = mqsim::apply(sigma_x(), psi);
    CHECK(flipped.alpha(0) == psi.alpha(1));
    CHECK(flipped.alpha(1) == psi.alpha(0));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const JointState s{oracle::random_state4(rng)};
        const Mat4 u = kron(oracle::random_su2(rng), oracle::random_su2(rng));
        CHECK(std::abs(mqsim::apply(u, s).alpha.norm() - 1.0) < 1e-12);
    }

    SUBCASE("non-unitary operators are rejected")
    {
        Mat2 m = Mat2::Identity();
        m(0, 0) = 1.001;
        CHECK_THROWS_AS(mqsim::apply(m, psi), DomainError);
        const Mat4 z = Mat4::Zero();
        CHECK_THROWS_AS(mqsim::apply(z, JointState{}), DomainError);
    }
}

TEST_CASE("CNOT swaps the first two amplitudes")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const JointState in{oracle::random_state4(rng)};
        const auto out = mqsim::apply(ideal_cnot(), in);
        CHECK(std::abs(out.alpha(0) - in.alpha(1)) < 1e-15);
        CHECK(std::abs(out.alpha(1) - in.alpha(0)) < 1e-15);
        CHECK(std::abs(out.alpha(2) - in.alpha(2)) < 1e-15);
        CHECK(std::abs(out.alpha(3) - in.alpha(3)) < 1e-15);
    }
    // |TM> |e>  ->  |TM> |o>
    const auto tm_e = JointState::product(Vec2(1.0, 0.0), Vec2(1.0, 0.0));
    CHECK(std::abs(mqsim::apply(ideal_cnot(), tm_e).alpha(oTM) - 1.0) < 1e-15);
    // TE control leaves any target alone
    const Vec2 target = Vec2(cd(0.3, 0.1), cd(-0.2, 0.9)).normalized();
    const auto te = JointState::product(Vec2(0.0, 1.0), target);
    CHECK((mqsim::apply(ideal_cnot(), te).alpha - te.alpha).norm() < 1e-15);
}

TEST_CASE("Poincare coordinates")
{
    CHECK(poincare(ModalQubit{Vec2(1.0, 0.0)}).polar == 0.0);
    CHECK(poincare(ModalQubit{Vec2(0.0, 1.0)}).polar == doctest::Approx(pi));
    const double r = 1.0 / std::sqrt(2.0);
    const auto eq = poincare(ModalQubit{Vec2(r, r)});
    CHECK(eq.polar == doctest::Approx(pi / 2));
    CHECK(eq.azimuth == doctest::Approx(0.0));
    const auto jeq = poincare(ModalQubit{Vec2(cd(r, 0.0), cd(0.0, r))});
    CHECK(jeq.polar == doctest::Approx(pi / 2));
    CHECK(jeq.azimuth == doctest::Approx(pi / 2));

    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        const ModalQubit psi{Vec2(cd(g(rng), g(rng)), cd(g(rng), g(rng))).normalized()};
        const auto back = from_poincare(poincare(psi));
        CHECK(phase_insensitive_distance(Eigen::VectorXcd(back.alpha), Eigen::VectorXcd(psi.alpha)) < 1e-12);
    }
    CHECK_THROWS_AS(poincare(ModalQubit{Vec2(1.0, 1.0)}), DomainError);
}

TEST_CASE("canonical phase")
{
    Eigen::VectorXcd v(3);
    v << 0.0, cd(0.0, -2.0), cd(1.0, 1.0);
    const auto c = canonical_phase(v);
    CHECK(c(0) == cd(0.0));
    CHECK(std::abs(c(1) - cd(2.0, 0.0)) < 1e-15);
    CHECK(std::abs(c(2) - v(2) * std::polar(1.0, pi / 2)) < 1e-15);
}

TEST_CASE("concurrence")
{
    const auto tm_e = JointState::product(Vec2(1.0, 0.0), Vec2(1.0, 0.0));
    CHECK(concurrence(tm_e) == 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    const auto plus_e = JointState::product(Vec2(r, r), Vec2(1.0, 0.0));
    CHECK(concurrence(plus_e) < 1e-15);
    CHECK(concurrence(mqsim::apply(ideal_cnot(), plus_e)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(concurrence(mqsim::apply(ideal_cnot(), JointState::product(Vec2(0.0, 1.0), Vec2(1.0, 0.0)))) == 0.0);

    std::mt19937_64 rng(23);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const JointState s{oracle::random_state4(rng)};
        const double c = concurrence(s);
        REQUIRE(c >= 0.0);
        REQUIRE(c <= 1.0 + 1e-12);
        const Mat4 local = kron(oracle::random_su2(rng), oracle::random_su2(rng));
        worst = std::max(worst, std::abs(concurrence(mqsim::apply(local, s)) - c));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("truth table")
{
    SUBCASE("ideal")
    {
        const auto t = truth_table(ideal_cnot());
        CHECK(t.is_cnot);
        CHECK(t.fidelity == doctest::Approx(1.0).epsilon(1e-15));
        for (bool ok : t.ok)
            CHECK(ok);
    }
    SUBCASE("global phase is ignored")
    {
        const auto t = truth_table(std::exp(J * 1.234) * ideal_cnot());
        CHECK(t.is_cnot);
        CHECK(t.fidelity == doctest::Approx(1.0));
    }
    SUBCASE("identity fails on the TM inputs")
    {
        const auto t = truth_table(Mat4::Identity());
        CHECK_FALSE(t.is_cnot);
        CHECK_FALSE(t.ok[eTM]);
        CHECK_FALSE(t.ok[oTM]);
        CHECK(t.ok[eTE]);
        CHECK(t.ok[oTE]);
        CHECK(t.fidelity == doctest::Approx(0.5));
    }
    SUBCASE("pi on the odd TE entry")
    {
        Mat4 u = ideal_cnot();
        u(oTE, oTE) = -1.0;
        const auto t = truth_table(u);
        CHECK_FALSE(t.is_cnot);
        CHECK(t.fidelity < 1.0);
        CHECK(t.fidelity == doctest::Approx(0.5));
        CHECK_FALSE(t.ok[oTE]);
        CHECK(std::abs(std::abs(t.phase[oTE]) - pi) < 1e-12);
    }
    SUBCASE("small phase error just above tolerance is caught")
    {
        Mat4 u = ideal_cnot();
        u(eTE, eTE) = std::exp(J * 2e-6);
        CHECK_FALSE(truth_table(u).is_cnot);
        u(eTE, eTE) = std::exp(J * 5e-7);
        CHECK(truth_table(u).is_cnot);
    }
    SUBCASE("CNOT twice is the identity")
    {
        const Mat4 cc = ideal_cnot() * ideal_cnot();
        CHECK((cc - Mat4::Identity()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(truth_table(cc).fidelity == doctest::Approx(0.5));
        CHECK(truth_table(ideal_cnot() * cc).is_cnot);
    }
    SUBCASE("json report")
    {
        const auto j = truth_table(Mat4::Identity()).to_json();
        CHECK(j.at("is_cnot") == false);
        CHECK(j.at("rows").size() == 4);
        CHECK(j.at("rows")[0].at("input") == "e,TM");
    }
}

TEST_CASE("state serialization keeps the basis order")
{
    JointState s;
    s.alpha << 0.5, cd(0.0, 0.5), -0.5, cd(0.0, -0.5);
    const auto j = state_to_json(s);
    CHECK(j.at("basis")[2] == "e,TE");
    CHECK(j.at("amplitudes")[1][1].get<double>() == 0.5);
    CHECK(j.at("amplitudes")[3][1].get<double>() == -0.5);
}
