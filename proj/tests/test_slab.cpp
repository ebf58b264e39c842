#include "doctest.h"

#include <cmath>
#include <vector>

#include "mqsim/slab.hpp"
#include "oracles.hpp"

using namespace mqsim;

namespace {

SlabOperator make_op(double x0, double x1, double h, const std::function<double(double)>& k2n2, double tail)
{
    SlabOperator op;
    op.h_um = h;
    const int n = static_cast<int>(std::round((x1 - x0) / h)) + 1;
    for (int i = 0; i < n; ++i)
        op.k2n2.push_back(k2n2(x0 + i * h));
    op.left_tail_k2n2 = op.right_tail_k2n2 = tail;
    return op;
}

double normalized(double mu, double clad, double core) { return (mu - clad) / (core - clad); }

}  // namespace

TEST_CASE("step-index slab against the transcendental equation")
{
    const double k0 = 2.0 * oracle::pi;
    const double core = std::pow(k0 * 2.2, 2);
    const double clad = std::pow(k0 * 2.19, 2);
    std::vector<double> err;
    for (double h : {0.02, 0.01, 0.005}) {
        const double a = 2.0 + 0.5 * h;  // interface halfway between nodes
        auto prof = [&](double x) { return std::abs(x) < a ? core : clad; };
        const double exact = oracle::step_slab_even_beta2(core, clad, a);
        const auto op = make_op(-6.0, 6.0, h, prof, clad);
        const auto mu = slab_eigenvalue(op, 0);
        REQUIRE(mu);
        err.push_back(std::abs(normalized(*mu, clad, core) - normalized(exact, clad, core)));
    }
    CHECK(err.back() < 1e-4);
    // second order in h
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.25));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("graded slab against RK4 shooting")
{
    const double k0 = 2.0 * oracle::pi / 0.812;
    const double nb = 2.17, dn = 0.01;
    const double clad = std::pow(k0 * nb, 2);
    const double core = std::pow(k0 * (nb + dn), 2);
    auto prof = [&](double x) {
        const double n = nb + dn * std::exp(-x * x / 9.0);
        return k0 * k0 * n * n;
    };
    const auto op = make_op(-15.0, 15.0, 0.0025, prof, clad);
    const auto mu = slab_eigenvalue(op, 0);
    REQUIRE(mu);
    const double ref = oracle::shoot_fundamental(prof, -15.0, 15.0, clad + 1e-9, core - 1e-9, 24000);
    CHECK(std::abs(normalized(*mu, clad, core) - normalized(ref, clad, core)) < 1e-5);
}

TEST_CASE("mode count, ordering and eigenvector")
{
    const double k0 = 2.0 * oracle::pi;
    const double core = std::pow(k0 * 2.2, 2);
    const double clad = std::pow(k0 * 2.17, 2);
    auto prof = [&](double x) { return std::abs(x) < 3.005 ? core : clad; };
    const auto op = make_op(-10.0, 10.0, 0.01, prof, clad);
    const int count = slab_guided_count(op);
    CHECK(count >= 2);
    double prev = core;
    for (int m = 0; m < count; ++m) {
        const auto mu = slab_eigenvalue(op, m);
        REQUIRE(mu);
        CHECK(*mu < prev);
        CHECK(*mu > clad);
        prev = *mu;
    }
    CHECK_FALSE(slab_eigenvalue(op, count));

    const double mu0 = *slab_eigenvalue(op, 0);
    const auto psi = slab_eigenvector(op, mu0);
    double norm = 0.0;
    for (double p : psi)
        norm += p * p * op.h_um;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    // interior residual of the three-point operator
    double res = 0.0;
    for (std::size_t i = 1; i + 1 < psi.size(); ++i) {
        const double lap = (psi[i - 1] - 2 * psi[i] + psi[i + 1]) / (op.h_um * op.h_um);
        res = std::max(res, std::abs(lap + (op.k2n2[i] - mu0) * psi[i]));
    }
    CHECK(res < 1e-6 * mu0);
    // fundamental mode has no sign change
    int sign_changes = 0;
    for (std::size_t i = 1; i < psi.size(); ++i)
        if (std::abs(psi[i]) > 1e-8 && std::abs(psi[i - 1]) > 1e-8 && (psi[i] < 0) != (psi[i - 1] < 0)) ++sign_changes;
    CHECK(sign_changes == 0);
}

TEST_CASE("uniform medium has nothing guided")
{
    const auto op = make_op(-5.0, 5.0, 0.05, [](double) { return 100.0; }, 100.0);
    CHECK(slab_guided_count(op) == 0);
    CHECK_FALSE(slab_eigenvalue(op, 0));
}
