#include "mqsim/slab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mqsim/errors.hpp"

namespace mqsim {

namespace {

// Decay ratio of the discrete exterior solution; 1 at the tail cutoff.
double tail_ratio(double h, double mu, double tail)
{
    const double t = 1.0 + 0.5 * h * h * std::max(mu - tail, 0.0);
    return t - std::sqrt(t * t - 1.0);
}

struct Tridiagonal {
    std::vector<double> diag;
    double off = 0.0;  // constant off-diagonal 1/h^2
};

Tridiagonal assemble(const SlabOperator& op, double mu)
{
    const double inv_h2 = 1.0 / (op.h_um * op.h_um);
    Tridiagonal t;
    t.off = inv_h2;
    t.diag.resize(op.k2n2.size());
    for (std::size_t i = 0; i < op.k2n2.size(); ++i)
        t.diag[i] = op.k2n2[i] - 2.0 * inv_h2;
    if (op.left == SlabBoundary::transparent)
        t.diag.front() += tail_ratio(op.h_um, mu, op.left_tail_k2n2) * inv_h2;
    if (op.right == SlabBoundary::transparent)
        t.diag.back() += tail_ratio(op.h_um, mu, op.right_tail_k2n2) * inv_h2;
    return t;
}

// In-place solve of (T - shift) y = b, tridiagonal LU with partial pivoting.
void solve_shifted(const Tridiagonal& t, double shift, std::vector<double>& b)
{
    const std::size_t n = t.diag.size();
    std::vector<double> d(n), dl(n, t.off), du(n, t.off), du2(n, 0.0);
    std::vector<bool> swapped(n, false);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = t.diag[i] - shift;
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = tiny;
            const double fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            const double fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            const double temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = tiny;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!swapped[i]) {
            b[i + 1] -= dl[i] * b[i];
        } else {
            const double temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t k = n - 2; k-- > 0;)
        b[k] = (b[k] - du[k] * b[k + 1] - du2[k] * b[k + 2]) / d[k];
}

}  // namespace

double SlabOperator::cutoff() const
{
    double c = -std::numeric_limits<double>::infinity();
    if (left == SlabBoundary::transparent) c = std::max(c, left_tail_k2n2);
    if (right == SlabBoundary::transparent) c = std::max(c, right_tail_k2n2);
    return c;
}

int SlabOperator::count_above(double mu) const
{
    const Tridiagonal t = assemble(*this, mu);
    const double e2 = t.off * t.off;
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        q = t.diag[i] - mu - (i == 0 ? 0.0 : e2 / q);
        if (q == 0.0) q = -tiny;
        if (q > 0.0) ++count;
    }
    return count;
}

int slab_guided_count(const SlabOperator& op)
{
    if (op.k2n2.empty()) return 0;
    const double c = op.cutoff();
    if (!std::isfinite(c)) throw ConfigError("slab: at least one transparent boundary is required");
    // Just above the cutoff so that r < 1 strictly.
    return op.count_above(c + std::abs(c) * 1e-15);
}

std::optional<double> slab_eigenvalue(const SlabOperator& op, int m, double rel_tol)
{
    if (m < 0 || slab_guided_count(op) <= m) return std::nullopt;
    double lo = op.cutoff();
    double hi = *std::max_element(op.k2n2.begin(), op.k2n2.end());
    if (!(hi > lo)) return std::nullopt;
    // count_above(lo) > m and count_above(hi) == 0 <= m.
    for (int it = 0; it < 200 && hi - lo > rel_tol * std::abs(hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (op.count_above(mid) > m) lo = mid;
        else hi = mid;
    }
    if (hi - lo > 1e3 * rel_tol * std::abs(hi)) throw NumericError("slab eigenvalue bisection stalled", (hi - lo) / hi);
    return 0.5 * (lo + hi);
}

std::vector<double> slab_eigenvector(const SlabOperator& op, double beta2)
{
    const Tridiagonal t = assemble(op, beta2);
    const std::size_t n = t.diag.size();
    std::vector<double> v(n, 1.0);
    // A nudge off the eigenvalue keeps the factorization regular; three sweeps are plenty.
    const double shift = beta2 * (1.0 + 1e-13);
    for (int it = 0; it < 3; ++it) {
        solve_shifted(t, shift, v);
        double norm = 0.0;
        for (double x : v)
            norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v)
            x /= norm;
    }
    double sum2 = 0.0;
    for (double x : v)
        sum2 += x * x;
    const double scale = 1.0 / std::sqrt(sum2 * op.h_um);
    for (double& x : v)
        x *= scale;
    return v;
}

}  // namespace mqsim
