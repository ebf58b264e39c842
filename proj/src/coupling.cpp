#include "mqsim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mqsim/errors.hpp"

namespace mqsim {

double CouplerParams::gamma() const
{
    return std::sqrt(kappa_per_m * kappa_per_m + 0.25 * delta_beta_per_m * delta_beta_per_m);
}

void CouplerParams::validate() const
{
    if (!(kappa_per_m >= 0.0)) throw DomainError("coupling coefficient must be nonnegative");
    if (!(length_m >= 0.0)) throw DomainError("coupler length must be nonnegative");
    if (!std::isfinite(delta_beta_per_m)) throw DomainError("phase mismatch must be finite");
}

namespace {

// sin(gamma L) / gamma with the gamma -> 0 limit.
double sin_over_gamma(double g, double L)
{
    return g > 0.0 ? std::sin(g * L) / g : L;
}

}  // namespace

Mat2 transfer_matrix(const CouplerParams& p)
{
    p.validate();
    const double g = p.gamma();
    const double L = p.length_m;
    const double s = sin_over_gamma(g, L);
    const cd half = std::exp(J * (0.5 * p.delta_beta_per_m * L));
    const cd A = half * cd(std::cos(g * L), -0.5 * p.delta_beta_per_m * s);
    const cd B = half * (p.kappa_per_m * s);
    Mat2 t;
    t << A, -J * B, -J * std::conj(B), std::conj(A);
    return t;
}

Mat2 physical_transfer(const CouplerParams& p, double beta_a_per_m, double beta_b_per_m)
{
    const double L = p.length_m;
    Mat2 d = Mat2::Zero();
    d(0, 0) = std::exp(-J * (beta_a_per_m * L));
    d(1, 1) = std::exp(-J * (beta_b_per_m * L));
    return d * transfer_matrix(p);
}

Mat2 PolarForm::matrix() const
{
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Mat2 t;
    t << c * std::exp(J * phi_A), -J * s * std::exp(J * phi_B), -J * s * std::exp(-J * phi_B),
        c * std::exp(-J * phi_A);
    return t;
}

PolarForm polar_form(const CouplerParams& p)
{
    p.validate();
    const double g = p.gamma();
    const double L = p.length_m;
    const double s = sin_over_gamma(g, L);
    const double b = p.kappa_per_m * s;  // (kappa / gamma) sin(gamma L), signed
    PolarForm f;
    // 2 asin|b| written with atan2 so that it stays accurate near theta = pi.
    const double a = std::hypot(std::cos(g * L), 0.5 * p.delta_beta_per_m * s);
    f.theta = 2.0 * std::atan2(std::abs(b), a);
    f.phi_B = 0.5 * p.delta_beta_per_m * L + (b < 0.0 ? units::pi : 0.0);
    // Two-argument arctangent keeps gamma L = pi/2 + k pi regular.
    f.phi_A = 0.5 * p.delta_beta_per_m * L + std::atan2(-0.5 * p.delta_beta_per_m * s, std::cos(g * L));
    return f;
}

Mat2 CascadeForm::T1(double gamma1)
{
    Mat2 t = Mat2::Identity();
    t(1, 1) = std::exp(-J * gamma1);
    return t;
}

Mat2 CascadeForm::T2(double theta)
{
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Mat2 t;
    t << c, -J * s, -J * s, c;
    return t;
}

Mat2 CascadeForm::T3(double gamma2)
{
    Mat2 t = Mat2::Identity();
    t(0, 0) = std::exp(-J * gamma2);
    return t;
}

Mat2 CascadeForm::product() const
{
    return std::exp(J * global_phase) * (T3(gamma2) * T2(theta) * T1(gamma1));
}

CascadeForm cascade_decomposition(const CouplerParams& p)
{
    const PolarForm f = polar_form(p);
    CascadeForm c;
    c.theta = f.theta;
    c.gamma1 = f.phi_A - f.phi_B;
    c.gamma2 = -f.phi_A - f.phi_B;
    c.global_phase = -f.phi_B;
    return c;
}

double unitarity_residual(const MatX& u)
{
    if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
    const MatX r = u.adjoint() * u - MatX::Identity(u.rows(), u.cols());
    return r.cwiseAbs().maxCoeff();
}

double coupling_coefficient(const LateralField& a, const LateralField& b, double lambda_um)
{
    const std::size_t n = a.x_um.size();
    if (n < 2 || b.x_um.size() != n || a.field.size() != n || b.field.size() != n)
        throw ConfigError("coupling_coefficient: fields are not sampled on a common grid");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(a.x_um[i] - b.x_um[i]) > 1e-9) throw ConfigError("coupling_coefficient: grids do not overlap");
    const double h = a.x_um[1] - a.x_um[0];
    const double k0 = 2.0 * units::pi / lambda_um;

    double ab = 0.0;  // perturbation of guide b seen by a
    double ba = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pert_b = b.effective_index[i] * b.effective_index[i] - b.background * b.background;
        const double pert_a = a.effective_index[i] * a.effective_index[i] - a.background * a.background;
        ab += pert_b * a.field[i] * b.field[i];
        ba += pert_a * a.field[i] * b.field[i];
    }
    const double kab = std::abs(k0 * k0 / (2.0 * k0 * a.n_eff) * ab * h);
    const double kba = std::abs(k0 * k0 / (2.0 * k0 * b.n_eff) * ba * h);
    return std::sqrt(kab * kba) / units::um;  // um^-1 -> m^-1
}

std::vector<AmplitudeRow> amplitude_evolution(const CouplerParams& p, const Vec2& input, const std::vector<double>& z_m)
{
    p.validate();
    std::vector<AmplitudeRow> rows;
    rows.reserve(z_m.size());
    for (double z : z_m) {
        if (z < 0.0 || z > p.length_m * (1.0 + 1e-12))
            throw DomainError("amplitude_evolution: z outside [0, L]");
        CouplerParams at = p;
        at.length_m = z;
        const Vec2 out = transfer_matrix(at) * input;
        rows.push_back({z, out(0), out(1)});
    }
    return rows;
}

MatX BlockReduction::unitary() const { return unitary_at(length_m); }

MatX BlockReduction::unitary_at(double z_m) const
{
    if (z_m < 0.0 || z_m > length_m * (1.0 + 1e-12)) throw DomainError("block evolution: z outside [0, L]");
    const auto n = static_cast<Eigen::Index>(modes.size());
    MatX u = MatX::Zero(n, n);
    for (int i : passthrough)
        u(i, i) = std::exp(-J * (modes[i].beta_per_m * z_m));
    for (const auto& blk : blocks) {
        CouplerParams at = blk.params;
        at.length_m = z_m;
        const Mat2 t = physical_transfer(at, modes[blk.a].beta_per_m, modes[blk.b].beta_per_m);
        u(blk.a, blk.a) = t(0, 0);
        u(blk.a, blk.b) = t(0, 1);
        u(blk.b, blk.a) = t(1, 0);
        u(blk.b, blk.b) = t(1, 1);
    }
    return u;
}

BlockReduction reduce_to_blocks(const std::vector<ModeEntry>& modes, const std::vector<CouplingEntry>& couplings,
                                double length_m, const BlockThresholds& th)
{
    const int n = static_cast<int>(modes.size());
    BlockReduction out;
    out.modes = modes;
    out.length_m = length_m;

    struct Candidate {
        double mismatch;
        CouplerBlock block;
    };
    std::vector<Candidate> matched, partial;
    for (const auto& c : couplings) {
        if (c.a < 0 || c.b < 0 || c.a >= n || c.b >= n || c.a == c.b)
            throw ConfigError("reduce_to_blocks: coupling refers to an unknown mode");
        // a zero-length section has no interaction to classify
        if (c.kappa_per_m <= 0.0 || length_m == 0.0) continue;
        const double db = modes[c.a].beta_per_m - modes[c.b].beta_per_m;
        const double x = std::abs(db) * length_m;
        CouplerBlock blk{c.a, c.b, BlockKind::matched, CouplerParams{c.kappa_per_m, db, length_m}};
        if (x < th.matched_rad) {
            matched.push_back({x, blk});
        } else if (x <= th.passthrough_rad) {
            blk.kind = BlockKind::partial;
            partial.push_back({x, blk});
        }
    }

    std::vector<bool> used(n, false);
    for (const auto& m : matched) {
        for (int k : {m.block.a, m.block.b})
            if (used[k])
                throw DesignError("reduce_to_blocks: mode '" + modes[k].label +
                                  "' is phase matched to more than one partner");
        used[m.block.a] = used[m.block.b] = true;
        out.blocks.push_back(m.block);
    }
    // Detuned pairs are taken strongest first among the modes still free.
    std::stable_sort(partial.begin(), partial.end(),
                     [](const Candidate& l, const Candidate& r) { return l.mismatch < r.mismatch; });
    for (const auto& p : partial) {
        if (used[p.block.a] || used[p.block.b]) continue;
        used[p.block.a] = used[p.block.b] = true;
        out.blocks.push_back(p.block);
    }
    for (int i = 0; i < n; ++i)
        if (!used[i]) out.passthrough.push_back(i);
    return out;
}

nlohmann::json unitary_to_json(const MatX& u, double global_phase)
{
    nlohmann::json entries = nlohmann::json::array();
    for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c)
            entries.push_back({u(r, c).real(), u(r, c).imag()});
    return {{"rows", u.rows()}, {"cols", u.cols()}, {"global_phase", global_phase}, {"entries", entries}};
}

MatX unitary_from_json(const nlohmann::json& j)
{
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto& e = j.at("entries");
        if (rows < 0 || cols < 0 || e.size() != static_cast<std::size_t>(rows * cols))
            throw ConfigError("unitary document: entry count does not match rows x cols");
        MatX u(rows, cols);
        for (Eigen::Index k = 0; k < rows * cols; ++k) {
            const auto& v = e.at(static_cast<std::size_t>(k));
            u(k / cols, k % cols) = cd(v.at(0).get<double>(), v.at(1).get<double>());
        }
        return u;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("unitary document: ") + ex.what());
    }
}

double wrap_phase(double phi)
{
    double w = std::remainder(phi, 2.0 * units::pi);  // [-pi, pi]
    if (w <= -units::pi) w += 2.0 * units::pi;
    return w;
}

}  // namespace mqsim
