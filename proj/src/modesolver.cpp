#include "mqsim/modesolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mqsim/errors.hpp"
#include "mqsim/slab.hpp"
#include "mqsim/units.hpp"

namespace mqsim {

void WaveguideGeometry::validate() const
{
    if (!(width_um > 0.0)) throw DomainError("waveguide width must be positive");
    if (electrode) {
        if (!(electrode->gap_um > 0.0)) throw DomainError("electrode gap must be positive");
        if (electrode->orientation != 1 && electrode->orientation != -1)
            throw ConfigError("electrode orientation must be +1 or -1");
    }
}

void GridSpec::validate() const
{
    if (!(samples_per_D >= min_samples_per_D))
        throw ConfigError("grid too coarse: " + std::to_string(samples_per_D) + " samples per diffusion length, " +
                          std::to_string(min_samples_per_D) + " required");
    if (!(lateral_margin_D > 0.0) || !(depth_extent_D > 0.0)) throw ConfigError("grid extents must be positive");
}

GuidedMode GuidedMode::make(Polarization pol, int order, double lambda_um, double n_eff)
{
    GuidedMode g;
    g.pol = pol;
    g.order = order;
    g.lambda_um = lambda_um;
    g.n_eff = n_eff;
    g.beta_per_m = units::wavenumber_per_m(lambda_um) * n_eff;
    return g;
}

double IndexProfile::peak() const { return *std::max_element(n.begin(), n.end()); }

namespace {

double lateral_shape(double half_width, double D, double x)
{
    return 0.5 * (std::erf((half_width + x) / D) + std::erf((half_width - x) / D));
}

}  // namespace

ModeSolver::ModeSolver(MaterialModel material, GridSpec grid) : material_(std::move(material)), grid_(grid)
{
    material_.validate();
    grid_.validate();
}

double ModeSolver::eo_shift(const WaveguideGeometry& geometry, double lambda_um, Polarization pol) const
{
    if (!geometry.electrode) return 0.0;
    const auto& e = *geometry.electrode;
    const double n = material_.bulk_index(lambda_um, pol);
    return e.orientation * eo_index_shift(n, material_.pockels_pm_per_V(pol), e.voltage_V, e.gap_um);
}

double ModeSolver::surface_increase(const WaveguideGeometry& geometry, double lambda_um, Polarization pol,
                                    double x_from_center_um) const
{
    const double D = material_.indiffusion.diffusion_length_um;
    const double half = 0.5 * geometry.width_um;
    const double shape0 = lateral_shape(half, D, 0.0);
    const double peak = material_.peak_delta_n(lambda_um, pol) + eo_shift(geometry, lambda_um, pol) / shape0;
    return peak * lateral_shape(half, D, x_from_center_um);
}

std::vector<double> ModeSolver::lateral_grid(const WaveguideGeometry& geometry, double h_um) const
{
    const double D = material_.indiffusion.diffusion_length_um;
    const double extent = 0.5 * geometry.width_um + grid_.lateral_margin_D * D;
    const auto half = static_cast<long>(std::ceil(extent / h_um));
    std::vector<double> x(static_cast<std::size_t>(2 * half + 1));
    for (long i = -half; i <= half; ++i)
        x[static_cast<std::size_t>(i + half)] = static_cast<double>(i) * h_um;
    return x;
}

double ModeSolver::depth_effective_index(double surface_dn, double n_bulk, double k0, double h_um) const
{
    if (surface_dn <= 0.0) return n_bulk;
    const double D = material_.indiffusion.diffusion_length_um;
    const auto nz = static_cast<std::size_t>(std::ceil(grid_.depth_extent_D * D / h_um));
    SlabOperator op;
    op.h_um = h_um;
    op.left = SlabBoundary::dirichlet;  // air side: field vanishes at the surface
    op.right = SlabBoundary::transparent;
    op.right_tail_k2n2 = k0 * k0 * n_bulk * n_bulk;
    op.k2n2.resize(nz);
    for (std::size_t j = 0; j < nz; ++j) {
        const double z = static_cast<double>(j + 1) * h_um;
        const double n = n_bulk + surface_dn * std::exp(-(z * z) / (D * D));
        op.k2n2[j] = k0 * k0 * n * n;
    }
    const auto mu = slab_eigenvalue(op, 0);
    return mu ? std::sqrt(*mu) / k0 : n_bulk;
}

std::vector<double> ModeSolver::lateral_effective_index(const WaveguideGeometry& geometry, double lambda_um,
                                                        Polarization pol, double center_um,
                                                        std::span<const double> x_um) const
{
    geometry.validate();
    const double D = material_.indiffusion.diffusion_length_um;
    const double k0 = 2.0 * units::pi / lambda_um;
    const double nb = material_.bulk_index(lambda_um, pol);
    const double h = D / grid_.samples_per_D;
    std::vector<double> N(x_um.size());
    for (std::size_t i = 0; i < x_um.size(); ++i)
        N[i] = depth_effective_index(surface_increase(geometry, lambda_um, pol, x_um[i] - center_um), nb, k0, h);
    return N;
}

std::optional<double> ModeSolver::solve_at_spacing(const WaveguideGeometry& geometry, double lambda_um,
                                                   Polarization pol, int m, double h_um) const
{
    const double k0 = 2.0 * units::pi / lambda_um;
    const double nb = material_.bulk_index(lambda_um, pol);
    const auto x = lateral_grid(geometry, h_um);
    const std::size_t n = x.size();
    const std::size_t mid = n / 2;

    // The profile is symmetric about the centre node; solve half the depth problems.
    std::vector<double> N(n);
    for (std::size_t i = mid; i < n; ++i) {
        N[i] = depth_effective_index(surface_increase(geometry, lambda_um, pol, x[i]), nb, k0, h_um);
        N[n - 1 - i] = N[i];
    }

    SlabOperator op;
    op.h_um = h_um;
    op.left = op.right = SlabBoundary::transparent;
    op.k2n2.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        op.k2n2[i] = k0 * k0 * N[i] * N[i];
    op.left_tail_k2n2 = op.k2n2.front();
    op.right_tail_k2n2 = op.k2n2.back();
    const auto mu = slab_eigenvalue(op, m);
    if (!mu) return std::nullopt;
    return std::sqrt(*mu) / k0;
}

ModeSolver::Key ModeSolver::make_key(const WaveguideGeometry& g, double lambda_um, Polarization pol, int m)
{
    const bool has_e = g.electrode.has_value();
    return {g.width_um,
            has_e,
            has_e ? g.electrode->gap_um : 0.0,
            has_e ? g.electrode->orientation : 0,
            has_e ? g.electrode->voltage_V : 0.0,
            lambda_um,
            static_cast<int>(pol),
            m};
}

std::optional<GuidedMode> ModeSolver::try_effective_index(const WaveguideGeometry& geometry, double lambda_um,
                                                          Polarization pol, int m) const
{
    geometry.validate();
    if (m < 0) throw DomainError("mode order must be nonnegative");
    const Key key = make_key(geometry, lambda_um, pol, m);
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }

    const double h = material_.indiffusion.diffusion_length_um / grid_.samples_per_D;
    std::optional<GuidedMode> result;
    if (grid_.richardson) {
        const auto fine = solve_at_spacing(geometry, lambda_um, pol, m, 0.5 * h);
        if (fine) {
            const auto coarse = solve_at_spacing(geometry, lambda_um, pol, m, h);
            const double n_eff = coarse ? (4.0 * *fine - *coarse) / 3.0 : *fine;
            result = GuidedMode::make(pol, m, lambda_um, n_eff);
        }
    } else if (const auto n_eff = solve_at_spacing(geometry, lambda_um, pol, m, h)) {
        result = GuidedMode::make(pol, m, lambda_um, *n_eff);
    }
    if (result) {
        const double nb = material_.bulk_index(lambda_um, pol);
        if (!std::isfinite(result->n_eff)) throw NumericError("effective index is not finite", result->n_eff);
        // Right at cutoff the extrapolated index can dip to the substrate line; that is a cut-off mode.
        if (result->n_eff <= nb) result.reset();
    }

    std::lock_guard lock(memo_mutex_);
    memo_.emplace(key, result);
    return result;
}

GuidedMode ModeSolver::effective_index(const WaveguideGeometry& geometry, double lambda_um, Polarization pol,
                                       int m) const
{
    if (auto mode = try_effective_index(geometry, lambda_um, pol, m)) return *mode;
    throw NotGuidedError("mode m=" + std::to_string(m) + " (" + std::string(to_string(pol)) +
                         ") is not guided at w=" + std::to_string(geometry.width_um) + " um");
}

int ModeSolver::guided_mode_count(const WaveguideGeometry& geometry, double lambda_um, Polarization pol) const
{
    int m = 0;
    while (try_effective_index(geometry, lambda_um, pol, m))
        ++m;
    return m;
}

LateralField ModeSolver::lateral_field(const WaveguideGeometry& geometry, double lambda_um, Polarization pol, int m,
                                       double center_um, std::span<const double> x_um) const
{
    if (x_um.size() < 3) throw ConfigError("lateral_field: grid needs at least three nodes");
    const double h = x_um[1] - x_um[0];
    if (!(h > 0.0)) throw ConfigError("lateral_field: grid must be increasing");
    for (std::size_t i = 1; i < x_um.size(); ++i)
        if (std::abs((x_um[i] - x_um[i - 1]) - h) > 1e-9 * h) throw ConfigError("lateral_field: grid must be uniform");

    const double k0 = 2.0 * units::pi / lambda_um;
    LateralField out;
    out.x_um.assign(x_um.begin(), x_um.end());
    out.effective_index = lateral_effective_index(geometry, lambda_um, pol, center_um, x_um);
    out.background = material_.bulk_index(lambda_um, pol);

    SlabOperator op;
    op.h_um = h;
    op.left = op.right = SlabBoundary::transparent;
    for (double N : out.effective_index)
        op.k2n2.push_back(k0 * k0 * N * N);
    op.left_tail_k2n2 = op.k2n2.front();
    op.right_tail_k2n2 = op.k2n2.back();
    const auto mu = slab_eigenvalue(op, m);
    if (!mu) throw NotGuidedError("lateral_field: mode m=" + std::to_string(m) + " not guided");
    out.n_eff = std::sqrt(*mu) / k0;
    out.field = slab_eigenvector(op, *mu);

    // Sign: even modes positive at the centre, odd modes positive on the +x side.
    double moment = 0.0;
    for (std::size_t i = 0; i < x_um.size(); ++i)
        moment += out.field[i] * (m % 2 == 0 ? 1.0 : (x_um[i] - center_um));
    if (moment < 0.0)
        for (double& f : out.field)
            f = -f;
    return out;
}

IndexProfile build_profile(const MaterialModel& material, const WaveguideGeometry& geometry, double lambda_um,
                           Polarization pol, const GridSpec& grid)
{
    geometry.validate();
    const ModeSolver solver(material, grid);  // validates the grid
    const double D = material.indiffusion.diffusion_length_um;
    const double h = D / grid.samples_per_D;

    IndexProfile p;
    p.bulk = material.bulk_index(lambda_um, pol);
    p.x_um = solver.lateral_grid(geometry, h);
    const auto nz = static_cast<std::size_t>(std::ceil(grid.depth_extent_D * D / h));
    for (std::size_t j = 0; j <= nz; ++j)
        p.z_um.push_back(static_cast<double>(j) * h);

    p.n.resize(p.x_um.size() * p.z_um.size());
    for (std::size_t i = 0; i < p.x_um.size(); ++i) {
        const double s = solver.surface_increase(geometry, lambda_um, pol, p.x_um[i]);
        for (std::size_t j = 0; j < p.z_um.size(); ++j) {
            const double z = p.z_um[j];
            p.n[i * p.z_um.size() + j] = p.bulk + s * std::exp(-(z * z) / (D * D));
        }
    }
    return p;
}

std::optional<double> find_phasematch_width(const ModeSolver& solver, double beta_target_per_m, double lambda_um,
                                            Polarization pol, int m_search, const PhaseMatchOptions& opt)
{
    const double beta_floor = units::wavenumber_per_m(lambda_um) * solver.material().bulk_index(lambda_um, pol);
    // Below cutoff the branch is continued flat at the substrate line, keeping it monotone.
    auto f = [&](double w) {
        const auto mode = solver.try_effective_index(WaveguideGeometry{w, std::nullopt}, lambda_um, pol, m_search);
        return (mode ? mode->beta_per_m : beta_floor) - beta_target_per_m;
    };
    return bisect_root(f, opt.w_min_um, opt.w_max_um, opt.beta_tolerance_per_m, 1e-10);
}

GuidedMode pair_mode(const ModeSolver& solver, const PairSweep& setup, int guide, int order, double voltage_V)
{
    WaveguideGeometry g{setup.width_um, Electrode{setup.gap_um, guide == 0 ? setup.orientation_wg1 : setup.orientation_wg2,
                                                  voltage_V}};
    return solver.effective_index(g, setup.lambda_um, setup.pol, order);
}

PairSweep voltage_sweep_pair(const ModeSolver& solver, double width_um, double electrode_gap_um, double lambda_um,
                             Polarization pol, std::span<const double> voltages, int orientation_wg1)
{
    PairSweep sweep;
    sweep.width_um = width_um;
    sweep.gap_um = electrode_gap_um;
    sweep.orientation_wg1 = orientation_wg1;
    sweep.orientation_wg2 = -orientation_wg1;
    sweep.lambda_um = lambda_um;
    sweep.pol = pol;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double v : voltages) {
        PairSweepRow row;
        row.voltage_V = v;
        for (int guide = 0; guide < 2; ++guide) {
            WaveguideGeometry g{width_um,
                                Electrode{electrode_gap_um, guide == 0 ? sweep.orientation_wg1 : sweep.orientation_wg2, v}};
            for (int order = 0; order < 2; ++order) {
                const auto mode = solver.try_effective_index(g, lambda_um, pol, order);
                row.beta[guide][order] = mode ? mode->beta_per_m : nan;
                row.n_eff[guide][order] = mode ? mode->n_eff : nan;
                row.cutoff = row.cutoff || !mode;
            }
        }
        sweep.truncated = sweep.truncated || row.cutoff;
        sweep.rows.push_back(row);
    }
    return sweep;
}

std::optional<double> find_crossing_voltage(const ModeSolver& solver, const PairSweep& sweep,
                                            const CrossingOptions& opt)
{
    auto mismatch = [&](double v) {
        return pair_mode(solver, sweep, 0, 0, v).beta_per_m - pair_mode(solver, sweep, 1, 1, v).beta_per_m;
    };
    for (std::size_t i = 0; i + 1 < sweep.rows.size(); ++i) {
        const auto& a = sweep.rows[i];
        const auto& b = sweep.rows[i + 1];
        if (a.cutoff || b.cutoff) continue;
        const double fa = a.beta[0][0] - a.beta[1][1];
        const double fb = b.beta[0][0] - b.beta[1][1];
        if ((fa < 0.0) == (fb < 0.0) && fa != 0.0 && fb != 0.0) continue;
        return bisect_root(mismatch, std::min(a.voltage_V, b.voltage_V), std::max(a.voltage_V, b.voltage_V),
                           opt.beta_tolerance_per_m, 1e-12);
    }
    return std::nullopt;
}

}  // namespace mqsim
