#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "mqsim/material.hpp"

namespace mqsim {

/// Electrode over a waveguide. orientation = +1 means the field points along
/// +z (the optic axis), which lowers the index for positive voltage; -1 raises it.
struct Electrode {
    double gap_um = 4.0;
    int orientation = +1;
    double voltage_V = 0.0;
};

/// Ti-diffused channel in z-cut, y-propagating LiNbO3.
struct WaveguideGeometry {
    double width_um = 0.0;
    std::optional<Electrode> electrode;

    void validate() const;
};

struct GridSpec {
    double samples_per_D = 24.0;
    double min_samples_per_D = 8.0;
    double lateral_margin_D = 4.0;  // beyond each strip edge
    double depth_extent_D = 5.0;
    bool richardson = true;  // extrapolate n_eff from spacings h and h/2

    void validate() const;
};

struct GuidedMode {
    Polarization pol = Polarization::TM;
    int order = 0;  // 0 even, 1 odd
    double lambda_um = 0.0;
    double n_eff = 0.0;
    double beta_per_m = 0.0;

    // beta is derived from n_eff here and nowhere else.
    static GuidedMode make(Polarization pol, int order, double lambda_um, double n_eff);
};

/// n(x, z) on a (lateral x depth) grid; z = 0 is the crystal surface.
struct IndexProfile {
    std::vector<double> x_um;
    std::vector<double> z_um;
    std::vector<double> n;  // n[ix * z_um.size() + iz]
    double bulk = 0.0;

    double at(std::size_t ix, std::size_t iz) const { return n[ix * z_um.size() + iz]; }
    double peak() const;
};

IndexProfile build_profile(const MaterialModel& material, const WaveguideGeometry& geometry, double lambda_um,
                           Polarization pol, const GridSpec& grid = {});

/// Lateral mode of the effective-index reduction sampled on a caller-provided uniform grid.
struct LateralField {
    std::vector<double> x_um;
    std::vector<double> effective_index;  // depth-pass index N(x)
    std::vector<double> field;            // sum(field^2) dx = 1, dx in um
    double n_eff = 0.0;
    double background = 0.0;  // N far from the guide
};

class ModeSolver {
  public:
    explicit ModeSolver(MaterialModel material, GridSpec grid = {});

    const MaterialModel& material() const { return material_; }
    const GridSpec& grid() const { return grid_; }

    // Throws NotGuidedError below cutoff and NumericError on solver failure.
    GuidedMode effective_index(const WaveguideGeometry& geometry, double lambda_um, Polarization pol, int m) const;
    std::optional<GuidedMode> try_effective_index(const WaveguideGeometry& geometry, double lambda_um,
                                                  Polarization pol, int m) const;
    int guided_mode_count(const WaveguideGeometry& geometry, double lambda_um, Polarization pol) const;

    // Depth pass only: N(x) for a guide centred at center_um.
    std::vector<double> lateral_effective_index(const WaveguideGeometry& geometry, double lambda_um,
                                                Polarization pol, double center_um,
                                                std::span<const double> x_um) const;

    LateralField lateral_field(const WaveguideGeometry& geometry, double lambda_um, Polarization pol, int m,
                               double center_um, std::span<const double> x_um) const;

    // Surface index increase s(x) = (delta_n + delta_n_EO) * profile(x) / profile(0).
    double surface_increase(const WaveguideGeometry& geometry, double lambda_um, Polarization pol,
                            double x_from_center_um) const;
    double eo_shift(const WaveguideGeometry& geometry, double lambda_um, Polarization pol) const;

    std::vector<double> lateral_grid(const WaveguideGeometry& geometry, double h_um) const;

  private:
    double depth_effective_index(double surface_dn, double n_bulk, double k0, double h_um) const;
    std::optional<double> solve_at_spacing(const WaveguideGeometry& geometry, double lambda_um, Polarization pol,
                                           int m, double h_um) const;

    using Key = std::tuple<double, bool, double, int, double, double, int, int>;
    static Key make_key(const WaveguideGeometry& g, double lambda_um, Polarization pol, int m);

    MaterialModel material_;
    GridSpec grid_;
    mutable std::mutex memo_mutex_;
    mutable std::map<Key, std::optional<GuidedMode>> memo_;
};

/// Bisection on the monotone beta(w) branch for beta_target.
struct PhaseMatchOptions {
    double w_min_um = 0.5;
    double w_max_um = 20.0;
    double beta_tolerance_per_m = 1.0;
};

std::optional<double> find_phasematch_width(const ModeSolver& solver, double beta_target_per_m, double lambda_um,
                                            Polarization pol, int m_search, const PhaseMatchOptions& opt = {});

/// Two identical two-mode guides under a shared electrode pair; the field
/// points one way in WG1 and the other way in WG2.
struct PairSweepRow {
    double voltage_V = 0.0;
    // [guide][order]; NaN when cut off
    double beta[2][2] = {};
    double n_eff[2][2] = {};
    bool cutoff = false;
};

struct PairSweep {
    double width_um = 0.0;
    double gap_um = 0.0;
    int orientation_wg1 = +1;
    int orientation_wg2 = -1;
    double lambda_um = 0.0;
    Polarization pol = Polarization::TM;
    std::vector<PairSweepRow> rows;
    bool truncated = false;
};

PairSweep voltage_sweep_pair(const ModeSolver& solver, double width_um, double electrode_gap_um, double lambda_um,
                             Polarization pol, std::span<const double> voltages, int orientation_wg1 = +1);

/// Modal propagation constants of one guide of the pair at voltage V.
GuidedMode pair_mode(const ModeSolver& solver, const PairSweep& setup, int guide, int order, double voltage_V);

struct CrossingOptions {
    double beta_tolerance_per_m = 0.1;
};

// Voltage where beta_even(WG1) = beta_odd(WG2), refined by bisection inside the sweep's bracket.
std::optional<double> find_crossing_voltage(const ModeSolver& solver, const PairSweep& sweep,
                                            const CrossingOptions& opt = {});

// Generic bracketed bisection used for the root searches above.
template <class F>
std::optional<double> bisect_root(F&& f, double lo, double hi, double f_tol, double x_tol, int max_iter = 200)
{
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) return std::nullopt;
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) < f_tol || hi - lo < x_tol) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace mqsim
