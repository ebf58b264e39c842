#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mqsim {

// TE sees the ordinary index, TM the extraordinary one (z-cut, y-propagating).
enum class Polarization { TE, TM };

std::string_view to_string(Polarization pol);
Polarization parse_polarization(std::string_view text);

/// One Sellmeier branch, n^2 = a + sum_i b_i L^2 / (L^2 - c_i) - ir * L^2 with L in micrometres.
struct SellmeierSet {
    struct Term {
        double b;
        double c_um2;
    };

    std::string source;
    double lambda_min_um = 0.0;
    double lambda_max_um = 0.0;
    double a = 1.0;
    std::vector<Term> terms;
    double ir_um2 = 0.0;

    bool in_window(double lambda_um) const { return lambda_um >= lambda_min_um && lambda_um <= lambda_max_um; }

    // Throws DomainError outside [lambda_min_um, lambda_max_um].
    double index(double lambda_um) const;
};

enum class DispersionPolicy { off, multiplicative };

/// Titanium in-diffusion model. The surface index increase of a strip of
/// width w is 2 delta rho erf(w / 2D) / (sqrt(pi) D).
struct TiIndiffusionParams {
    double thickness_um = 0.1;
    double diffusion_length_um = 3.0;
    double rho_ordinary = 0.47;
    double rho_extraordinary = 0.625;
    double xi_a = 0.052;
    double xi_b = 0.065;
    DispersionPolicy policy = DispersionPolicy::multiplicative;
    double reference_wavelength_um = 0.812;

    double xi(double lambda_um) const;
    void validate() const;
};

struct PockelsTensor {
    double r13_pm_per_V = 10.9;
    double r33_pm_per_V = 32.6;

    void validate() const;
};

class MaterialModel {
  public:
    SellmeierSet ordinary;
    SellmeierSet extraordinary;
    TiIndiffusionParams indiffusion;
    PockelsTensor pockels;

    // Congruent LiNbO3 defaults (data/congruent_linbo3.ini mirrors these).
    static MaterialModel congruent_lithium_niobate();

    // Parses the sectioned key-value format; unknown sections or keys are a ConfigError.
    static MaterialModel from_config(std::string_view text);
    static MaterialModel load(const std::string& path);
    std::string to_config() const;

    void validate() const;

    double bulk_index(double lambda_um, Polarization pol) const;

    // Surface index increase for film width w. Applies the dispersion policy.
    double delta_n(double width_um, double lambda_um, Polarization pol) const;

    // Limit of delta_n as w -> infinity (the erf saturates at one).
    double peak_delta_n(double lambda_um, Polarization pol) const;

    double pockels_pm_per_V(Polarization pol) const
    {
        return pol == Polarization::TM ? pockels.r33_pm_per_V : pockels.r13_pm_per_V;
    }
};

/// Pockels index change -n^3 r V / (2 d). r in pm/V, gap in micrometres.
double eo_index_shift(double n, double r_pm_per_V, double volts, double gap_um);

}  // namespace mqsim
