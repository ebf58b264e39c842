#pragma once

// Coupled-mode theory for two guided modes a, b:
//
//     da/dz = -j beta_a a - j kappa b,    db/dz = -j beta_b b - j kappa a.
//
// transfer_matrix() returns the reduced matrix T with the common and relative
// propagation phases split off the way the polar form expects:
//
//     physical(L) = diag(exp(-j beta_a L), exp(-j beta_b L)) * T,   delta_beta = beta_a - beta_b.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "mqsim/modesolver.hpp"
#include "mqsim/units.hpp"

namespace mqsim {

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using MatX = Eigen::MatrixXcd;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;

inline constexpr cd J{0.0, 1.0};

struct CouplerParams {
    double kappa_per_m = 0.0;
    double delta_beta_per_m = 0.0;
    double length_m = 0.0;

    double gamma() const;
    void validate() const;
};

Mat2 transfer_matrix(const CouplerParams& p);

// Transfer including exp(-j beta L) of each mode.
Mat2 physical_transfer(const CouplerParams& p, double beta_a_per_m, double beta_b_per_m);

struct PolarForm {
    double theta = 0.0;  // [0, pi]
    double phi_A = 0.0;
    double phi_B = 0.0;

    Mat2 matrix() const;
};

PolarForm polar_form(const CouplerParams& p);

struct CascadeForm {
    double gamma1 = 0.0;  // phi_A - phi_B
    double gamma2 = 0.0;  // -phi_A - phi_B
    double theta = 0.0;
    double global_phase = 0.0;  // -phi_B

    static Mat2 T1(double gamma1);  // diag(1, e^{-j gamma1})
    static Mat2 T2(double theta);   // mixing
    static Mat2 T3(double gamma2);  // diag(e^{-j gamma2}, 1)

    // exp(j global_phase) T3 T2 T1
    Mat2 product() const;
};

CascadeForm cascade_decomposition(const CouplerParams& p);

// ||U^H U - I|| in the max-abs entry norm.
double unitarity_residual(const MatX& u);

// Overlap estimate of kappa (rad/m) between the isolated modes of two guides
// sampled on one grid: geometric mean of |kappa_ab| and |kappa_ba| with
// kappa_ab = k^2 / (2 beta_a) * integral (N_b^2 - n_bg^2) psi_a psi_b dx.
double coupling_coefficient(const LateralField& a, const LateralField& b, double lambda_um);

struct AmplitudeRow {
    double z_m = 0.0;
    cd a1;
    cd a2;
};

std::vector<AmplitudeRow> amplitude_evolution(const CouplerParams& p, const Vec2& input,
                                              const std::vector<double>& z_m);

// Splitting a multi-mode coupler into independent 2x2 interactions.
struct ModeEntry {
    std::string label;
    double beta_per_m = 0.0;
};

struct CouplingEntry {
    int a = 0;
    int b = 0;
    double kappa_per_m = 0.0;
};

enum class BlockKind { matched, partial };

struct CouplerBlock {
    int a = 0;
    int b = 0;
    BlockKind kind = BlockKind::matched;
    CouplerParams params;  // delta_beta = beta_a - beta_b
};

struct BlockThresholds {
    double matched_rad = units::pi / 8.0;      // |dbeta| L below this
    double passthrough_rad = 2.0 * units::pi;  // and above this
};

struct BlockReduction {
    std::vector<ModeEntry> modes;
    double length_m = 0.0;
    std::vector<CouplerBlock> blocks;
    std::vector<int> passthrough;

    // Full unitary in the order of `modes`, propagation phases included.
    MatX unitary() const;
    MatX unitary_at(double z_m) const;  // blocks classified at length_m, evaluated at z
};

// Throws DesignError when a mode is matched to two partners.
BlockReduction reduce_to_blocks(const std::vector<ModeEntry>& modes, const std::vector<CouplingEntry>& couplings,
                                double length_m, const BlockThresholds& th = {});

// {"rows", "cols", "global_phase", "entries": row-major [[re, im], ...]}
nlohmann::json unitary_to_json(const MatX& u, double global_phase = 0.0);
MatX unitary_from_json(const nlohmann::json& j);

// Wrap to (-pi, pi].
double wrap_phase(double phi);

}  // namespace mqsim
