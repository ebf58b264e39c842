#pragma once

#include <array>
#include <string>

#include "mqsim/coupling.hpp"

namespace mqsim {

// Joint basis order, also the order of every serialized state and matrix.
enum JointIndex : int { eTM = 0, oTM = 1, eTE = 2, oTE = 3 };
inline constexpr std::array<const char*, 4> joint_labels{"e,TM", "o,TM", "e,TE", "o,TE"};

/// alpha1 |e> + alpha2 |o>
struct ModalQubit {
    Vec2 alpha = Vec2(1.0, 0.0);

    void validate(double tol = 1e-12) const;
};

struct JointState {
    Vec4 alpha = Vec4(1.0, 0.0, 0.0, 0.0);

    void validate(double tol = 1e-12) const;

    // |pol> (x) |mode> with pol = (TM, TE) and mode = (e, o) amplitudes.
    static JointState product(const Vec2& pol, const Vec2& mode);
};

// U must be unitary to 1e-10 and match the state dimension.
ModalQubit apply(const Mat2& u, const ModalQubit& psi);
JointState apply(const Mat4& u, const JointState& psi);

// First nonzero amplitude made real and nonnegative.
Eigen::VectorXcd canonical_phase(const Eigen::VectorXcd& v, double zero_tol = 1e-14);

// Distance between two vectors after fixing the global phase of each.
double phase_insensitive_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

// Max-abs distance between two matrices after removing one global phase
// (the phase of the largest entry of b).
double phase_insensitive_distance(const MatX& a, const MatX& b);

struct PoincareCoords {
    double polar = 0.0;    // 0 at |e>, pi at |o>
    double azimuth = 0.0;  // arg(alpha2 / alpha1)
};

PoincareCoords poincare(const ModalQubit& psi);
ModalQubit from_poincare(const PoincareCoords& c);

// 2 |alpha1 alpha4 - alpha2 alpha3|
double concurrence(const JointState& psi);

// Target is the mode, control the polarization; flips iff TM.
Mat4 ideal_cnot();

Mat4 kron(const Mat2& pol, const Mat2& mode);

struct TruthTable {
    bool is_cnot = false;
    double fidelity = 0.0;                 // |tr(U^H CNOT)| / 4
    std::array<double, 4> target_weight{};  // |<CNOT k | U | k>|^2
    std::array<double, 4> phase{};          // arg <CNOT k | U | k>, relative to input e,TM
    std::array<bool, 4> ok{};

    nlohmann::json to_json() const;
};

TruthTable truth_table(const Mat4& u, double tol = 1e-6);

nlohmann::json state_to_json(const JointState& psi);

}  // namespace mqsim
