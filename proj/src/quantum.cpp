#include "mqsim/quantum.hpp"

#include <cmath>

#include "mqsim/errors.hpp"

namespace mqsim {

namespace {

void check_norm(const Eigen::VectorXcd& v, double tol, const char* what)
{
    const double n2 = v.squaredNorm();
    if (!(std::abs(n2 - 1.0) <= tol))
        throw DomainError(std::string(what) + ": state is not normalized (norm^2 = " + std::to_string(n2) + ")");
}

void check_unitary(const MatX& u)
{
    const double r = unitarity_residual(u);
    if (!(r <= 1e-10)) throw DomainError("operator is not unitary (residual " + std::to_string(r) + ")");
}

}  // namespace

void ModalQubit::validate(double tol) const { check_norm(alpha, tol, "modal qubit"); }
void JointState::validate(double tol) const { check_norm(alpha, tol, "joint state"); }

JointState JointState::product(const Vec2& pol, const Vec2& mode)
{
    JointState s;
    s.alpha << pol(0) * mode(0), pol(0) * mode(1), pol(1) * mode(0), pol(1) * mode(1);
    return s;
}

ModalQubit apply(const Mat2& u, const ModalQubit& psi)
{
    check_unitary(u);
    return ModalQubit{u * psi.alpha};
}

JointState apply(const Mat4& u, const JointState& psi)
{
    check_unitary(u);
    return JointState{u * psi.alpha};
}

Eigen::VectorXcd canonical_phase(const Eigen::VectorXcd& v, double zero_tol)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > zero_tol) return v * std::polar(1.0, -std::arg(v(i)));
    }
    return v;
}

double phase_insensitive_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    // Align on b's largest entry; less fragile than the first-nonzero rule when a and b differ slightly.
    Eigen::Index k = 0;
    b.cwiseAbs().maxCoeff(&k);
    const cd ra = std::abs(a(k)) > 0.0 ? a(k) / std::abs(a(k)) : cd(1.0);
    const cd rb = std::abs(b(k)) > 0.0 ? b(k) / std::abs(b(k)) : cd(1.0);
    return (a / ra - b / rb).cwiseAbs().maxCoeff();
}

double phase_insensitive_distance(const MatX& a, const MatX& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    Eigen::Index r = 0, c = 0;
    b.cwiseAbs().maxCoeff(&r, &c);
    const cd ra = std::abs(a(r, c)) > 0.0 ? a(r, c) / std::abs(a(r, c)) : cd(1.0);
    const cd rb = b(r, c) / std::abs(b(r, c));
    return (a / ra - b / rb).cwiseAbs().maxCoeff();
}

PoincareCoords poincare(const ModalQubit& psi)
{
    psi.validate();
    const double a1 = std::abs(psi.alpha(0));
    const double a2 = std::abs(psi.alpha(1));
    PoincareCoords c;
    c.polar = 2.0 * std::atan2(a2, a1);
    c.azimuth = (a1 > 0.0 && a2 > 0.0) ? std::arg(psi.alpha(1) / psi.alpha(0)) : 0.0;
    return c;
}

ModalQubit from_poincare(const PoincareCoords& c)
{
    return ModalQubit{Vec2(std::cos(0.5 * c.polar), std::polar(std::sin(0.5 * c.polar), c.azimuth))};
}

double concurrence(const JointState& psi)
{
    psi.validate(1e-9);
    const auto& a = psi.alpha;
    return 2.0 * std::abs(a(0) * a(3) - a(1) * a(2));
}

Mat4 ideal_cnot()
{
    Mat4 u = Mat4::Zero();
    u(oTM, eTM) = 1.0;
    u(eTM, oTM) = 1.0;
    u(eTE, eTE) = 1.0;
    u(oTE, oTE) = 1.0;
    return u;
}

Mat4 kron(const Mat2& pol, const Mat2& mode)
{
    Mat4 k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            k.block<2, 2>(2 * i, 2 * j) = pol(i, j) * mode;
    return k;
}

TruthTable truth_table(const Mat4& u, double tol)
{
    const Mat4 cnot = ideal_cnot();
    TruthTable t;
    t.fidelity = std::abs((u.adjoint() * cnot).trace()) / 4.0;

    std::array<cd, 4> amp{};
    for (int k = 0; k < 4; ++k) {
        Eigen::Index target = 0;
        cnot.col(k).cwiseAbs().maxCoeff(&target);
        amp[k] = u(target, k);
        t.target_weight[k] = std::norm(amp[k]);
    }
    const double ref = std::arg(amp[0]);
    bool all = true;
    for (int k = 0; k < 4; ++k) {
        t.phase[k] = wrap_phase(std::arg(amp[k]) - ref);
        t.ok[k] = std::abs(std::sqrt(t.target_weight[k]) - 1.0) < tol && std::abs(t.phase[k]) < tol;
        all = all && t.ok[k];
    }
    t.is_cnot = all;
    return t;
}

nlohmann::json TruthTable::to_json() const
{
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 0; k < 4; ++k)
        rows.push_back({{"input", joint_labels[k]},
                        {"target_weight", target_weight[k]},
                        {"phase_rad", phase[k]},
                        {"ok", static_cast<bool>(ok[k])}});
    return {{"is_cnot", is_cnot}, {"fidelity", fidelity}, {"rows", rows}};
}

nlohmann::json state_to_json(const JointState& psi)
{
    nlohmann::json amps = nlohmann::json::array();
    for (int k = 0; k < 4; ++k)
        amps.push_back({psi.alpha(k).real(), psi.alpha(k).imag()});
    return {{"basis", joint_labels}, {"amplitudes", amps}};
}

}  // namespace mqsim
