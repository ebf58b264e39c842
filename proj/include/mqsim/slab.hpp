#pragma once

// One-dimensional scalar Helmholtz slab problem on a uniform grid,
//
//     psi'' + k0^2 n(x)^2 psi = beta^2 psi,
//
// discretized with the three-point Laplacian. The ends are either Dirichlet
// (psi = 0 one step past the last node) or transparent: the exact decaying
// solution of the discrete operator in a uniform tail, psi_{N+1} = r psi_N,
// with r + 1/r = 2 + h^2 (beta^2 - k0^2 n_tail^2). Because r depends on the
// eigenvalue, modes are located by bisection on a Sturm count of H(mu) - mu.

#include <optional>
#include <vector>

namespace mqsim {

enum class SlabBoundary { dirichlet, transparent };

struct SlabOperator {
    double h_um = 0.0;
    std::vector<double> k2n2;  // k0^2 n^2 at the nodes, um^-2
    SlabBoundary left = SlabBoundary::transparent;
    SlabBoundary right = SlabBoundary::transparent;
    double left_tail_k2n2 = 0.0;   // used only for transparent ends
    double right_tail_k2n2 = 0.0;

    // Lowest beta^2 a guided mode may have: the largest transparent tail value.
    double cutoff() const;
    // Number of eigenvalues of H(mu) strictly above mu.
    int count_above(double mu) const;
};

int slab_guided_count(const SlabOperator& op);

// beta^2 (um^-2) of mode m, m = 0 the most confined. Empty if fewer than m+1 modes are guided.
std::optional<double> slab_eigenvalue(const SlabOperator& op, int m, double rel_tol = 1e-14);

// Eigenvector of H(beta2) for the eigenvalue beta2, normalized to sum(psi^2) h = 1.
std::vector<double> slab_eigenvector(const SlabOperator& op, double beta2);

}  // namespace mqsim
