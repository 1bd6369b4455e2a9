#ifndef VARWAVE_ASSEMBLY_HPP
#define VARWAVE_ASSEMBLY_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "varwave/geometry.hpp"
#include "varwave/model.hpp"

namespace varwave {

/// Discrete Galerkin operators on the free dofs (Gamma0 rows eliminated).
/// K is the variable-coefficient stiffness with entries
/// int_Omega (A grad phi_i) . grad phi_j dx (midpoint quadrature);
/// M and B are the lumped interior and Gamma1 boundary masses.
struct DiscreteOperators {
  int n_free = 0;
  int dim = 1;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd M;  // lumped, > 0
  Eigen::VectorXd B;  // lumped, > 0 exactly on Gamma1 dofs
  std::vector<int> gamma1_dofs;
  Eigen::MatrixXd coords;  // n_free x dim, node positions of the free dofs
  double c1 = 0.0;         // ellipticity floor of the assembled field
  double gamma1_measure = 0.0;  // geometric meas(Gamma1)
};

DiscreteOperators assemble_operators(const Mesh& mesh,
                                     const CoefficientField& field);

/// u^T K u  (the squared metric-gradient seminorm).
double grad_energy_seminorm(const DiscreteOperators& ops,
                            const Eigen::VectorXd& u);

/// Lumped L^p(Gamma1) norm: (sum_i B_ii |u_i|^p)^{1/p}.
double boundary_norm(const DiscreteOperators& ops, const Eigen::VectorXd& u,
                     double p);

/// Right-hand-side boundary contribution B_ii (h(u_i) - q(v_i) - eta v_i)
/// at Gamma1 dofs, zero elsewhere.
Eigen::VectorXd boundary_force(const DiscreteOperators& ops,
                               const SourceLaw& source,
                               const DampingLaw& damping,
                               const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v, double eta);

}  // namespace varwave

#endif
