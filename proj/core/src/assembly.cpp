#include "varwave/assembly.hpp"

#include <cmath>
#include <vector>

namespace varwave {

namespace {

void check_sized(const DiscreteOperators& ops, const Eigen::VectorXd& u) {
  if (u.size() != ops.n_free)
    fail(ErrorCode::DimensionMismatch,
         "vector sized " + std::to_string(u.size()) + ", expected " +
             std::to_string(ops.n_free));
}

}  // namespace

DiscreteOperators assemble_operators(const Mesh& mesh,
                                     const CoefficientField& field) {
  DiscreteOperators ops;
  ops.dim = mesh.dim;
  ops.n_free = mesh.n_free;
  ops.M = Eigen::VectorXd::Zero(mesh.n_free);
  ops.B = Eigen::VectorXd::Zero(mesh.n_free);
  ops.coords.resize(mesh.n_free, mesh.dim);
  for (int i = 0; i < mesh.n_free; ++i)
    ops.coords.row(i) = mesh.nodes.row(mesh.free_nodes[i]);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.elements.size() * 9);

  auto add = [&](int node_i, int node_j, double value) {
    const int fi = mesh.free_index[node_i];
    const int fj = mesh.free_index[node_j];
    if (fi >= 0 && fj >= 0) triplets.emplace_back(fi, fj, value);
  };

  if (mesh.dim == 1) {
    for (const auto& e : mesh.elements) {
      const double a = mesh.nodes(e[0], 0), b = mesh.nodes(e[1], 0);
      const double h = b - a;
      if (h <= 0.0) fail(ErrorCode::SingularElement, "degenerate segment");
      Eigen::VectorXd mid(1);
      mid[0] = 0.5 * (a + b);
      const double coeff = field.A(mid)(0, 0);  // midpoint quadrature
      const double k = coeff / h;
      add(e[0], e[0], k);
      add(e[1], e[1], k);
      add(e[0], e[1], -k);
      add(e[1], e[0], -k);
      for (int v = 0; v < 2; ++v) {
        const int fi = mesh.free_index[e[v]];
        if (fi >= 0) ops.M[fi] += 0.5 * h;  // lumped (row-sum) mass
      }
    }
  } else {
    for (const auto& e : mesh.elements) {
      const Eigen::Vector2d p0 = mesh.nodes.row(e[0]);
      const Eigen::Vector2d p1 = mesh.nodes.row(e[1]);
      const Eigen::Vector2d p2 = mesh.nodes.row(e[2]);
      const double det =
          (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
      const double area = 0.5 * det;
      if (area <= 0.0) fail(ErrorCode::SingularElement, "degenerate triangle");
      // P1 gradients: grad phi_i constant per element.
      Eigen::Matrix<double, 2, 3> grads;
      grads.col(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / det;
      grads.col(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / det;
      grads.col(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / det;
      Eigen::VectorXd centroid(2);
      centroid = (p0 + p1 + p2) / 3.0;
      const Eigen::MatrixXd A = field.A(centroid);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          add(e[i], e[j], area * (A * grads.col(i)).dot(grads.col(j)));
      for (int v = 0; v < 3; ++v) {
        const int fi = mesh.free_index[e[v]];
        if (fi >= 0) ops.M[fi] += area / 3.0;
      }
    }
  }

  ops.K.resize(mesh.n_free, mesh.n_free);
  ops.K.setFromTriplets(triplets.begin(), triplets.end());
  ops.K.makeCompressed();

  for (const auto& f : mesh.facets) {
    if (f.label != BoundaryLabel::Gamma1) continue;
    if (f.n_nodes == 1) {
      const int fi = mesh.free_index[f.nodes[0]];
      if (fi >= 0) ops.B[fi] += f.measure;  // counting measure: weight 1
    } else {
      const int fa = mesh.free_index[f.nodes[0]];
      const int fb = mesh.free_index[f.nodes[1]];
      if (fa >= 0 && fb >= 0) {
        ops.B[fa] += 0.5 * f.measure;
        ops.B[fb] += 0.5 * f.measure;
      } else if (fa >= 0 || fb >= 0) {
        // Clamped endpoint (Gamma0 corner): reassign the full facet weight
        // to the free node so sum(B) = meas(Gamma1) exactly.
        ops.B[fa >= 0 ? fa : fb] += f.measure;
      }
    }
  }
  for (int i = 0; i < mesh.n_free; ++i)
    if (ops.B[i] > 0.0) ops.gamma1_dofs.push_back(i);

  ops.gamma1_measure = boundary_measure(mesh, BoundaryLabel::Gamma1);
  ops.c1 = field.c1;
  return ops;
}

double grad_energy_seminorm(const DiscreteOperators& ops,
                            const Eigen::VectorXd& u) {
  check_sized(ops, u);
  return u.dot(ops.K * u);
}

double boundary_norm(const DiscreteOperators& ops, const Eigen::VectorXd& u,
                     double p) {
  check_sized(ops, u);
  if (p < 1.0) fail(ErrorCode::ValidationError, "boundary norm needs p >= 1");
  double sum = 0.0;
  for (int i : ops.gamma1_dofs) sum += ops.B[i] * std::pow(std::abs(u[i]), p);
  return std::pow(sum, 1.0 / p);
}

Eigen::VectorXd boundary_force(const DiscreteOperators& ops,
                               const SourceLaw& source,
                               const DampingLaw& damping,
                               const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v, double eta) {
  check_sized(ops, u);
  check_sized(ops, v);
  Eigen::VectorXd force = Eigen::VectorXd::Zero(ops.n_free);
  for (int i : ops.gamma1_dofs)
    force[i] = ops.B[i] * (eval_source(source, u[i]) -
                           eval_damping(damping, v[i]) - eta * v[i]);
  return force;
}

}  // namespace varwave
