#ifndef VARWAVE_GEOMETRY_HPP
#define VARWAVE_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "varwave/common.hpp"

namespace varwave {

// ---------------------------------------------------------------------------
// Coefficient field A(x) and the induced metric G = A^{-1}
// ---------------------------------------------------------------------------

struct CoefficientField {
  int dim = 1;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> A;
  double c1 = 0.0;  // ellipticity floor, filled by ellipticity_constant

  Eigen::MatrixXd metric(const Eigen::VectorXd& x) const;  // G(x) = A(x)^{-1}

  static CoefficientField identity(int dim);
  static CoefficientField diagonal(const Eigen::VectorXd& diag);
  /// A(x) = (base + quad * |x|^2) * I.
  static CoefficientField scalar_profile(int dim, double base, double quad);
};

// ---------------------------------------------------------------------------
// Mesh with Gamma0 / Gamma1 boundary partition
// ---------------------------------------------------------------------------

enum class BoundaryLabel : std::uint8_t { Gamma0 = 0, Gamma1 = 1 };

struct Facet {
  BoundaryLabel label = BoundaryLabel::Gamma0;
  std::array<int, 2> nodes = {-1, -1};  // 1 node in 1D, 2 in 2D
  int n_nodes = 1;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  double measure = 0.0;  // counting measure in 1D, length in 2D
};

struct Mesh {
  int dim = 1;
  Eigen::MatrixXd nodes;                      // n_nodes x dim
  std::vector<std::array<int, 3>> elements;   // segments (2 ids) or triangles
  std::vector<Facet> facets;
  std::vector<int> free_index;  // node -> free dof, or -1 on Gamma0
  std::vector<int> free_nodes;  // free dof -> node
  int n_free = 0;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  Eigen::VectorXd node(int i) const { return nodes.row(i).transpose(); }
  bool on_gamma0(int node) const { return free_index[node] < 0; }
};

struct MeshSpec {
  enum class Kind { Interval, Rectangle };
  /// How boundary facets are split between Gamma0 (clamped) and Gamma1.
  enum class Partition {
    Default,        // 1D: Gamma0 = {0}, Gamma1 = {L}; 2D: all but left edge
    Gamma1Right,    // only the right end/edge is Gamma1
    Gamma1Left,     // 1D: Gamma1 = {0}, Gamma0 = {L}
    Gamma1Both,     // 1D: both endpoints Gamma1 (rejected: empty Gamma0)
    Gamma1AllButLeft,
  };

  Kind kind = Kind::Interval;
  double lx = 1.0;
  double ly = 1.0;
  int nx = 4;
  int ny = 4;
  Partition partition = Partition::Default;

  static MeshSpec interval(double length, int cells,
                           Partition partition = Partition::Default);
  static MeshSpec rectangle(double lx, double ly, int nx, int ny,
                            Partition partition = Partition::Default);
};

/// Conforming P1 mesh (segments / triangles) with the requested partition.
Mesh build_mesh(const MeshSpec& spec);

/// min over samples of the smallest eigenvalue of A(x); samples include the
/// element vertices, midpoints and centroid.
double ellipticity_constant(const CoefficientField& field, const Mesh& mesh,
                            int samples_per_element = 7);

/// Sum of facet measures for the requested label.
double boundary_measure(const Mesh& mesh, BoundaryLabel which);

// ---------------------------------------------------------------------------
// Escape vector field H
// ---------------------------------------------------------------------------

struct EscapeField {
  int dim = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> H;
  double sigma_estimate = 0.0;
  double delta_estimate = 0.0;
  std::pair<double, double> div_bounds = {0.0, 0.0};

  static EscapeField radial(int dim, const Eigen::VectorXd& x0);
};

struct EscapeReport {
  double sigma = 0.0;       // inf over samples of D_g H(X, X), |X|_g = 1
  double delta = 0.0;       // inf over Gamma1 of H . nu
  double div_min = 0.0;
  double div_max = 0.0;
  double gamma0_max_flux = 0.0;  // sup over Gamma0 of H . nu (must be <= 0)
  bool gamma0_ok = false;
  bool gamma1_ok = false;
  bool div_condition_ok = false;  // sigma <= div H <= sigma(gamma+4)/(gamma+2)
  double div_upper_bound = 0.0;
  int div_violations = 0;
  bool sample_based = false;  // true for non-identity A (numeric Christoffel)
};

/// Sampling check of the escape hypotheses: coercivity of D_g H, the sign of
/// H . nu on both boundary parts, and the divergence pinch used for decay.
/// Fills the estimates back into `field_H`.
EscapeReport check_escape_field(EscapeField& field_H,
                                const CoefficientField& field, const Mesh& mesh,
                                double gamma, int directions_per_sample = 8,
                                std::uint64_t seed = 0);

/// Plain-text mesh dump: node count/coordinates, connectivity, facet labels.
std::string mesh_dump(const Mesh& mesh);

}  // namespace varwave

#endif
