#include "varwave/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

namespace varwave {

// ---------------------------------------------------------------------------
// CoefficientField
// ---------------------------------------------------------------------------

Eigen::MatrixXd CoefficientField::metric(const Eigen::VectorXd& x) const {
  return A(x).inverse();
}

CoefficientField CoefficientField::identity(int dim) {
  CoefficientField f;
  f.dim = dim;
  f.A = [dim](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(dim, dim).eval();
  };
  f.c1 = 1.0;
  return f;
}

CoefficientField CoefficientField::diagonal(const Eigen::VectorXd& diag) {
  CoefficientField f;
  f.dim = static_cast<int>(diag.size());
  f.A = [diag](const Eigen::VectorXd&) {
    return Eigen::MatrixXd(diag.asDiagonal());
  };
  f.c1 = diag.minCoeff();
  return f;
}

CoefficientField CoefficientField::scalar_profile(int dim, double base,
                                                  double quad) {
  CoefficientField f;
  f.dim = dim;
  f.A = [dim, base, quad](const Eigen::VectorXd& x) {
    const double a = base + quad * x.squaredNorm();
    return (a * Eigen::MatrixXd::Identity(dim, dim)).eval();
  };
  f.c1 = base;  // refined by ellipticity_constant on the actual mesh
  return f;
}

// ---------------------------------------------------------------------------
// Mesh construction
// ---------------------------------------------------------------------------

MeshSpec MeshSpec::interval(double length, int cells, Partition partition) {
  MeshSpec s;
  s.kind = Kind::Interval;
  s.lx = length;
  s.nx = cells;
  s.partition = partition;
  return s;
}

MeshSpec MeshSpec::rectangle(double lx, double ly, int nx, int ny,
                             Partition partition) {
  MeshSpec s;
  s.kind = Kind::Rectangle;
  s.lx = lx;
  s.ly = ly;
  s.nx = nx;
  s.ny = ny;
  s.partition = partition;
  return s;
}

namespace {

Mesh build_interval(const MeshSpec& spec) {
  if (spec.nx < 2) fail(ErrorCode::ValidationError, "interval mesh needs >= 2 cells");
  if (spec.lx <= 0.0) fail(ErrorCode::ValidationError, "interval length must be positive");
  Mesh mesh;
  mesh.dim = 1;
  const int n = spec.nx + 1;
  mesh.nodes.resize(n, 1);
  for (int i = 0; i < n; ++i) mesh.nodes(i, 0) = spec.lx * i / spec.nx;
  for (int e = 0; e < spec.nx; ++e) mesh.elements.push_back({e, e + 1, -1});

  auto label_of = [&](bool left) {
    using P = MeshSpec::Partition;
    switch (spec.partition) {
      case P::Default:
      case P::Gamma1Right:
      case P::Gamma1AllButLeft:
        return left ? BoundaryLabel::Gamma0 : BoundaryLabel::Gamma1;
      case P::Gamma1Left:
        return left ? BoundaryLabel::Gamma1 : BoundaryLabel::Gamma0;
      case P::Gamma1Both:
        return BoundaryLabel::Gamma1;
    }
    return BoundaryLabel::Gamma0;
  };

  Facet left;
  left.label = label_of(true);
  left.nodes = {0, -1};
  left.n_nodes = 1;
  left.normal = Eigen::Vector2d(-1.0, 0.0);
  left.measure = 1.0;  // counting measure for 1D boundary points
  Facet right;
  right.label = label_of(false);
  right.nodes = {n - 1, -1};
  right.n_nodes = 1;
  right.normal = Eigen::Vector2d(1.0, 0.0);
  right.measure = 1.0;
  mesh.facets = {left, right};
  return mesh;
}

Mesh build_rectangle(const MeshSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1)
    fail(ErrorCode::ValidationError, "rectangle mesh needs nx, ny >= 1");
  if (spec.lx <= 0.0 || spec.ly <= 0.0)
    fail(ErrorCode::ValidationError, "rectangle sides must be positive");
  using P = MeshSpec::Partition;
  if (spec.partition == P::Gamma1Both || spec.partition == P::Gamma1Left)
    fail(ErrorCode::ValidationError, "unsupported 2D boundary partition");

  Mesh mesh;
  mesh.dim = 2;
  const int nx = spec.nx, ny = spec.ny;
  const int n = (nx + 1) * (ny + 1);
  mesh.nodes.resize(n, 2);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      mesh.nodes(id(i, j), 0) = spec.lx * i / nx;
      mesh.nodes(id(i, j), 1) = spec.ly * j / ny;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      mesh.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }

  // Gamma1 = all but the left edge (Default/AllButLeft) or the right edge only.
  const bool right_only = spec.partition == P::Gamma1Right;
  auto emit = [&](int a, int b, const Eigen::Vector2d& nu, bool is_left) {
    Facet f;
    f.label = is_left ? BoundaryLabel::Gamma0
              : (right_only && std::abs(nu.x() - 1.0) > 1e-14)
                  ? BoundaryLabel::Gamma0
                  : BoundaryLabel::Gamma1;
    f.nodes = {a, b};
    f.n_nodes = 2;
    f.normal = nu;
    f.measure = (mesh.nodes.row(a) - mesh.nodes.row(b)).norm();
    mesh.facets.push_back(f);
  };
  for (int i = 0; i < nx; ++i) {
    emit(id(i, 0), id(i + 1, 0), Eigen::Vector2d(0, -1), false);    // bottom
    emit(id(i, ny), id(i + 1, ny), Eigen::Vector2d(0, 1), false);   // top
  }
  for (int j = 0; j < ny; ++j) {
    emit(id(0, j), id(0, j + 1), Eigen::Vector2d(-1, 0), true);     // left
    emit(id(nx, j), id(nx, j + 1), Eigen::Vector2d(1, 0), false);   // right
  }
  return mesh;
}

}  // namespace

Mesh build_mesh(const MeshSpec& spec) {
  Mesh mesh = spec.kind == MeshSpec::Kind::Interval ? build_interval(spec)
                                                    : build_rectangle(spec);
  bool has_gamma0 = false;
  for (const auto& f : mesh.facets)
    has_gamma0 |= (f.label == BoundaryLabel::Gamma0);
  if (!has_gamma0)
    fail(ErrorCode::EmptyGamma0, "boundary partition leaves Gamma0 empty");

  std::vector<bool> clamped(mesh.n_nodes(), false);
  for (const auto& f : mesh.facets)
    if (f.label == BoundaryLabel::Gamma0)
      for (int k = 0; k < f.n_nodes; ++k) clamped[f.nodes[k]] = true;

  mesh.free_index.assign(mesh.n_nodes(), -1);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (!clamped[i]) {
      mesh.free_index[i] = static_cast<int>(mesh.free_nodes.size());
      mesh.free_nodes.push_back(i);
    }
  }
  mesh.n_free = static_cast<int>(mesh.free_nodes.size());
  return mesh;
}

double boundary_measure(const Mesh& mesh, BoundaryLabel which) {
  double total = 0.0;
  for (const auto& f : mesh.facets)
    if (f.label == which) total += f.measure;
  return total;
}

// ---------------------------------------------------------------------------
// Ellipticity sampling
// ---------------------------------------------------------------------------

namespace {

double min_eigenvalue_checked(const Eigen::MatrixXd& A) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorCode::ValidationError, "coefficient matrix not symmetric at sample");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<Eigen::VectorXd> element_samples(const Mesh& mesh,
                                             const std::array<int, 3>& elem,
                                             int samples_per_element) {
  std::vector<Eigen::VectorXd> pts;
  if (mesh.dim == 1) {
    const double a = mesh.nodes(elem[0], 0), b = mesh.nodes(elem[1], 0);
    const int k = std::max(3, samples_per_element);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd x(1);
      x[0] = a + (b - a) * i / (k - 1);
      pts.push_back(x);
    }
  } else {
    const Eigen::Vector2d p0 = mesh.nodes.row(elem[0]);
    const Eigen::Vector2d p1 = mesh.nodes.row(elem[1]);
    const Eigen::Vector2d p2 = mesh.nodes.row(elem[2]);
    auto bary = [&](double l0, double l1, double l2) {
      Eigen::VectorXd x(2);
      x = l0 * p0 + l1 * p1 + l2 * p2;
      return x;
    };
    pts.push_back(bary(1, 0, 0));
    pts.push_back(bary(0, 1, 0));
    pts.push_back(bary(0, 0, 1));
    pts.push_back(bary(0.5, 0.5, 0));
    pts.push_back(bary(0, 0.5, 0.5));
    pts.push_back(bary(0.5, 0, 0.5));
    pts.push_back(bary(1.0 / 3, 1.0 / 3, 1.0 / 3));
    (void)samples_per_element;
  }
  return pts;
}

}  // namespace

double ellipticity_constant(const CoefficientField& field, const Mesh& mesh,
                            int samples_per_element) {
  const auto n_elems = static_cast<std::int64_t>(mesh.elements.size());
  std::vector<double> local_min(n_elems, 0.0);
  parallel_for(n_elems, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t e = lo; e < hi; ++e) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& x : element_samples(mesh, mesh.elements[e], samples_per_element))
        m = std::min(m, min_eigenvalue_checked(field.A(x)));
      local_min[e] = m;
    }
  });
  double c1 = std::numeric_limits<double>::infinity();
  for (double m : local_min) c1 = std::min(c1, m);
  if (!(c1 > 0.0))
    fail(ErrorCode::NotPositiveDefinite, "sampled eigenvalue <= 0");
  return c1;
}

// ---------------------------------------------------------------------------
// Escape vector field
// ---------------------------------------------------------------------------

EscapeField EscapeField::radial(int dim, const Eigen::VectorXd& x0) {
  EscapeField f;
  f.dim = dim;
  Eigen::VectorXd origin = x0;
  f.H = [origin](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(x - origin);
  };
  return f;
}

namespace {

Eigen::MatrixXd jacobian_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& H,
                            const Eigen::VectorXd& x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd J(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (H(xp) - H(xm)) / (2.0 * h);
  }
  return J;
}

// Christoffel symbols of the metric G = A^{-1} from central differences:
// Gamma^k_{ij} = (1/2) A_{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}).
std::vector<Eigen::MatrixXd> christoffel_fd(const CoefficientField& field,
                                            const Eigen::VectorXd& x, double h) {
  const int n = field.dim;
  std::vector<Eigen::MatrixXd> dG(n);
  for (int d = 0; d < n; ++d) {
    Eigen::VectorXd xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    dG[d] = (field.metric(xp) - field.metric(xm)) / (2.0 * h);
  }
  const Eigen::MatrixXd A = field.A(x);
  std::vector<Eigen::MatrixXd> gamma(n, Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l)
          sum += A(k, l) * (dG[i](j, l) + dG[j](i, l) - dG[l](i, j));
        gamma[k](i, j) = 0.5 * sum;
      }
  return gamma;
}

}  // namespace

EscapeReport check_escape_field(EscapeField& field_H,
                                const CoefficientField& field, const Mesh& mesh,
                                double gamma, int directions_per_sample,
                                std::uint64_t seed) {
  (void)directions_per_sample;
  (void)seed;
  const double h = 1e-5;

  // Sample points: nodes and element centroids.
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < mesh.n_nodes(); ++i) samples.push_back(mesh.node(i));
  for (const auto& e : mesh.elements) {
    Eigen::VectorXd c = mesh.node(e[0]) + mesh.node(e[1]);
    int cnt = 2;
    if (mesh.dim == 2) {
      c += mesh.node(e[2]);
      cnt = 3;
    }
    samples.push_back(c / cnt);
  }

  bool identity = true;
  for (const auto& x : samples) {
    const Eigen::MatrixXd A = field.A(x);
    if ((A - Eigen::MatrixXd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() >
        1e-14) {
      identity = false;
      break;
    }
  }

  EscapeReport report;
  report.sample_based = !identity;
  double sigma = std::numeric_limits<double>::infinity();
  double div_min = std::numeric_limits<double>::infinity();
  double div_max = -std::numeric_limits<double>::infinity();

  std::vector<double> divs;
  divs.reserve(samples.size());
  for (const auto& x : samples) {
    const Eigen::MatrixXd J = jacobian_fd(field_H.H, x, h);
    divs.push_back(J.trace());
    div_min = std::min(div_min, J.trace());
    div_max = std::max(div_max, J.trace());
    if (identity) {
      // D_g H(X, X) = sym(grad H) X . X; its infimum over unit X is the
      // smallest eigenvalue of the symmetric part.
      const Eigen::MatrixXd S = 0.5 * (J + J.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      sigma = std::min(sigma, es.eigenvalues().minCoeff());
    } else {
      // Covariant correction: (D_j H)^k = d_j H^k + Gamma^k_{ij} H^i, and
      // D_g H(X, X) = X^j g_{kl} (D_j H)^k X^l; minimized over |X|_g = 1.
      const auto gamma_sym = christoffel_fd(field, x, h);
      const Eigen::VectorXd Hx = field_H.H(x);
      const int n = field.dim;
      Eigen::MatrixXd T = J;  // T(k, j) = (D_j H)^k
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) T(k, j) += gamma_sym[k].row(j).dot(Hx);
      const Eigen::MatrixXd G = field.metric(x);
      Eigen::MatrixXd Q = G * T;  // Q(l, j) = g_{lk} (D_j H)^k
      Q = 0.5 * (Q + Q.transpose()).eval();
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, G,
                                                                   Eigen::EigenvaluesOnly);
      sigma = std::min(sigma, es.eigenvalues().minCoeff());
    }
  }

  report.sigma = sigma;
  report.div_min = div_min;
  report.div_max = div_max;

  double delta = std::numeric_limits<double>::infinity();
  double gamma0_max = -std::numeric_limits<double>::infinity();
  bool has_gamma1 = false;
  for (const auto& f : mesh.facets) {
    Eigen::VectorXd mid = mesh.node(f.nodes[0]);
    if (f.n_nodes == 2) mid = 0.5 * (mid + mesh.node(f.nodes[1]));
    const double flux = field_H.H(mid).dot(f.normal.head(mesh.dim));
    if (f.label == BoundaryLabel::Gamma1) {
      delta = std::min(delta, flux);
      has_gamma1 = true;
    } else {
      gamma0_max = std::max(gamma0_max, flux);
    }
  }
  report.delta = has_gamma1 ? delta : 0.0;
  report.gamma0_max_flux = gamma0_max;
  report.gamma0_ok = gamma0_max <= 1e-12;
  report.gamma1_ok = has_gamma1 && delta > 0.0;

  report.div_upper_bound = sigma * (gamma + 4.0) / (gamma + 2.0);
  report.div_violations = 0;
  for (double d : divs)
    if (d < sigma - 1e-9 || d > report.div_upper_bound + 1e-9)
      ++report.div_violations;
  report.div_condition_ok = report.div_violations == 0;

  field_H.sigma_estimate = report.sigma;
  field_H.delta_estimate = report.delta;
  field_H.div_bounds = {report.div_min, report.div_max};
  return report;
}

// ---------------------------------------------------------------------------
// Mesh dump
// ---------------------------------------------------------------------------

std::string mesh_dump(const Mesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << "dim " << mesh.dim << "\n";
  os << "nodes " << mesh.n_nodes() << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    for (int d = 0; d < mesh.dim; ++d) os << (d ? " " : "") << mesh.nodes(i, d);
    os << "\n";
  }
  os << "elements " << mesh.elements.size() << "\n";
  for (const auto& e : mesh.elements) {
    os << e[0] << " " << e[1];
    if (mesh.dim == 2) os << " " << e[2];
    os << "\n";
  }
  os << "facets " << mesh.facets.size() << "\n";
  for (const auto& f : mesh.facets) {
    os << (f.label == BoundaryLabel::Gamma0 ? "gamma0" : "gamma1");
    for (int k = 0; k < f.n_nodes; ++k) os << " " << f.nodes[k];
    os << "\n";
  }
  return os.str();
}

}  // namespace varwave
