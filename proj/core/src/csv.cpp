#include "varwave/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace varwave {

const char* const kTimeseriesHeader =
    "t,dt,E,kinetic,elastic,source,grad_seminorm,bdry_norm,J,I,G,N,M,"
    "dissipation_cum,newton_iters";

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_timeseries(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << kTimeseriesHeader << "\n";
  for (const Record& r : trajectory.records) {
    out << fmt(r.t) << ',' << fmt(r.dt) << ',' << fmt(r.E) << ','
        << fmt(r.kinetic) << ',' << fmt(r.elastic) << ',' << fmt(r.source_term)
        << ',' << fmt(r.grad_seminorm) << ',' << fmt(r.bdry_norm) << ','
        << fmt(r.J) << ',' << fmt(r.I) << ',' << fmt(r.G) << ',' << fmt(r.N)
        << ',' << fmt(r.M_fn) << ',' << fmt(r.dissipation_cum) << ','
        << r.newton_iters << "\n";
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

int TimeseriesData::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd TimeseriesData::series(const std::string& name) const {
  const int c = column(name);
  if (c < 0) fail(ErrorCode::IoError, "timeseries has no column " + name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = rows[i][c];
  return v;
}

TimeseriesData read_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  TimeseriesData data;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoError, "empty file " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) data.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != data.columns.size())
      fail(ErrorCode::IoError, "ragged row in " + path);
    data.rows.push_back(std::move(values));
  }
  return data;
}

void write_mesh_dump(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << mesh_dump(mesh);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

void write_snapshot(const Mesh& mesh, const Snapshot& snapshot,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << "dim " << mesh.dim << "\n";
  out << "time " << fmt(snapshot.t) << "\n";
  out << "nodes " << mesh.n_nodes() << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    for (int d = 0; d < mesh.dim; ++d) out << fmt(mesh.nodes(i, d)) << ' ';
    const int f = mesh.free_index[i];
    const double u = f >= 0 ? snapshot.u[f] : 0.0;
    const double v = f >= 0 ? snapshot.v[f] : 0.0;
    out << fmt(u) << ' ' << fmt(v) << "\n";
  }
  out << "elements " << mesh.elements.size() << "\n";
  for (const auto& e : mesh.elements) {
    out << e[0] << ' ' << e[1];
    if (mesh.dim == 2) out << ' ' << e[2];
    out << "\n";
  }
  out << "facets " << mesh.facets.size() << "\n";
  for (const auto& f : mesh.facets) {
    out << (f.label == BoundaryLabel::Gamma0 ? "gamma0" : "gamma1");
    for (int k = 0; k < f.n_nodes; ++k) out << ' ' << f.nodes[k];
    out << "\n";
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace varwave
