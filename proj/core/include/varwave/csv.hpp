#ifndef VARWAVE_CSV_HPP
#define VARWAVE_CSV_HPP

#include <string>
#include <vector>

#include "varwave/dynamics.hpp"
#include "varwave/geometry.hpp"

namespace varwave {

/// Column order of the timeseries file.
extern const char* const kTimeseriesHeader;

/// One CSV row per record, full-precision decimals, header fixed to
/// kTimeseriesHeader.
void write_timeseries(const Trajectory& trajectory, const std::string& path);

struct TimeseriesData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  Eigen::VectorXd series(const std::string& name) const;
};

TimeseriesData read_timeseries(const std::string& path);

void write_mesh_dump(const Mesh& mesh, const std::string& path);

/// Mesh dump with nodal u, v columns appended to each node line.
void write_snapshot(const Mesh& mesh, const Snapshot& snapshot,
                    const std::string& path);

}  // namespace varwave

#endif
