#ifndef NSFDE_IO_HPP
#define NSFDE_IO_HPP

#include <fstream>
#include <string>
#include <vector>

#include "nsfde/measure.hpp"
#include "nsfde/segment.hpp"
#include "nsfde/solver.hpp"

namespace nsfde {

inline constexpr int kFormatVersion = 1;

/// RFC-4180 field quoting: fields with a comma, quote, CR or LF are wrapped in quotes and
/// embedded quotes doubled.
std::string csv_escape(const std::string& field);

/// CSV file whose first line is "# nsfde-<kind> v<version>", followed by a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& kind, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

/// Header line {"format":"nsfde-trajectory","version":1,...} then one {t, coeffs, seg_norm}
/// record per stored snapshot.
void write_trajectory_jsonl(const std::string& path, const Trajectory& traj,
                            const std::string& config_text = {});

struct TrajectoryFile {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> times;
  std::vector<ModeVector> snapshots;
  std::vector<double> seg_norms;
};

TrajectoryFile read_trajectory_jsonl(const std::string& path);

/// Measure file: header (burn-in, thin, seeds and the resolved config text) followed by
/// "record" and "segment" lines. Doubles are written with round-trip precision.
void write_measure_jsonl(const std::string& path, const EmpiricalMeasure& mu,
                         const std::string& config_text);

struct MeasureFile {
  EmpiricalMeasure measure;
  std::string config_text;
};

MeasureFile read_measure_jsonl(const std::string& path);

/// Columns theta, mode_1..mode_N; one row per grid node, oldest first.
void write_segment_csv(const std::string& path, const Segment& seg);

}  // namespace nsfde

#endif  // NSFDE_IO_HPP
