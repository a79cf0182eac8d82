#include "nsfde/io.hpp"

#include <json.hpp>

#include "nsfde/config.hpp"
#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

json to_json(const ModeVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ModeVector to_modes(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const ModeVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<json> read_lines(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::vector<json> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lines.empty() || lines.front().value("format", "") != format) {
    throw Error("'" + path + "' is not an " + format + " file");
  }
  if (lines.front().value("version", 0) != kFormatVersion) {
    throw Error("'" + path + "' has unsupported format version");
  }
  return lines;
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& header)
    : out_(open_out(path)), columns_(header.size()) {
  out_ << "# nsfde-" << kind << " v" << kFormatVersion << "\r\n";
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw ShapeError("CSV row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << "\r\n";
  if (!out_) throw Error("CSV write failed");
}

void write_trajectory_jsonl(const std::string& path, const Trajectory& traj,
                            const std::string& config_text) {
  std::ofstream out = open_out(path);
  json header{{"format", "nsfde-trajectory"},
              {"version", kFormatVersion},
              {"seed", traj.seed},
              {"stream", traj.stream}};
  if (!config_text.empty()) header["config"] = config_text;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << json{{"t", traj.times[i]}, {"coeffs", to_json(traj.snapshots[i])},
                {"seg_norm", traj.seg_norms[i]}}
               .dump()
        << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

TrajectoryFile read_trajectory_jsonl(const std::string& path) {
  const auto lines = read_lines(path, "nsfde-trajectory");
  TrajectoryFile f;
  f.seed = lines.front().at("seed").get<std::uint64_t>();
  f.stream = lines.front().at("stream").get<std::uint64_t>();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    f.times.push_back(lines[i].at("t").get<double>());
    f.snapshots.push_back(to_modes(lines[i].at("coeffs")));
    f.seg_norms.push_back(lines[i].at("seg_norm").get<double>());
  }
  return f;
}

void write_measure_jsonl(const std::string& path, const EmpiricalMeasure& mu,
                         const std::string& config_text) {
  std::ofstream out = open_out(path);
  out << json{{"format", "nsfde-measure"},
              {"version", kFormatVersion},
              {"burn_in", mu.burn_in},
              {"thin", mu.thin},
              {"t_end", mu.t_end},
              {"seeds", mu.seeds},
              {"n_records", mu.records.size()},
              {"n_segments", mu.segments.size()},
              {"config", config_text}}
             .dump()
      << '\n';
  for (const auto& r : mu.records) {
    out << json{{"type", "record"}, {"t", r.t}, {"stream", r.stream},
                {"seg_norm", r.seg_norm}, {"coeffs", to_json(r.state)}}
               .dump()
        << '\n';
  }
  for (const auto& s : mu.segments) {
    json nodes = json::array();
    for (int j = 0; j <= s.segment.steps(); ++j) nodes.push_back(to_json(s.segment.node(j)));
    out << json{{"type", "segment"}, {"t", s.t},           {"stream", s.stream},
                {"h", s.segment.h()},  {"dt", s.segment.dt()}, {"nodes", nodes}}
               .dump()
        << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

MeasureFile read_measure_jsonl(const std::string& path) {
  const auto lines = read_lines(path, "nsfde-measure");
  MeasureFile f;
  const json& head = lines.front();
  f.config_text = head.value("config", "");
  f.measure.burn_in = head.at("burn_in").get<double>();
  f.measure.thin = head.at("thin").get<int>();
  f.measure.t_end = head.at("t_end").get<double>();
  f.measure.seeds = head.at("seeds").get<std::vector<std::uint64_t>>();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const json& l = lines[i];
    const std::string type = l.at("type").get<std::string>();
    if (type == "record") {
      f.measure.records.push_back({l.at("t").get<double>(), l.at("stream").get<std::uint64_t>(),
                                   l.at("seg_norm").get<double>(), to_modes(l.at("coeffs"))});
    } else if (type == "segment") {
      std::vector<ModeVector> nodes;
      for (const auto& n : l.at("nodes")) nodes.push_back(to_modes(n));
      f.measure.segments.push_back(
          {l.at("t").get<double>(), l.at("stream").get<std::uint64_t>(),
           Segment(l.at("h").get<double>(), l.at("dt").get<double>(), std::move(nodes))});
    } else {
      throw Error(path + ": unknown line type '" + type + "'");
    }
  }
  return f;
}

void write_segment_csv(const std::string& path, const Segment& seg) {
  std::vector<std::string> header{"theta"};
  for (int k = 1; k <= seg.n_modes(); ++k) header.push_back("mode_" + std::to_string(k));
  CsvWriter csv(path, "segment", header);
  for (int j = 0; j <= seg.steps(); ++j) {
    std::vector<std::string> row{format_double(-seg.h() + j * seg.dt())};
    const ModeVector& v = seg.node(j);
    for (int k = 0; k < v.size(); ++k) row.push_back(format_double(v(k)));
    csv.row(row);
  }
}

}  // namespace nsfde
