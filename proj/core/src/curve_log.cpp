#include "crowdnav/curve_log.hpp"

#include <istream>
#include <ostream>

#include "crowdnav/errors.hpp"
#include "crowdnav/text_format.hpp"

namespace crowdnav {

std::string curve_log_header() { return "episode,phase,outcome,nav_time,discounted_reward,epsilon,mean_loss"; }

std::string format_curve_row(const CurveRow& row) {
  return std::to_string(row.episode) + ',' + std::string(to_string(row.phase)) + ',' + std::string(to_string(row.outcome)) +
         ',' + format_double(row.nav_time) + ',' + format_double(row.discounted_reward) + ',' +
         format_double(row.epsilon) + ',' + format_double(row.mean_loss);
}

void write_curve_log(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << curve_log_header() << '\n';
  for (const auto& row : rows) out << format_curve_row(row) << '\n';
  if (!out) throw IoError("failed writing curve log");
}

std::vector<CurveRow> read_curve_log(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  const auto header = reader.next();
  if (!header || *header != curve_log_header()) reader.fail("not a curve log (expected header '" + curve_log_header() + "')");
  std::vector<CurveRow> rows;
  while (auto line = reader.next()) {
    if (line->empty()) continue;
    const auto fields = split_delimited(*line, ',');
    if (fields.size() != 7) reader.fail("expected 7 fields, found " + std::to_string(fields.size()));
    CurveRow row;
    row.episode = static_cast<int>(reader.parse_i64(fields[0]));
    const auto phase = parse_curve_phase(fields[1]);
    if (!phase) reader.fail("unknown phase '" + fields[1] + "'");
    row.phase = *phase;
    const auto outcome = parse_outcome(fields[2]);
    if (!outcome) reader.fail("unknown outcome '" + fields[2] + "'");
    row.outcome = *outcome;
    row.nav_time = reader.parse_double(fields[3]);
    row.discounted_reward = reader.parse_double(fields[4]);
    row.epsilon = reader.parse_double(fields[5]);
    row.mean_loss = reader.parse_double(fields[6]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<CurveRow> load_curve_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_curve_log(in, path);
}

CurveLogWriter::CurveLogWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  out_ << curve_log_header() << '\n';
}

void CurveLogWriter::write(const CurveRow& row) {
  out_ << format_curve_row(row) << '\n' << std::flush;
  if (!out_) throw IoError("failed writing " + path_);
}

}  // namespace crowdnav
