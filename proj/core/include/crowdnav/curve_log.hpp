#pragma once

#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "crowdnav/trainer.hpp"

namespace crowdnav {

/// Comma-separated learning-curve log with one header line:
/// episode,phase,outcome,nav_time,discounted_reward,epsilon,mean_loss
/// `mean_loss` is "nan" for rows without a gradient update.
std::string curve_log_header();
std::string format_curve_row(const CurveRow& row);

void write_curve_log(std::ostream& out, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_log(std::istream& in, const std::string& source = "<stream>");
std::vector<CurveRow> load_curve_log(const std::string& path);

/// Appends rows to a file as they arrive, flushing each one so a killed run keeps its log.
class CurveLogWriter {
 public:
  explicit CurveLogWriter(const std::string& path);
  void write(const CurveRow& row);

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace crowdnav
