#pragma once

#include <string>
#include <vector>

#include "crowdnav/env.hpp"
#include "crowdnav/trainer.hpp"

namespace crowdnav {

struct TrajectoryStyle {
  double pixels_per_meter = 60.0;
  /// Agents are drawn, with their time stamp, every this many decision steps.
  int label_every = 4;
};

/// Top-down plot of one episode: robot and human paths, agent discs with
/// time labels, goals as crosses.
std::string render_trajectory_svg(const EpisodeRecord& record, const TrajectoryStyle& style = {});

struct CurveStyle {
  /// Training rows are smoothed with a trailing window of this many episodes.
  int window = 100;
  double width = 720.0;
  double panel_height = 240.0;
};

/// Success / collision rate panel and discounted-reward panel. Validation rows
/// are averaged per sweep and drawn as markers; training rows as smoothed lines.
std::string render_curves_svg(const std::vector<CurveRow>& rows, const CurveStyle& style = {});

}  // namespace crowdnav
