#pragma once

#include <iosfwd>
#include <string>

#include "crowdnav/env.hpp"

namespace crowdnav {

/// Line-oriented trajectory file.
///
///   crowdnav-trajectory 1
///   outcome <ReachGoal|Collision|Timeout>
///   nav_time <s>
///   discomfort_count <n>
///   robot radius <r> v_pref <v> goal <x> <y>
///   humans <n>
///   human <i> radius <r> v_pref <v> goal <x> <y>      (n lines)
///   columns t robot.x robot.y robot.vx robot.vy h0.x h0.y h0.vx h0.vy ... action action.vx action.vy reward d_min info
///   <one row per decision step: the world before the action, then what was done>
///   <final row: the terminal world, action -1, zeros, info End>
///   checksum <fnv1a of the rows>
///
/// Every number is written with 17 significant digits so the record round-trips exactly.
void write_trajectory(std::ostream& out, const EpisodeRecord& record);
EpisodeRecord read_trajectory(std::istream& in, const std::string& source = "<stream>");

void save_trajectory(const std::string& path, const EpisodeRecord& record);
EpisodeRecord load_trajectory(const std::string& path);

/// Sum of robot displacements over the episode, terminal world included.
double path_length(const EpisodeRecord& record);

}  // namespace crowdnav
