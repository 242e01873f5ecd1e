#pragma once

#include <filesystem>
#include <string>

#include "elevnav/trace.hpp"

namespace elevnav {

// Top-down SVG of one episode: elevator walls with the door gap, humans
// at their first and last recorded positions, the robot path and final
// disc, and a red ring wherever the robot beeped. Output depends only on
// the trace.
std::string render_svg(const EpisodeTrace& trace);
void write_svg(const std::filesystem::path& path, const EpisodeTrace& trace);

}  // namespace elevnav
