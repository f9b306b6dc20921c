#pragma once

#include "sevo/episode.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sevo::dataset {

// Episode directory layout:
//   meta.json                  sorted keys, UTF-8
//   traj.csv                   t,q0..qD-1,a0,a1,a2,gate_phase
//   frames/camNN_tTTTT.ppm     raw frames
//   masks/camNN_tTTTT.pgm      target masks
//   sevo/camNN_tTTTT.ppm       policy-visible frames
//
// Returns the path of meta.json.
std::filesystem::path write_episode(const EpisodeRecord& record, const std::filesystem::path& directory);

// Strict reader: missing files, truncated images, dimension or count mismatches
// raise FormatError naming the file.
EpisodeRecord read_episode(const std::filesystem::path& directory);

// Dataset = directory of episode directories named ep_NNNN.
void write_dataset(const std::vector<EpisodeRecord>& episodes, const std::filesystem::path& directory);
std::vector<EpisodeRecord> read_dataset(const std::filesystem::path& directory);

std::string episode_dir_name(std::size_t index);

} // namespace sevo::dataset
