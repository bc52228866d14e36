#ifndef EMOGLASS_SESSION_IO_HPP
#define EMOGLASS_SESSION_IO_HPP

#include "emoglass/core.hpp"

#include <filesystem>

namespace emoglass {

// On-disk session layout:
//   manifest.json  {subject_id, physio_rate_hz?, trials: [{trial_id, label, eda_csv,
//                   ppg_csv, frames_dir, frame_rate_hz, physio_rate_hz?}]}
//   *.csv          "time_s,value" header, one sample per row, increasing time
//   frames_dir/    binary 8-bit PGM (P5); lexicographic filename order is temporal order
// Relative paths in the manifest resolve against the manifest's directory.

SessionDataset load_session(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus per-trial CSV and PGM files under `dir`.
/// Returns the manifest path.
std::filesystem::path save_session(const SessionDataset& dataset, const std::filesystem::path& dir);

SampleSeries read_signal_csv(const std::filesystem::path& path, Channel channel);
void write_signal_csv(const SampleSeries& series, const std::filesystem::path& path);

Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

/// Frames of a directory in lexicographic filename order (*.pgm only).
FrameSequence read_frame_dir(const std::filesystem::path& dir, Real rate_hz);

/// Shortest decimal text that parses back to the identical double.
std::string format_real(Real value);

}  // namespace emoglass

#endif  // EMOGLASS_SESSION_IO_HPP
