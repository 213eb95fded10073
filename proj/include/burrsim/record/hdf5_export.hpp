#pragma once

#include <filesystem>

namespace burrsim {

// Writes a recording as an HDF5 file with groups voxels_removed, force_feedback, burr_change,
// kinematics, depth_frames and metadata (the manifest meta as a JSON string attribute).
// Unsupported when the library was built without HDF5.
void export_hdf5(const std::filesystem::path& recording_dir, const std::filesystem::path& out_file);

bool hdf5_available() noexcept;

} // namespace burrsim
