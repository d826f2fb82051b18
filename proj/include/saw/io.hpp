#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "saw/types.hpp"

namespace saw::io {

// Distinct error types so callers can tell a wrong file from a damaged one.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct VersionError : IoError {
    using IoError::IoError;
};
struct TruncatedError : IoError {
    using IoError::IoError;
};
struct HeaderError : IoError {
    using IoError::IoError;
};

inline constexpr std::uint16_t kFormatVersion = 1;

/// Volume file: magic "SAWV", version u16, dims 3xu32, voxel sizes 3xf64,
/// then nx*ny*nz float32 values in x-fastest order. All little-endian.
/// Masks use the same container with values in [0,1].
void write_volume(const Volume& v, const std::filesystem::path& path);
Volume read_volume(const std::filesystem::path& path);

/// Sinogram file: magic "SAWS", version u16, views/rows/cols u32 each, then
/// float32 values col-fastest, then row, then view. All little-endian.
void write_sinogram(const Sinogram& s, const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

}  // namespace saw::io
