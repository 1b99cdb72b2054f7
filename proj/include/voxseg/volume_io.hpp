#ifndef VOXSEG_VOLUME_IO_HPP
#define VOXSEG_VOLUME_IO_HPP

#include <filesystem>
#include <string>

#include "voxseg/volume.hpp"

namespace voxseg {

enum class ElementType { uint8, int16, float32 };

/// Read a MetaImage-subset volume (.mhd header + raw file).
/// Integer element types are converted to real scalars without rescaling.
Volume read_volume(const std::filesystem::path& header_path);

/// Write header + raw data. For integral element types every value must be
/// within the type's range after rounding to nearest.
void write_volume(const Volume& v, const std::filesystem::path& header_path,
                  ElementType type);

/// Masks are stored as MET_UCHAR, 0 = outside, 255 = inside.
BinaryMask read_mask(const std::filesystem::path& header_path);
void write_mask(const BinaryMask& m, const std::filesystem::path& header_path);

}  // namespace voxseg

#endif
