#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tucker/data.hpp"
#include "tucker/model.hpp"

namespace tucker {

inline constexpr int kCheckpointFormatVersion = 1;

/// Raw array with its shape, as stored in a checkpoint .bin file.
struct StoredArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

/// Array file layout: "TKER", u32 rank, rank x u32 dims, zero padding up to a
/// multiple of 8 bytes (at least 16), then the values as little-endian
/// IEEE-754 doubles in row-major order. All integers are little-endian.
void write_array(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                 std::span<const double> values);
StoredArray read_array(const std::filesystem::path& path);

/// Size in bytes of the header that precedes the values of a rank-`rank` array.
std::size_t array_header_size(std::size_t rank);

struct Checkpoint {
  TuckerModel model;
  std::optional<Vocabulary> vocab;
};

/// Writes meta.txt, E.bin, R.bin, W.bin, bn_input.bin and bn_hidden.bin (rows
/// scale, shift, running_mean, running_var), plus entities.dict and
/// relations.dict when a vocabulary is given.
void save_checkpoint(const std::filesystem::path& dir, const TuckerModel& m,
                     const Vocabulary* vocab = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace tucker
