#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latentfill/image.hpp"

namespace latentfill {

enum class Family { toy_faces, digits_grid, blobs };

Family family_from_string(const std::string& s);
const char* family_name(Family f);

/// Fully determines a synthetic dataset; generation is a pure function of
/// the spec.
struct DatasetSpec {
  Family family = Family::toy_faces;
  int count = 0;
  int image_size = 32;
  int channels = 1;
  std::uint64_t seed = 0;
};

/// Procedural images with learnable structure:
///   toy_faces   - oval face outline, two eyes whose intensities co-vary,
///                 and a mouth, all with jittered geometry
///   digits_grid - a seven-segment digit glyph at a jittered position
///   blobs       - one to three soft ellipses
std::vector<Image> generate_dataset(const DatasetSpec& spec);

/// Deterministic disjoint shuffle split; test gets floor(n * test_fraction).
std::pair<std::vector<Image>, std::vector<Image>> split(const std::vector<Image>& dataset,
                                                        double test_fraction,
                                                        std::uint64_t seed);

/// Writes PNGs plus manifest.json (spec, file list, content hashes) into dir.
/// Returns the manifest path.
std::string write_dataset(const std::string& dir, const DatasetSpec& spec,
                          const std::vector<Image>& images);

/// Loads a dataset directory produced by write_dataset.
struct LoadedDataset {
  DatasetSpec spec;
  std::vector<Image> images;
};
LoadedDataset load_dataset(const std::string& dir);

}  // namespace latentfill
