#pragma once

// Text CSV persistence for datasets and sample batches.
//
// Layout: optional '#' comment lines, an optional header `d=2,N=3[,seed=S][,source=TAG]`,
// an optional column line `x0,...,x{d-1}`, then one row of d numbers per point.
// Numbers are written in shortest round-trip form, so save followed by load is exact.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scorelab/core.hpp"
#include "scorelab/samplers.hpp"

namespace scorelab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);

/// Throws IoError naming the path, row and column on malformed input,
/// non-finite values, ragged rows or a row count that disagrees with the header.
Dataset load_dataset(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  const std::vector<std::string>& comments = {});
void save_points(const PointSet& points, const std::filesystem::path& path,
                 const std::vector<std::string>& comments = {});
inline void save_batch(const SampleBatch& batch, const std::filesystem::path& path,
                       const std::vector<std::string>& comments = {}) {
  save_points(batch.points, path, comments);
}

/// Writes content to path in one go; throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace scorelab
