#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "multifit/evaluation.hpp"
#include "multifit/geometry.hpp"

namespace multifit {

// Correspondence files: one match per line, `x1 y1 x2 y2 score [gt_label]`,
// whitespace separated, '#' starts a comment line.
std::vector<Correspondence> parse_correspondences(std::istream& in);
std::vector<Correspondence> read_correspondences(const std::filesystem::path& path);
void write_correspondences(std::ostream& out, std::span<const Correspondence> corrs);
void write_correspondences(const std::filesystem::path& path,
                           std::span<const Correspondence> corrs);

// Label files: one integer per line, '#' comments allowed.
Labeling read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const int> labels);

/// Fixed 17-significant-digit form used by every text output.
std::string format_double(double v);

}  // namespace multifit
