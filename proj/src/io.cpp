#include "multifit/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "multifit/error.hpp"

namespace multifit {
namespace {

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::vector<Correspondence> parse_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    std::istringstream fields(line);
    Correspondence c;
    if (!(fields >> c.p1.x >> c.p1.y >> c.p2.x >> c.p2.y >> c.score)) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": expected x1 y1 x2 y2 score");
    }
    int label = 0;
    if (fields >> label) {
      if (label < 0) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) + ": negative ground-truth label");
      }
      c.gt_label = label;
    } else if (!fields.eof()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad label");
    }
    std::string extra;
    if (fields.clear(), fields >> extra) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": trailing field '" + extra + "'");
    }
    if (!std::isfinite(c.p1.x) || !std::isfinite(c.p1.y) || !std::isfinite(c.p2.x) ||
        !std::isfinite(c.p2.y) || !std::isfinite(c.score) || c.score < 0.0) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": non-finite value or negative score");
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Correspondence> read_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  try {
    return parse_correspondences(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_correspondences(std::ostream& out, std::span<const Correspondence> corrs) {
  out << "# x1 y1 x2 y2 score [gt_label]\n";
  for (const auto& c : corrs) {
    out << format_double(c.p1.x) << ' ' << format_double(c.p1.y) << ' '
        << format_double(c.p2.x) << ' ' << format_double(c.p2.y) << ' '
        << format_double(c.score);
    if (c.gt_label) out << ' ' << *c.gt_label;
    out << '\n';
  }
}

void write_correspondences(const std::filesystem::path& path,
                           std::span<const Correspondence> corrs) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  write_correspondences(out, corrs);
}

Labeling read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  Labeling labels;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    std::istringstream field(line);
    int v = 0;
    std::string extra;
    if (!(field >> v) || (field >> extra) || v < 0) {
      throw Error(ErrorCode::kParse, path.string() + ": bad label line '" + line + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  for (const int v : labels) out << v << '\n';
}

}  // namespace multifit
