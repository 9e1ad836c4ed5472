#include "multifit/image.hpp"

#include <png.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "multifit/error.hpp"

namespace multifit {
namespace {

std::string describe(const std::filesystem::path& path) {
  return "'" + path.string() + "'";
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + describe(path));
  return in;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) break;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  return token;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string token = header_token(in);
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value <= 0) {
    throw Error(ErrorCode::kParse, "bad netpbm header in " + describe(path));
  }
  return value;
}

LabelGrid read_pgm16(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  if (header_token(in) != "P5") {
    throw Error(ErrorCode::kParse, "not a binary PGM: " + describe(path));
  }
  LabelGrid grid;
  grid.width = header_int(in, path);
  grid.height = header_int(in, path);
  const int maxval = header_int(in, path);
  const std::size_t count = std::size_t(grid.width) * grid.height;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(count * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::kParse, "truncated PGM " + describe(path));
  }
  grid.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid.labels[i] = bytes_per == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
  }
  return grid;
}

LabelGrid read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + describe(path));
  LabelGrid grid;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<int> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      int value = 0;
      const auto first = field.find_first_not_of(" \t\r");
      const auto last = field.find_last_not_of(" \t\r");
      if (first == std::string::npos) {
        throw Error(ErrorCode::kParse, "empty label field in " + describe(path));
      }
      const auto [ptr, ec] = std::from_chars(field.data() + first,
                                             field.data() + last + 1, value);
      if (ec != std::errc() || ptr != field.data() + last + 1 || value < 0) {
        throw Error(ErrorCode::kParse, "bad label '" + field + "' in " + describe(path));
      }
      row.push_back(value);
    }
    if (grid.width == 0) {
      grid.width = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != grid.width) {
      throw Error(ErrorCode::kParse, "ragged label CSV " + describe(path));
    }
    grid.labels.insert(grid.labels.end(), row.begin(), row.end());
    ++grid.height;
  }
  if (grid.width == 0 || grid.height == 0) {
    throw Error(ErrorCode::kParse, "empty label CSV " + describe(path));
  }
  return grid;
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  if (header_token(in) != "P6") {
    throw Error(ErrorCode::kParse, "not a binary PPM: " + describe(path));
  }
  const int width = header_int(in, path);
  const int height = header_int(in, path);
  if (header_int(in, path) != 255) {
    throw Error(ErrorCode::kParse, "only 8-bit PPM is supported: " + describe(path));
  }
  RgbImage image(width, height);
  in.read(reinterpret_cast<char*>(image.data.data()),
          static_cast<std::streamsize>(image.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.data.size())) {
    throw Error(ErrorCode::kParse, "truncated PPM " + describe(path));
  }
  return image;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + describe(path));
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error(ErrorCode::kParse, "cannot read PNG " + describe(path) + ": " +
                                       png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.data.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kParse, "cannot decode PNG " + describe(path) + ": " + message);
  }
  return image;
}

RgbImage read_image(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  if (in.gcount() == 8 &&
      png_sig_cmp(reinterpret_cast<png_const_bytep>(magic.data()), 0, 8) == 0) {
    return read_png(path);
  }
  throw Error(ErrorCode::kParse, "unsupported image format " + describe(path));
}

LabelGrid read_label_grid(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  char magic[2] = {};
  in.read(magic, 2);
  if (in.gcount() == 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm16(path);
  return read_label_csv(path);
}

void write_label_csv(const std::filesystem::path& path, const LabelGrid& grid) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + describe(path));
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (x) out << ',';
      out << grid.labels[std::size_t(y) * grid.width + x];
    }
    out << '\n';
  }
}

}  // namespace multifit
