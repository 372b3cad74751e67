#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gridcrf/types.hpp"

namespace gridcrf {

namespace detail {

// Next whitespace-delimited token, skipping '#' comment lines.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw std::runtime_error("pnm: truncated header");
  return tok;
}

inline int pnm_int(std::istream& in) {
  const std::string tok = pnm_token(in);
  try {
    return std::stoi(tok);
  } catch (...) {
    throw std::runtime_error("pnm: bad integer '" + tok + "'");
  }
}

struct PnmRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> bytes;
};

inline PnmRaster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  PnmRaster r;
  if (magic == "P5")
    r.channels = 1;
  else if (magic == "P6")
    r.channels = 3;
  else
    throw unsupported_input("pnm: unsupported magic '" + magic + "' in " + path.string());
  r.width = pnm_int(in);
  r.height = pnm_int(in);
  const int maxval = pnm_int(in);
  if (maxval != 255)
    throw unsupported_input("pnm: only maxval 255 is supported");
  if (r.width <= 0 || r.height <= 0)
    throw std::runtime_error("pnm: non-positive dimensions");
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  r.bytes.resize(n);
  in.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw std::runtime_error("pnm: truncated pixel data in " + path.string());
  return r;
}

inline void write_pnm(const std::filesystem::path& path, int width, int height,
                      int channels, const std::uint8_t* bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes),
            static_cast<std::streamsize>(static_cast<std::size_t>(width) * height * channels));
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) with maxval 255; channel values map to v/255.
inline GridImage read_image(const std::filesystem::path& path) {
  const auto r = detail::read_pnm(path);
  std::vector<double> data(r.bytes.size());
  for (std::size_t i = 0; i < r.bytes.size(); ++i) data[i] = r.bytes[i] / 255.0;
  return GridImage(r.width, r.height, r.channels, std::move(data));
}

inline void write_image(const std::filesystem::path& path, const GridImage& img) {
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(img.data[i] * 255.0));
  detail::write_pnm(path, img.width, img.height, img.channels, bytes.data());
}

/// Label raster as PGM: pixel value = label index.
inline Labeling read_label_raster(const std::filesystem::path& path, int num_labels) {
  const auto r = detail::read_pnm(path);
  if (r.channels != 1) throw std::runtime_error("label raster must be PGM");
  std::vector<int> labels(r.bytes.begin(), r.bytes.end());
  return Labeling(r.width, r.height, num_labels, std::move(labels));
}

inline void write_label_raster(const std::filesystem::path& path, const Labeling& l) {
  if (l.num_labels > 255)
    throw std::invalid_argument("label raster: more than 255 labels");
  std::vector<std::uint8_t> bytes(l.labels.begin(), l.labels.end());
  detail::write_pnm(path, l.width, l.height, 1, bytes.data());
}

inline constexpr std::uint8_t kScribbleUnlabeledByte = 255;

/// Scribble raster as PGM: value k < 255 means label k, 255 means unlabeled.
inline ScribbleMask read_scribble_raster(const std::filesystem::path& path, int num_labels) {
  const auto r = detail::read_pnm(path);
  if (r.channels != 1) throw std::runtime_error("scribble raster must be PGM");
  std::vector<int> entries(r.bytes.size());
  for (std::size_t i = 0; i < r.bytes.size(); ++i)
    entries[i] = (r.bytes[i] == kScribbleUnlabeledByte) ? kUnlabeled : r.bytes[i];
  return ScribbleMask(r.width, r.height, num_labels, std::move(entries));
}

inline void write_scribble_raster(const std::filesystem::path& path, const ScribbleMask& m) {
  if (m.num_labels >= 255)
    throw std::invalid_argument("scribble raster: label space collides with sentinel 255");
  std::vector<std::uint8_t> bytes(m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    bytes[i] = (m.entries[i] == kUnlabeled) ? kScribbleUnlabeledByte
                                            : static_cast<std::uint8_t>(m.entries[i]);
  detail::write_pnm(path, m.width, m.height, 1, bytes.data());
}

/// Chain sidecar: one line per stroke, `label x0 y0 x1 y1 ...`.
inline std::vector<ScribbleChain> read_chains(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<ScribbleChain> chains;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScribbleChain ch;
    if (!(ls >> ch.label)) throw std::runtime_error("chains: bad line '" + line + "'");
    int x, y;
    while (ls >> x >> y) ch.pixels.emplace_back(x, y);
    if (ch.pixels.empty()) throw std::runtime_error("chains: stroke without pixels");
    chains.push_back(std::move(ch));
  }
  return chains;
}

inline void write_chains(const std::filesystem::path& path,
                         const std::vector<ScribbleChain>& chains) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& ch : chains) {
    out << ch.label;
    for (auto [x, y] : ch.pixels) out << " " << x << " " << y;
    out << "\n";
  }
}

/// Scribble mask plus optional chain sidecar.
inline ScribbleMask read_scribbles(const std::filesystem::path& raster_path,
                                   const std::filesystem::path& chains_path,
                                   int num_labels) {
  ScribbleMask m = read_scribble_raster(raster_path, num_labels);
  if (!chains_path.empty() && std::filesystem::exists(chains_path)) {
    m.chains = read_chains(chains_path);
    m.validate();
  }
  return m;
}

}  // namespace gridcrf
