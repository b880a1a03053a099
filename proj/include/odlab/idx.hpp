#pragma once

// IDX file format (big-endian): magic 0x00000803 for unsigned-byte images
// with dims [n, rows, cols], magic 0x00000801 for unsigned-byte labels with
// dims [n]. Pixels are scaled to [0,1] on load.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/tensor.hpp"

namespace odlab {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // 2051
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // 2049

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("idx: truncated file: " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open file: " + path);
  return in;
}

}  // namespace detail

// Images as [M,1,rows,cols] with values byte/255.
inline Tensor load_idx_images(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  const std::uint32_t magic = detail::read_be32(in, path);
  if (magic != kIdxImagesMagic) {
    throw std::runtime_error("idx: bad magic " + std::to_string(magic) +
                             " in " + path + " (expected 2051)");
  }
  const std::uint32_t n = detail::read_be32(in, path);
  const std::uint32_t rows = detail::read_be32(in, path);
  const std::uint32_t cols = detail::read_be32(in, path);
  const std::size_t count = std::size_t(n) * rows * cols;
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               std::streamsize(count))) {
    throw std::runtime_error("idx: truncated file: " + path);
  }
  Tensor images({n, 1, rows, cols});
  for (std::size_t k = 0; k < count; ++k) {
    images[k] = double(raw[k]) / 255.0;
  }
  return images;
}

inline std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  const std::uint32_t magic = detail::read_be32(in, path);
  if (magic != kIdxLabelsMagic) {
    throw std::runtime_error("idx: bad magic " + std::to_string(magic) +
                             " in " + path + " (expected 2049)");
  }
  const std::uint32_t n = detail::read_be32(in, path);
  std::vector<unsigned char> raw(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(raw.data()),
                        std::streamsize(n))) {
    throw std::runtime_error("idx: truncated file: " + path);
  }
  return std::vector<int>(raw.begin(), raw.end());
}

inline void write_idx_images(const std::string& path,
                             const std::vector<unsigned char>& pixels,
                             std::uint32_t n, std::uint32_t rows,
                             std::uint32_t cols) {
  if (pixels.size() != std::size_t(n) * rows * cols) {
    throw std::invalid_argument("idx: pixel count does not match dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("idx: cannot write file: " + path);
  detail::write_be32(out, kIdxImagesMagic);
  detail::write_be32(out, n);
  detail::write_be32(out, rows);
  detail::write_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()),
            std::streamsize(pixels.size()));
}

inline void write_idx_labels(const std::string& path,
                             const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("idx: cannot write file: " + path);
  detail::write_be32(out, kIdxLabelsMagic);
  detail::write_be32(out, std::uint32_t(labels.size()));
  for (int y : labels) {
    if (y < 0 || y > 255) {
      throw std::invalid_argument("idx: label " + std::to_string(y) +
                                  " does not fit in a byte");
    }
    const unsigned char b = static_cast<unsigned char>(y);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
}

}  // namespace odlab
