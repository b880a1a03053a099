#pragma once

// model.bin: a length-prefixed little-endian parameter dump.
//
//   u64  tensor count
//   per tensor: u32 rank, u64 dims[rank], f64 values[prod(dims)]
//
// Tensors appear in layer order, weight before bias.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/network.hpp"
#include "odlab/tensor.hpp"

namespace odlab {
namespace detail {

template <class T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits;
  if constexpr (sizeof(T) == 8) {
    std::memcpy(&bits, &v, 8);
  } else {
    bits = std::uint64_t(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const std::string& path) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw std::runtime_error("model: truncated file: " + path);
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= std::uint64_t(buf[i]) << (8 * i);
  }
  if constexpr (sizeof(T) == 8 && std::is_floating_point_v<T>) {
    T v;
    std::memcpy(&v, &bits, 8);
    return v;
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

inline void save_params(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("model: cannot write " + path);
  std::uint64_t count = 0;
  net.for_each_param([&](const Tensor&) { ++count; });
  detail::write_le<std::uint64_t>(out, count);
  net.for_each_param([&](const Tensor& t) {
    detail::write_le<std::uint32_t>(out, std::uint32_t(t.rank()));
    for (std::size_t d : t.shape()) {
      detail::write_le<std::uint64_t>(out, std::uint64_t(d));
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      detail::write_le<double>(out, t[k]);
    }
  });
}

inline std::vector<Tensor> load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  const std::uint64_t count = detail::read_le<std::uint64_t>(in, path);
  std::vector<Tensor> tensors;
  tensors.reserve(count);
  for (std::uint64_t t = 0; t < count; ++t) {
    const std::uint32_t rank = detail::read_le<std::uint32_t>(in, path);
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = std::size_t(detail::read_le<std::uint64_t>(in, path));
    }
    Tensor tensor(shape);
    for (std::size_t k = 0; k < tensor.size(); ++k) {
      tensor[k] = detail::read_le<double>(in, path);
    }
    tensors.push_back(std::move(tensor));
  }
  return tensors;
}

// Loads a dump produced by save_params back into a structurally identical
// network.
inline void load_params_into(Network& net, const std::string& path) {
  std::vector<Tensor> tensors = load_params(path);
  std::size_t i = 0;
  net.for_each_param([&](Tensor& t) {
    if (i >= tensors.size() || !tensors[i].same_shape(t)) {
      throw std::runtime_error("model: parameter " + std::to_string(i) +
                               " in " + path + " does not match the network");
    }
    t = tensors[i++];
  });
  if (i != tensors.size()) {
    throw std::runtime_error("model: " + path + " has extra parameters");
  }
}

}  // namespace odlab
