#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nercc/types.hpp"

namespace nercc {

/// Row-major dense tensor as stored in NTF1 files:
///   "NTF1" | rank: u32 LE | dims: rank x u64 LE | values: f64 LE, row-major.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  std::uint64_t element_count() const noexcept;
};

Tensor read_ntf(const std::filesystem::path& path);
void write_ntf(const std::filesystem::path& path, const Tensor& tensor);

/// Rank-2 tensor to matrix; a rank-1 tensor becomes a single column.
Matrix tensor_to_matrix(const Tensor& t);
Tensor matrix_to_tensor(const Matrix& m);
Tensor vector_to_tensor(const Vector& v);

}  // namespace nercc
