#include "nercc/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "nercc/error.hpp"

namespace nercc {

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'T', 'F', '1'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw Error(ErrorCode::ParseError, "NTF1 file is truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return value;
}

}  // namespace

std::uint64_t Tensor::element_count() const noexcept {
  std::uint64_t count = 1;
  for (auto d : shape) count *= d;
  return count;
}

Tensor read_ntf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingTensorFile, "cannot open tensor file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + " is not an NTF1 tensor");
  }
  std::size_t pos = 4;
  Tensor t;
  const auto rank = get_le<std::uint32_t>(bytes, pos);
  t.shape.reserve(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(get_le<std::uint64_t>(bytes, pos));
  const std::uint64_t count = t.element_count();
  if (count > (bytes.size() - pos) / 8 || (bytes.size() - pos) != count * 8) {
    throw Error(ErrorCode::ParseError, path.string() + ": payload size does not match shape");
  }
  t.data.resize(count);
  for (auto& v : t.data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  return t;
}

void write_ntf(const std::filesystem::path& path, const Tensor& tensor) {
  if (tensor.element_count() != tensor.data.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor data size does not match its shape");
  }
  std::string out(kMagic.begin(), kMagic.end());
  put_le(out, static_cast<std::uint32_t>(tensor.shape.size()));
  for (auto d : tensor.shape) put_le(out, d);
  for (double v : tensor.data) put_le(out, std::bit_cast<std::uint64_t>(v));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Matrix tensor_to_matrix(const Tensor& t) {
  if (t.shape.empty() || t.shape.size() > 2) {
    throw Error(ErrorCode::ShapeMismatch, "expected a rank-1 or rank-2 tensor");
  }
  const auto rows = static_cast<Eigen::Index>(t.shape[0]);
  const auto cols = t.shape.size() == 2 ? static_cast<Eigen::Index>(t.shape[1]) : 1;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Tensor matrix_to_tensor(const Matrix& m) {
  Tensor t;
  t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  }
  return t;
}

Tensor vector_to_tensor(const Vector& v) {
  Tensor t;
  t.shape = {static_cast<std::uint64_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

}  // namespace nercc
