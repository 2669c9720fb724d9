#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cellsel/error.hpp"

namespace cellsel {

// Dense row-major matrix. Rows index users, columns index cells throughout
// the library.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Binary association matrix: x(j, i) == 1 iff user j is served by cell i.
using Assignment = Matrix<unsigned char>;

// Converts a per-user cell index vector into a binary assignment matrix.
inline Assignment to_assignment(std::span<const int> cell_of_user, std::size_t n_cells) {
  Assignment x(cell_of_user.size(), n_cells, 0);
  for (std::size_t j = 0; j < cell_of_user.size(); ++j) {
    const int c = cell_of_user[j];
    if (c < 0 || static_cast<std::size_t>(c) >= n_cells) {
      throw DomainError("to_assignment: cell index out of range");
    }
    x(j, static_cast<std::size_t>(c)) = 1;
  }
  return x;
}

// Inverse of to_assignment; rows without exactly one set entry map to -1.
inline std::vector<int> to_cell_index(const Assignment& x) {
  std::vector<int> out(x.rows(), -1);
  for (std::size_t j = 0; j < x.rows(); ++j) {
    int count = 0;
    for (std::size_t i = 0; i < x.cols(); ++i) {
      if (x(j, i)) {
        out[j] = static_cast<int>(i);
        ++count;
      }
    }
    if (count != 1) out[j] = -1;
  }
  return out;
}

}  // namespace cellsel
