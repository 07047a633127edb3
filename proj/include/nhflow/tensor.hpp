#ifndef NHFLOW_TENSOR_HPP
#define NHFLOW_TENSOR_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nhflow/expr.hpp"

namespace nhflow {

/// Dense multi-index array, row-major.
template <typename T>
class NDArray {
public:
  NDArray() = default;

  explicit NDArray(std::vector<int> dims, T init = T{})
      : dims_(std::move(dims)) {
    std::size_t n = 1;
    for (int d : dims_) {
      if (d <= 0) throw std::invalid_argument("NDArray: nonpositive dim");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, init);
  }

  const std::vector<int>& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... I>
  T& operator()(I... idx) {
    return data_[flatten(idx...)];
  }
  template <typename... I>
  const T& operator()(I... idx) const {
    return data_[flatten(idx...)];
  }

  template <typename... I>
  std::size_t flatten(I... idx) const {
    std::array<int, sizeof...(I)> ii{static_cast<int>(idx)...};
    if (ii.size() != dims_.size())
      throw std::invalid_argument("NDArray: index rank mismatch");
    std::size_t f = 0;
    for (std::size_t k = 0; k < ii.size(); ++k) {
      f = f * static_cast<std::size_t>(dims_[k]) +
          static_cast<std::size_t>(ii[k]);
    }
    return f;
  }

  std::size_t flatten_v(const std::vector<int>& ii) const {
    if (ii.size() != dims_.size())
      throw std::invalid_argument("NDArray: index rank mismatch");
    std::size_t f = 0;
    for (std::size_t k = 0; k < ii.size(); ++k)
      f = f * static_cast<std::size_t>(dims_[k]) +
          static_cast<std::size_t>(ii[k]);
    return f;
  }
  T& at(const std::vector<int>& ii) { return data_[flatten_v(ii)]; }
  const T& at(const std::vector<int>& ii) const { return data_[flatten_v(ii)]; }

private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

using ExprMatrix = NDArray<ExprPtr>;
using ExprTensor = NDArray<ExprPtr>;
using Matrix = NDArray<double>;

enum class Variance : std::uint8_t { Up, Down };
enum class FrameTag : std::uint8_t { Adapted, Coordinate };

/// Point-evaluated tensor with per-index variance and a frame tag.
struct TensorValue {
  Point point;
  NDArray<double> data;
  std::vector<Variance> variance;
  FrameTag frame = FrameTag::Adapted;
};

inline ExprMatrix zero_exprs(int r, int c) {
  ExprMatrix z(std::vector<int>{r, c});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = constant(0.0);
  return z;
}

inline ExprTensor zero_exprs(std::vector<int> dims) {
  ExprTensor z(std::move(dims));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = constant(0.0);
  return z;
}

inline ExprMatrix identity_exprs(int d) {
  ExprMatrix z = zero_exprs(d, d);
  for (int i = 0; i < d; ++i) z(i, i) = constant(1.0);
  return z;
}

/// Determinant by cofactor expansion; meant for the small symbolic blocks.
ExprPtr sym_det(const ExprMatrix& a);

/// Inverse via adjugate over determinant.
ExprMatrix sym_inverse(const ExprMatrix& a);

/// Evaluate every entry at one point (shared memo).
NDArray<double> eval_tensor(const ExprTensor& t, std::span<const double> u);

/// Numeric dense inverse (Gauss-Jordan with partial pivoting).
Matrix num_inverse(const Matrix& a);
double num_det(const Matrix& a);

/// Visit every index tuple of a shape in row-major order.
template <typename F>
void for_each_index(const std::vector<int>& dims, F&& f) {
  std::vector<int> idx(dims.size(), 0);
  while (true) {
    f(idx);
    int k = static_cast<int>(dims.size()) - 1;
    while (k >= 0) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
}

}  // namespace nhflow

#endif
