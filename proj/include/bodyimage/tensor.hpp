#pragma once

#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bodyimage/error.hpp"

namespace bodyimage {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& shape);

/// 64-byte aligned allocation. Vectorized kernels peel unaligned heads, so the
/// rounding of a result would otherwise depend on where malloc put a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense row-major tensor. A rank-0 tensor holds one scalar.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_dims();
  }
  Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_dims();
    require(data_.size() == shape_size(shape_), ErrorCode::kShape,
            "tensor: data length does not match shape " + shape_string(shape_));
  }
  Tensor(Shape shape, AlignedVector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    require(data_.size() == shape_size(shape_), ErrorCode::kShape,
            "tensor: data length does not match shape " + shape_string(shape_));
  }

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  AlignedVector<T>& storage() { return data_; }
  const AlignedVector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Value of a one-element tensor.
  T item() const {
    require(data_.size() == 1, ErrorCode::kShape, "tensor: item() on non-scalar " + shape_string(shape_));
    return data_[0];
  }

  Tensor reshaped(Shape shape) const {
    require(shape_size(shape) == data_.size(), ErrorCode::kShape,
            "tensor: cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor&) const = default;

 private:
  void check_dims() const {
    for (int d : shape_) require(d > 0, ErrorCode::kShape, "tensor: non-positive dim in " + shape_string(shape_));
  }

  Shape shape_;
  AlignedVector<T> data_ = AlignedVector<T>(1, T{0});
};

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  AlignedVector<To> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return Tensor<To>(t.shape(), std::move(out));
}

}  // namespace bodyimage
