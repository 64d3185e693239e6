#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rippler {

/// A (time-point, individual) coordinate, both 0-based.
struct Cell {
  int t = 0;
  int j = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Dense T x N grid stored time-major, so one time-point is contiguous.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int num_timepoints, int num_individuals, const T& fill = T{})
      : rows_(num_timepoints),
        cols_(num_individuals),
        data_(static_cast<std::size_t>(num_timepoints) * num_individuals, fill) {}

  int num_timepoints() const { return rows_; }
  int num_individuals() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int t, int j) { return data_[index(t, j)]; }
  const T& operator()(int t, int j) const { return data_[index(t, j)]; }
  T& operator[](Cell c) { return data_[index(c.t, c.j)]; }
  const T& operator[](Cell c) const { return data_[index(c.t, c.j)]; }

  std::span<T> row(int t) { return {data_.data() + index(t, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int t) const {
    return {data_.data() + index(t, 0), static_cast<std::size_t>(cols_)};
  }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int t, int j) const { return static_cast<std::size_t>(t) * cols_ + j; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace rippler
