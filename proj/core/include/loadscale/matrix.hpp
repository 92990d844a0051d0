#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace loadscale {

/// Dense row-major matrix of doubles; rows are customers, columns are hours.
class RowMatrix {
public:
	RowMatrix() = default;
	RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

	[[nodiscard]] std::size_t rows() const noexcept { return rows_; }
	[[nodiscard]] std::size_t cols() const noexcept { return cols_; }
	[[nodiscard]] double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
	[[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
	[[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
	[[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
	[[nodiscard]] const std::vector<double> &data() const noexcept { return data_; }

	friend bool operator==(const RowMatrix &, const RowMatrix &) = default;

private:
	std::size_t rows_ = 0;
	std::size_t cols_ = 0;
	std::vector<double> data_;
};

} // namespace loadscale
