#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace stepgan {

// Dense row-major 2-D array of doubles. The only numeric carrier used by the
// networks: activations, parameters, gradients and data all live in one.
class Matrix2 {
public:
    Matrix2() = default;
    Matrix2(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix2(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix2 from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix2 identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    void fill(double v);
    bool all_finite() const noexcept;
    // Throws NumericError naming `what` when any entry is NaN or infinite.
    void require_finite(std::string_view what) const;

    Matrix2 select_rows(std::span<const std::size_t> indices) const;
    void append_rows(const Matrix2& other);

    friend bool operator==(const Matrix2&, const Matrix2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out = a * b
void matmul(const Matrix2& a, const Matrix2& b, Matrix2& out);
// out (+)= a^T * b
void matmul_at_b(const Matrix2& a, const Matrix2& b, Matrix2& out, bool accumulate);
// out = a * b^T
void matmul_a_bt(const Matrix2& a, const Matrix2& b, Matrix2& out);

void require_same_shape(const Matrix2& a, const Matrix2& b, std::string_view what);

}  // namespace stepgan
