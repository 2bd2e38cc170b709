#include "stepgan/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stepgan/error.hpp"

namespace stepgan {

Matrix2::Matrix2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix2::Matrix2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix2: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
    }
}

Matrix2 Matrix2::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t cols = rows.front().size();
    Matrix2 m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ShapeError("Matrix2::from_rows: ragged rows");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Matrix2 Matrix2::identity(std::size_t n) {
    Matrix2 m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix2::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix2::require_finite(std::string_view what) const {
    if (!all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

Matrix2 Matrix2::select_rows(std::span<const std::size_t> indices) const {
    Matrix2 out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw ShapeError("Matrix2::select_rows: index out of range");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

void Matrix2::append_rows(const Matrix2& other) {
    if (other.rows_ == 0) return;
    if (rows_ == 0 && cols_ == 0) {
        *this = other;
        return;
    }
    if (other.cols_ != cols_) throw ShapeError("Matrix2::append_rows: column mismatch");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
}

void require_same_shape(const Matrix2& a, const Matrix2& b, std::string_view what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()) + ")");
    }
}

void matmul(const Matrix2& a, const Matrix2& b, Matrix2& out) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimension mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (out.rows() != n || out.cols() != m) out = Matrix2(n, m);
    else out.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* o = out.row(i).data();
        const double* ai = a.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
            const double s = ai[p];
            const double* bp = b.row(p).data();
            for (std::size_t j = 0; j < m; ++j) o[j] += s * bp[j];
        }
    }
}

void matmul_at_b(const Matrix2& a, const Matrix2& b, Matrix2& out, bool accumulate) {
    if (a.rows() != b.rows()) throw ShapeError("matmul_at_b: row mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (out.rows() != k || out.cols() != m) {
        if (accumulate) throw ShapeError("matmul_at_b: accumulator shape mismatch");
        out = Matrix2(k, m);
    } else if (!accumulate) {
        out.fill(0.0);
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double* ar = a.row(r).data();
        const double* br = b.row(r).data();
        for (std::size_t p = 0; p < k; ++p) {
            const double s = ar[p];
            double* o = out.row(p).data();
            for (std::size_t j = 0; j < m; ++j) o[j] += s * br[j];
        }
    }
}

void matmul_a_bt(const Matrix2& a, const Matrix2& b, Matrix2& out) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_a_bt: inner dimension mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    if (out.rows() != n || out.cols() != m) out = Matrix2(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.row(i).data();
        double* o = out.row(i).data();
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.row(j).data();
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            o[j] = acc;
        }
    }
}

}  // namespace stepgan
