#pragma once

#include <functional>
#include <vector>

#include "fraction.hpp"

namespace starmod {

inline Scalar conj_of(const Scalar& s) { return s.conj(); }
inline CFrac conj_of(const CFrac& x) { return x.conj(); }

/**
 * Dense matrix over an exact coefficient type.  A zero prototype is carried
 * explicitly so lambda-variant and rational-variant entries never mix by
 * accident (default-constructed scalars are rational-variant zeros).
 */
template <class T>
class Mat {
public:
    Mat(int rows, int cols, T zero)
        : rows_(rows), cols_(cols), zero_(zero), a_(static_cast<std::size_t>(rows) * cols, zero) {}

    static Mat identity(int n, const T& zero, const T& one) {
        Mat m(n, n, zero);
        for (int i = 0; i < n; ++i) m.at(i, i) = one;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const T& zero() const { return zero_; }

    T& at(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    const T& at(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    bool is_zero() const {
        for (const auto& x : a_)
            if (!x.is_zero()) return false;
        return true;
    }

    friend Mat operator+(const Mat& a, const Mat& b) {
        Mat r = a;
        for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] += b.a_[k];
        return r;
    }

    friend Mat operator-(const Mat& a, const Mat& b) {
        Mat r = a;
        for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] -= b.a_[k];
        return r;
    }

    friend Mat operator*(const Mat& a, const Mat& b) {
        Mat r(a.rows_, b.cols_, a.zero_);
        for (int i = 0; i < a.rows_; ++i)
            for (int k = 0; k < a.cols_; ++k) {
                const T& aik = a.at(i, k);
                if (aik.is_zero()) continue;
                for (int j = 0; j < b.cols_; ++j) {
                    const T& bkj = b.at(k, j);
                    if (!bkj.is_zero()) r.at(i, j) += aik * bkj;
                }
            }
        return r;
    }

    Mat scaled(const T& c) const {
        Mat r = *this;
        for (auto& x : r.a_) x = x * c;
        return r;
    }

    Mat conj_transpose() const {
        Mat r(cols_, rows_, zero_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) r.at(j, i) = conj_of(at(i, j));
        return r;
    }

    Mat transpose() const {
        Mat r(cols_, rows_, zero_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
        return r;
    }

    std::vector<T> col(int j) const {
        std::vector<T> v;
        v.reserve(rows_);
        for (int i = 0; i < rows_; ++i) v.push_back(at(i, j));
        return v;
    }

    std::vector<T> apply(const std::vector<T>& x) const {
        std::vector<T> y(static_cast<std::size_t>(rows_), zero_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                if (!at(i, j).is_zero()) y[i] += at(i, j) * x[j];
        return y;
    }

    friend bool operator==(const Mat& a, const Mat& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
    }

    void swap_cols(int j, int k) {
        for (int i = 0; i < rows_; ++i) std::swap(at(i, j), at(i, k));
    }

    void swap_rows(int i, int k) {
        for (int j = 0; j < cols_; ++j) std::swap(at(i, j), at(k, j));
    }

    // col_j += c * col_k
    void add_col(int j, int k, const T& c) {
        for (int i = 0; i < rows_; ++i) at(i, j) += c * at(i, k);
    }

    // row_i += c * row_k
    void add_row(int i, int k, const T& c) {
        for (int j = 0; j < cols_; ++j) at(i, j) += c * at(k, j);
    }

private:
    int rows_, cols_;
    T zero_;
    std::vector<T> a_;
};

using SMat = Mat<Scalar>;
using FMat = Mat<CFrac>;

inline FMat to_frac(const SMat& m) {
    FMat r(m.rows(), m.cols(), CFrac::zero(m.zero().variant()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r.at(i, j) = CFrac(m.at(i, j));
    return r;
}

// Ring matrix from a field matrix; fails if any entry has a denominator.
inline std::optional<SMat> to_ring(const FMat& m) {
    SMat r(m.rows(), m.cols(), Scalar::zero(m.zero().variant()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            auto s = m.at(i, j).to_ring();
            if (!s) return std::nullopt;
            r.at(i, j) = *s;
        }
    return r;
}

}  // namespace starmod
