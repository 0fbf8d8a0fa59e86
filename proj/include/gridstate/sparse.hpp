#pragma once

#include <algorithm>
#include <limits>
#include <cassert>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridstate {

using cdouble = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Compressed sparse column matrix. Row indices are strictly increasing
/// within each column and duplicates are summed at build time.
template <class T>
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> col_ptr;  // size cols+1
    std::vector<int> row_idx;  // size nnz, sorted per column
    std::vector<T> values;     // size nnz

    SparseMatrix() : col_ptr(1, 0) {}
    SparseMatrix(int r, int c) : rows(r), cols(c), col_ptr(c + 1, 0) {}

    int nnz() const { return static_cast<int>(row_idx.size()); }

    /// Index into values for entry (r, c), or -1 when the entry is not
    /// part of the pattern.
    int find_slot(int r, int c) const {
        const int lo = col_ptr[c], hi = col_ptr[c + 1];
        auto it = std::lower_bound(row_idx.begin() + lo, row_idx.begin() + hi, r);
        if (it == row_idx.begin() + hi || *it != r) return -1;
        return static_cast<int>(it - row_idx.begin());
    }

    T at(int r, int c) const {
        int s = find_slot(r, c);
        return s < 0 ? T{} : values[s];
    }

    void set_zero() { std::fill(values.begin(), values.end(), T{}); }

    /// y = A * x
    std::vector<T> multiply(const std::vector<T>& x) const {
        assert(static_cast<int>(x.size()) == cols);
        std::vector<T> y(rows, T{});
        for (int j = 0; j < cols; ++j) {
            const T xj = x[j];
            for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p) y[row_idx[p]] += values[p] * xj;
        }
        return y;
    }

    SparseMatrix<T> transpose() const {
        SparseMatrix<T> t(cols, rows);
        std::vector<int> count(rows, 0);
        for (int i : row_idx) ++count[i];
        t.col_ptr.assign(rows + 1, 0);
        for (int i = 0; i < rows; ++i) t.col_ptr[i + 1] = t.col_ptr[i] + count[i];
        t.row_idx.resize(nnz());
        t.values.resize(nnz());
        std::vector<int> next(t.col_ptr.begin(), t.col_ptr.end() - 1);
        for (int j = 0; j < cols; ++j) {
            for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
                const int q = next[row_idx[p]]++;
                t.row_idx[q] = j;
                t.values[q] = values[p];
            }
        }
        return t;
    }

    bool same_pattern(const SparseMatrix<T>& o) const {
        return rows == o.rows && cols == o.cols && col_ptr == o.col_ptr && row_idx == o.row_idx;
    }
};

/// Triplet accumulator; compress() sums duplicates and sorts rows.
template <class T>
class SparseBuilder {
public:
    SparseBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int r, int c, T v) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        entries_.push_back({r, c, v});
    }

    SparseMatrix<T> compress() const {
        SparseMatrix<T> m(rows_, cols_);
        std::vector<int> count(cols_, 0);
        std::vector<int> order(entries_.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (entries_[a].c != entries_[b].c) return entries_[a].c < entries_[b].c;
            return entries_[a].r < entries_[b].r;
        });
        m.col_ptr.assign(cols_ + 1, 0);
        for (size_t k = 0; k < order.size(); ++k) {
            const auto& e = entries_[order[k]];
            if (k > 0) {
                const auto& prev = entries_[order[k - 1]];
                if (prev.r == e.r && prev.c == e.c) {
                    m.values.back() += e.v;
                    continue;
                }
            }
            m.row_idx.push_back(e.r);
            m.values.push_back(e.v);
            ++count[e.c];
        }
        for (int j = 0; j < cols_; ++j) m.col_ptr[j + 1] = m.col_ptr[j] + count[j];
        return m;
    }

private:
    struct Entry {
        int r, c;
        T v;
    };
    int rows_, cols_;
    std::vector<Entry> entries_;
};

/// Row-oriented sparse matrix used for measurement Jacobians and
/// coefficient matrices: rows are assembled and re-evaluated
/// independently, columns are only needed when forming gain products.
struct RowMatrix {
    int cols = 0;
    std::vector<std::vector<int>> idx;     // per row: column indices (sorted)
    std::vector<std::vector<double>> val;  // per row: matching values

    int rows() const { return static_cast<int>(idx.size()); }

    int add_row(std::vector<int> columns, std::vector<double> values) {
        assert(columns.size() == values.size());
        idx.push_back(std::move(columns));
        val.push_back(std::move(values));
        return rows() - 1;
    }

    double row_dot(int r, const std::vector<double>& x) const {
        double s = 0;
        for (size_t k = 0; k < idx[r].size(); ++k) s += val[r][k] * x[idx[r][k]];
        return s;
    }

    /// CSC copy of a row subset (mask[r] != 0 keeps the row, renumbered
    /// compactly in input order). Pass empty mask to keep all rows.
    SparseMatrix<double> to_csc(const std::vector<uint8_t>& mask = {}) const;
};

class SparseError : public std::runtime_error {
public:
    explicit SparseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridstate
