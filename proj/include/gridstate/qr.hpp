#pragma once

#include <vector>

#include "gridstate/sparse.hpp"

namespace gridstate {

class RankDeficientError : public SparseError {
public:
    RankDeficientError(const std::string& what, int column, double r_diag)
        : SparseError(what), column(column), r_diag(r_diag) {}
    int column;
    double r_diag;
};

/// Householder QR of a sparse rows x cols matrix (rows >= cols). Columns
/// densify while active: each column is gathered into a dense work vector,
/// the previous reflectors are applied, and the new reflector is stored with
/// a dense tail. Acceptable at desk scale; sparse multifrontal QR is out of
/// scope here.
class QrFactorization {
public:
    void factor(const SparseMatrix<double>& a);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool factored() const { return !r_cols_.empty() || cols_ == 0; }

    /// Apply Q^T to a vector of length rows().
    std::vector<double> apply_qt(std::vector<double> b) const;
    /// Apply Q to a vector of length rows().
    std::vector<double> apply_q(std::vector<double> b) const;

    /// Least-squares minimizer of ||A x - b||_2; requires full column rank.
    /// Throws RankDeficientError naming the first offending column and its
    /// |R_ii| when rank deficiency is detected.
    std::vector<double> solve_least_squares(const std::vector<double>& b) const;

    /// R diagonal magnitudes in factorization order.
    std::vector<double> r_diagonal() const;

    double r_entry(int i, int j) const { return i <= j ? r_cols_[j][i] : 0.0; }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<std::vector<double>> reflectors_;  // v_j, dense tail rows j..rows-1
    std::vector<double> beta_;
    std::vector<std::vector<double>> r_cols_;  // column j holds rows 0..j
};

}  // namespace gridstate
