#pragma once

#include <memory>
#include <vector>

#include "gridstate/sparse.hpp"

namespace gridstate {

enum class Ordering { Natural, MinDegree };

struct LuOptions {
    Ordering ordering = Ordering::MinDegree;
    // Relative threshold for keeping the diagonal as pivot; standard
    // KLU-style compromise between stability and fill.
    double pivot_threshold = 1e-3;
    // Force the pivot of step j onto the ordered diagonal. Required by the
    // Takahashi selected inverse; valid for the SPD gain matrices it sees.
    bool symmetric_pivot = false;
};

/// Counters exposed so reuse-sensitive callers (power flow, estimation,
/// quasi-steady-state sequencing) can observe what a solve actually did.
struct LuStats {
    int factor_count = 0;          // cold symbolic+numeric factorizations
    int refactor_count = 0;        // numeric-only refactorizations
    long pattern_allocations = 0;  // symbolic storage growth events
};

class SingularMatrixError : public SparseError {
public:
    SingularMatrixError(const std::string& what, int column)
        : SparseError(what), column(column) {}
    int column;
};

/// Sparse LU via the left-looking Gilbert-Peierls algorithm with threshold
/// partial pivoting and an optional fill-reducing column ordering.
/// Rectangular inputs with rows >= cols yield a lower-trapezoidal L
/// (unit diagonal, implicit) and a square upper-triangular U.
///
/// After factor(): A(p, q) = L * U with p = row_perm, q = col_perm. The
/// symbolic information (reach lists, permutations, factor storage) is kept,
/// so refactor() on a matrix with the identical pattern runs a numeric-only
/// replay that writes values in place and allocates nothing.
class LuFactorization {
public:
    LuFactorization() = default;

    void factor(const SparseMatrix<double>& a, const LuOptions& opts = {});

    /// Numeric-only refactorization; requires an identical nonzero pattern.
    void refactor(const SparseMatrix<double>& a);

    bool factored() const { return !u_ptr_.empty() && u_ptr_.size() > 1; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    /// Solve A x = b (square only).
    std::vector<double> solve(const std::vector<double>& b) const;
    /// Solve A^T y = c (square only).
    std::vector<double> solve_transpose(const std::vector<double>& c) const;

    const std::vector<int>& row_perm() const { return row_perm_; }
    const std::vector<int>& row_pinv() const { return row_pinv_; }
    const std::vector<int>& col_perm() const { return col_perm_; }
    bool symmetric_pivoted() const { return symmetric_pivoted_; }
    const LuStats& stats() const { return stats_; }

    // Factor access for Peters-Wilkinson and the selected inverse.
    // L columns hold strictly-below-diagonal entries with ORIGINAL row ids
    // (map through row_pinv() for pivot space); unit diagonal implicit.
    // U is cols() x cols() in pivot space with the diagonal stored last.
    const std::vector<int>& l_ptr() const { return l_ptr_; }
    const std::vector<int>& l_idx() const { return l_idx_; }
    const std::vector<double>& l_val() const { return l_val_; }
    const std::vector<int>& u_ptr() const { return u_ptr_; }
    const std::vector<int>& u_idx() const { return u_idx_; }
    const std::vector<double>& u_val() const { return u_val_; }

private:
    void numeric_pass(const SparseMatrix<double>& a, bool symbolic);

    int rows_ = 0, cols_ = 0;
    LuOptions opts_;
    bool symmetric_pivoted_ = false;

    std::vector<int> col_perm_;  // q: step -> original column
    std::vector<int> row_perm_;  // p: step -> original row
    std::vector<int> row_pinv_;  // original row -> step

    std::vector<int> l_ptr_, l_idx_;  // l_idx_ in original-row space
    std::vector<double> l_val_;
    std::vector<int> u_ptr_, u_idx_;  // u_idx_ in pivot space
    std::vector<double> u_val_;

    // Reach lists (original row ids, topological order) recorded during the
    // symbolic pass and replayed verbatim on refactorization.
    std::vector<int> reach_ptr_, reach_idx_;

    // Input pattern snapshot for the refactor pattern check.
    std::vector<int> a_col_ptr_, a_row_idx_;

    LuStats stats_;
};

/// Fill-reducing permutation: basic minimum-degree on the pattern of
/// A + A^T, deterministic (ties broken by lowest index).
std::vector<int> min_degree_ordering(const SparseMatrix<double>& a);
std::vector<int> min_degree_ordering_pattern(int n, const std::vector<int>& col_ptr,
                                             const std::vector<int>& row_idx);

}  // namespace gridstate
