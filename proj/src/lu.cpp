#include "gridstate/lu.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>

namespace gridstate {

namespace {

// Nonrecursive depth-first search over the partially built L. Appends the
// postorder to `post`; the caller reverses it to get topological order.
// Children of a reached row are the L-column entries of its pivot step.
void dfs_reach(int start, const std::vector<int>& l_ptr, const std::vector<int>& l_idx,
               const std::vector<int>& row_pinv, int current_step, std::vector<int>& mark,
               int tag, std::vector<int>& node_stack, std::vector<int>& pos_stack,
               std::vector<int>& post) {
    node_stack.clear();
    pos_stack.clear();
    node_stack.push_back(start);
    pos_stack.push_back(0);
    mark[start] = tag;
    while (!node_stack.empty()) {
        const int r = node_stack.back();
        const int step = row_pinv[r];
        bool descended = false;
        if (step >= 0 && step < current_step) {
            int& p = pos_stack.back();
            while (l_ptr[step] + p < l_ptr[step + 1]) {
                const int child = l_idx[l_ptr[step] + p];
                ++p;
                if (mark[child] != tag) {
                    mark[child] = tag;
                    node_stack.push_back(child);
                    pos_stack.push_back(0);
                    descended = true;
                    break;
                }
            }
        }
        if (descended) continue;
        post.push_back(r);
        node_stack.pop_back();
        pos_stack.pop_back();
    }
}

}  // namespace

void LuFactorization::factor(const SparseMatrix<double>& a, const LuOptions& opts) {
    if (a.rows < a.cols) throw SparseError("lu: rows < cols not supported");
    rows_ = a.rows;
    cols_ = a.cols;
    opts_ = opts;
    symmetric_pivoted_ = opts.symmetric_pivot;

    col_perm_.resize(cols_);
    if (opts.ordering == Ordering::MinDegree && rows_ == cols_) {
        col_perm_ = min_degree_ordering(a);
    } else {
        std::iota(col_perm_.begin(), col_perm_.end(), 0);
    }

    row_perm_.assign(cols_, -1);
    row_pinv_.assign(rows_, -1);
    l_ptr_.assign(1, 0);
    l_idx_.clear();
    l_val_.clear();
    u_ptr_.assign(1, 0);
    u_idx_.clear();
    u_val_.clear();
    reach_ptr_.assign(1, 0);
    reach_idx_.clear();
    a_col_ptr_ = a.col_ptr;
    a_row_idx_ = a.row_idx;

    numeric_pass(a, /*symbolic=*/true);

    // Assign pivot-space positions to never-pivoted rows (rectangular case).
    int next = cols_;
    for (int r = 0; r < rows_; ++r)
        if (row_pinv_[r] < 0) row_pinv_[r] = next++;

    ++stats_.factor_count;
}

void LuFactorization::refactor(const SparseMatrix<double>& a) {
    if (!factored()) throw SparseError("lu: refactor before factor");
    if (a.rows != rows_ || a.cols != cols_ || a.col_ptr != a_col_ptr_ || a.row_idx != a_row_idx_)
        throw SparseError("lu: pattern mismatch on refactor");
    numeric_pass(a, /*symbolic=*/false);
    ++stats_.refactor_count;
}

void LuFactorization::numeric_pass(const SparseMatrix<double>& a, bool symbolic) {
    std::vector<double> x(rows_, 0.0);
    std::vector<int> mark(rows_, -1);
    std::vector<int> node_stack, pos_stack, topo;

    int l_pos = 0, u_pos = 0;  // replay write cursors

    for (int j = 0; j < cols_; ++j) {
        const int ocol = col_perm_[j];

        if (symbolic) {
            topo.clear();
            for (int p = a.col_ptr[ocol]; p < a.col_ptr[ocol + 1]; ++p) {
                const int r = a.row_idx[p];
                if (mark[r] != j + 1)
                    dfs_reach(r, l_ptr_, l_idx_, row_pinv_, j, mark, j + 1, node_stack,
                              pos_stack, topo);
            }
            std::reverse(topo.begin(), topo.end());
            reach_idx_.insert(reach_idx_.end(), topo.begin(), topo.end());
            reach_ptr_.push_back(static_cast<int>(reach_idx_.size()));
            stats_.pattern_allocations += static_cast<long>(topo.size());
        }

        const int t_begin = reach_ptr_[j], t_end = reach_ptr_[j + 1];

        // Scatter A(:, ocol) and eliminate through earlier pivot columns in
        // topological order.
        for (int t = t_begin; t < t_end; ++t) x[reach_idx_[t]] = 0.0;
        for (int p = a.col_ptr[ocol]; p < a.col_ptr[ocol + 1]; ++p)
            x[a.row_idx[p]] = a.values[p];
        for (int t = t_begin; t < t_end; ++t) {
            const int r = reach_idx_[t];
            const int step = row_pinv_[r];
            if (step < 0 || step >= j) continue;
            const double xr = x[r];
            if (xr == 0.0) continue;
            for (int p = l_ptr_[step]; p < l_ptr_[step + 1]; ++p)
                x[l_idx_[p]] -= l_val_[p] * xr;
        }

        // Pivot selection among unpivoted reached rows.
        int pivot_row;
        if (symbolic) {
            double max_abs = 0.0;
            int max_row = -1;
            for (int t = t_begin; t < t_end; ++t) {
                const int r = reach_idx_[t];
                if (row_pinv_[r] >= 0) continue;
                const double ar = std::abs(x[r]);
                if (ar > max_abs || (ar == max_abs && (max_row < 0 || r < max_row))) {
                    max_abs = ar;
                    max_row = r;
                }
            }
            if (opts_.symmetric_pivot) {
                pivot_row = (mark[ocol] == j + 1 && row_pinv_[ocol] < 0) ? ocol : -1;
            } else if (rows_ == cols_ && mark[ocol] == j + 1 && row_pinv_[ocol] < 0 &&
                       std::abs(x[ocol]) > 0.0 &&
                       std::abs(x[ocol]) >= opts_.pivot_threshold * max_abs) {
                pivot_row = ocol;  // ordered diagonal passes the threshold test
            } else {
                pivot_row = max_row;
            }
            if (pivot_row < 0 || x[pivot_row] == 0.0 || !std::isfinite(x[pivot_row]))
                throw SingularMatrixError("lu: singular pivot at column " + std::to_string(ocol),
                                          ocol);
            row_perm_[j] = pivot_row;
            row_pinv_[pivot_row] = j;
        } else {
            pivot_row = row_perm_[j];
            if (x[pivot_row] == 0.0 || !std::isfinite(x[pivot_row]))
                throw SingularMatrixError(
                    "lu: zero pivot during refactorization at column " + std::to_string(ocol),
                    ocol);
        }
        const double pivot = x[pivot_row];

        // Emit U entries (earlier pivot rows) then the diagonal, then L
        // entries, all in reach order so the replay cursors line up.
        for (int t = t_begin; t < t_end; ++t) {
            const int r = reach_idx_[t];
            const int step = row_pinv_[r];
            if (step < 0 || step >= j) continue;
            if (symbolic) {
                u_idx_.push_back(step);
                u_val_.push_back(x[r]);
            } else {
                u_val_[u_pos] = x[r];
            }
            ++u_pos;
        }
        if (symbolic) {
            u_idx_.push_back(j);
            u_val_.push_back(pivot);
            u_ptr_.push_back(static_cast<int>(u_idx_.size()));
        } else {
            u_val_[u_pos] = pivot;
        }
        ++u_pos;

        for (int t = t_begin; t < t_end; ++t) {
            const int r = reach_idx_[t];
            if (r == pivot_row) continue;
            const int step = row_pinv_[r];
            if (step >= 0 && step < j) continue;
            if (symbolic) {
                l_idx_.push_back(r);
                l_val_.push_back(x[r] / pivot);
            } else {
                l_val_[l_pos] = x[r] / pivot;
            }
            ++l_pos;
        }
        if (symbolic) l_ptr_.push_back(static_cast<int>(l_idx_.size()));
    }
}

std::vector<double> LuFactorization::solve(const std::vector<double>& b) const {
    if (rows_ != cols_) throw SparseError("lu: solve requires a square factorization");
    const int n = cols_;
    // Forward substitution, pivot space: w = L^{-1} b(p).
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) w[j] = b[row_perm_[j]];
    for (int j = 0; j < n; ++j) {
        const double wj = w[j];
        if (wj == 0.0) continue;
        for (int p = l_ptr_[j]; p < l_ptr_[j + 1]; ++p)
            w[row_pinv_[l_idx_[p]]] -= l_val_[p] * wj;
    }
    // Backward substitution with column-stored U (diagonal last).
    for (int j = n - 1; j >= 0; --j) {
        const int dp = u_ptr_[j + 1] - 1;
        w[j] /= u_val_[dp];
        const double wj = w[j];
        if (wj == 0.0) continue;
        for (int p = u_ptr_[j]; p < dp; ++p) w[u_idx_[p]] -= u_val_[p] * wj;
    }
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[col_perm_[j]] = w[j];
    return out;
}

std::vector<double> LuFactorization::solve_transpose(const std::vector<double>& c) const {
    if (rows_ != cols_) throw SparseError("lu: solve requires a square factorization");
    const int n = cols_;
    // U^T forward substitution.
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        double s = c[col_perm_[j]];
        const int dp = u_ptr_[j + 1] - 1;
        for (int p = u_ptr_[j]; p < dp; ++p) s -= u_val_[p] * w[u_idx_[p]];
        w[j] = s / u_val_[dp];
    }
    // L^T backward substitution.
    std::vector<double> y(n);
    for (int j = n - 1; j >= 0; --j) {
        double s = w[j];
        for (int p = l_ptr_[j]; p < l_ptr_[j + 1]; ++p)
            s -= l_val_[p] * y[row_pinv_[l_idx_[p]]];
        y[j] = s;
    }
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[row_perm_[j]] = y[j];
    return out;
}

std::vector<int> min_degree_ordering(const SparseMatrix<double>& a) {
    return min_degree_ordering_pattern(a.cols, a.col_ptr, a.row_idx);
}

std::vector<int> min_degree_ordering_pattern(int n, const std::vector<int>& col_ptr,
                                             const std::vector<int>& row_idx) {
    std::vector<std::vector<int>> adj(n);
    for (int j = 0; j < n; ++j) {
        for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
            const int i = row_idx[p];
            if (i == j) continue;
            adj[j].push_back(i);
            adj[i].push_back(j);
        }
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    // Lazy min-heap of (degree, node); stale entries are skipped on pop.
    using Key = std::pair<int, int>;
    std::priority_queue<Key, std::vector<Key>, std::greater<Key>> heap;
    for (int v = 0; v < n; ++v) heap.push({static_cast<int>(adj[v].size()), v});

    std::vector<char> eliminated(n, 0);
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> merged;
    while (static_cast<int>(order.size()) < n) {
        const auto [deg, v] = heap.top();
        heap.pop();
        if (eliminated[v] || deg != static_cast<int>(adj[v].size())) continue;
        eliminated[v] = 1;
        order.push_back(v);
        const std::vector<int> nb = std::move(adj[v]);
        adj[v].clear();
        for (int u : nb) {
            auto& au = adj[u];
            merged.clear();
            merged.reserve(au.size() + nb.size());
            for (int w : au)
                if (!eliminated[w]) merged.push_back(w);
            for (int w : nb)
                if (w != u && !eliminated[w]) merged.push_back(w);
            std::sort(merged.begin(), merged.end());
            merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
            au.assign(merged.begin(), merged.end());
            heap.push({static_cast<int>(au.size()), u});
        }
    }
    return order;
}

}  // namespace gridstate
