#include "gridstate/selected_inverse.hpp"

#include <algorithm>
#include <cmath>

namespace gridstate {

namespace {

struct UpperView {
    // Per column: (row, slot) sorted ascending by row, diagonal included.
    std::vector<std::vector<std::pair<int, int>>> by_col;
    // Per row: (col, slot) for entries strictly right of the diagonal,
    // sorted ascending by column.
    std::vector<std::vector<std::pair<int, int>>> by_row;
};

UpperView build_upper_view(const LuFactorization& f) {
    const int n = f.cols();
    UpperView v;
    v.by_col.resize(n);
    v.by_row.resize(n);
    const auto& up = f.u_ptr();
    const auto& ui = f.u_idx();
    for (int j = 0; j < n; ++j) {
        for (int p = up[j]; p < up[j + 1]; ++p) {
            v.by_col[j].push_back({ui[p], p});
            if (ui[p] < j) v.by_row[ui[p]].push_back({j, p});
        }
        std::sort(v.by_col[j].begin(), v.by_col[j].end());
    }
    for (auto& r : v.by_row) std::sort(r.begin(), r.end());
    return v;
}

// Slot of Z(a, b) with a <= b, or -1 when outside the filled pattern.
int z_slot(const UpperView& v, int a, int b) {
    const auto& col = v.by_col[b];
    auto it = std::lower_bound(col.begin(), col.end(), std::make_pair(a, -1));
    if (it == col.end() || it->first != a) return -1;
    return it->second;
}

double row_quadform_by_solve(const LuFactorization& f, const RowMatrix& rows, int r) {
    std::vector<double> rhs(f.cols(), 0.0);
    for (size_t k = 0; k < rows.idx[r].size(); ++k) rhs[rows.idx[r][k]] = rows.val[r][k];
    const std::vector<double> y = f.solve(rhs);
    double q = 0.0;
    for (size_t k = 0; k < rows.idx[r].size(); ++k) q += rows.val[r][k] * y[rows.idx[r][k]];
    return q;
}

}  // namespace

QuadformResult selected_inverse_quadform(const LuFactorization& g_fact, const RowMatrix& j_rows,
                                         const std::vector<uint8_t>& row_mask) {
    if (g_fact.rows() != g_fact.cols()) throw SparseError("selected inverse: G must be square");
    const int n = g_fact.cols();
    const int m = j_rows.rows();
    QuadformResult out;
    out.values.assign(m, 0.0);

    const bool active_all = row_mask.empty();
    auto active = [&](int r) { return active_all || row_mask[r]; };

    if (!g_fact.symmetric_pivoted()) {
        // Takahashi recurrences need P = Q; solve per row instead.
        for (int r = 0; r < m; ++r) {
            if (!active(r)) continue;
            out.values[r] = row_quadform_by_solve(g_fact, j_rows, r);
            out.fallback_rows.push_back(r);
        }
        return out;
    }

    const UpperView view = build_upper_view(g_fact);
    const auto& uv = g_fact.u_val();
    const auto& up = g_fact.u_ptr();

    // Z over the pattern of U, computed column-by-column from the bottom
    // right. For i <= j: z_ij = (delta_ij - sum_{k>i} u_ik z(k,j)) / u_ii,
    // with z(k,j) looked up symmetrically. The fill pattern is closed under
    // these lookups for structurally symmetric inputs; any miss aborts to
    // the solve-based fallback.
    std::vector<double> z(uv.size(), 0.0);
    bool takahashi_ok = true;
    for (int j = n - 1; j >= 0 && takahashi_ok; --j) {
        const auto& col = view.by_col[j];
        for (auto it = col.rbegin(); it != col.rend(); ++it) {
            const int i = it->first;
            const int slot_ij = it->second;
            double s = 0.0;
            for (const auto& [k, slot_ik] : view.by_row[i]) {
                const int zs = z_slot(view, std::min(k, j), std::max(k, j));
                if (zs < 0) {
                    takahashi_ok = false;
                    break;
                }
                s += uv[slot_ik] * z[zs];
            }
            if (!takahashi_ok) break;
            const double diag = uv[up[i + 1] - 1];
            z[slot_ij] = ((i == j ? 1.0 : 0.0) - s) / diag;
        }
    }

    if (!takahashi_ok) {
        for (int r = 0; r < m; ++r) {
            if (!active(r)) continue;
            out.values[r] = row_quadform_by_solve(g_fact, j_rows, r);
            out.fallback_rows.push_back(r);
        }
        return out;
    }

    // Original index -> pivot-space position (P = Q here).
    std::vector<int> col_pos(n);
    for (int j = 0; j < n; ++j) col_pos[g_fact.col_perm()[j]] = j;

    std::vector<int> pos;
    std::vector<double> coef;
    for (int r = 0; r < m; ++r) {
        if (!active(r)) continue;
        const auto& cols = j_rows.idx[r];
        const auto& vals = j_rows.val[r];
        pos.resize(cols.size());
        coef.assign(vals.begin(), vals.end());
        for (size_t k = 0; k < cols.size(); ++k) pos[k] = col_pos[cols[k]];

        double q = 0.0;
        bool ok = true;
        for (size_t a = 0; a < pos.size() && ok; ++a) {
            for (size_t b = a; b < pos.size(); ++b) {
                const int pa = std::min(pos[a], pos[b]);
                const int pb = std::max(pos[a], pos[b]);
                const int zs = z_slot(view, pa, pb);
                if (zs < 0) {
                    ok = false;
                    break;
                }
                q += (a == b ? 1.0 : 2.0) * coef[a] * coef[b] * z[zs];
            }
        }
        if (ok) {
            out.values[r] = q;
        } else {
            out.values[r] = row_quadform_by_solve(g_fact, j_rows, r);
            out.fallback_rows.push_back(r);
        }
    }
    return out;
}

}  // namespace gridstate
