#pragma once

#include <vector>

#include "gridstate/lu.hpp"
#include "gridstate/sparse.hpp"

namespace gridstate {

struct QuadformResult {
    std::vector<double> values;      // (J G^{-1} J^T)_ii per requested row
    std::vector<int> fallback_rows;  // rows computed by a sparse solve instead
};

/// Diagonal of J G^{-1} J^T for the rows of J, where G is symmetric positive
/// definite and already factored with symmetric pivoting. Selected entries of
/// G^{-1} are computed with Takahashi-style recurrences over the filled
/// pattern of U, so the dense inverse is never formed. Rows whose support
/// pairs leave the filled pattern fall back to a per-row sparse solve and are
/// recorded in the result.
QuadformResult selected_inverse_quadform(const LuFactorization& g_fact, const RowMatrix& j_rows,
                                         const std::vector<uint8_t>& row_mask = {});

}  // namespace gridstate
