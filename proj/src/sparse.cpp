#include "gridstate/sparse.hpp"

namespace gridstate {

SparseMatrix<double> RowMatrix::to_csc(const std::vector<uint8_t>& mask) const {
    const bool all = mask.empty();
    int nr = 0;
    for (int r = 0; r < rows(); ++r)
        if (all || mask[r]) ++nr;
    SparseBuilder<double> b(nr, cols);
    int out_row = 0;
    for (int r = 0; r < rows(); ++r) {
        if (!all && !mask[r]) continue;
        for (size_t k = 0; k < idx[r].size(); ++k) b.add(out_row, idx[r][k], val[r][k]);
        ++out_row;
    }
    return b.compress();
}

}  // namespace gridstate
