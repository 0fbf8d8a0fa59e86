#include "gridstate/qr.hpp"

#include <cmath>

namespace gridstate {

void QrFactorization::factor(const SparseMatrix<double>& a) {
    if (a.rows < a.cols) throw SparseError("qr: rows < cols not supported");
    rows_ = a.rows;
    cols_ = a.cols;
    reflectors_.assign(cols_, {});
    beta_.assign(cols_, 0.0);
    r_cols_.assign(cols_, {});

    std::vector<double> w(rows_);
    for (int j = 0; j < cols_; ++j) {
        std::fill(w.begin(), w.end(), 0.0);
        for (int p = a.col_ptr[j]; p < a.col_ptr[j + 1]; ++p) w[a.row_idx[p]] = a.values[p];

        for (int k = 0; k < j; ++k) {
            const auto& v = reflectors_[k];
            double s = 0.0;
            for (size_t t = 0; t < v.size(); ++t) s += v[t] * w[k + t];
            s *= beta_[k];
            if (s != 0.0)
                for (size_t t = 0; t < v.size(); ++t) w[k + t] -= s * v[t];
        }

        r_cols_[j].assign(w.begin(), w.begin() + j);

        // Householder reflector for the tail w[j..].
        double norm2 = 0.0;
        for (int i = j; i < rows_; ++i) norm2 += w[i] * w[i];
        const double norm = std::sqrt(norm2);
        std::vector<double>& v = reflectors_[j];
        v.assign(w.begin() + j, w.end());
        if (norm == 0.0) {
            beta_[j] = 0.0;
            r_cols_[j].push_back(0.0);
        } else {
            const double alpha = w[j] >= 0.0 ? -norm : norm;
            v[0] -= alpha;
            double vtv = 0.0;
            for (double t : v) vtv += t * t;
            beta_[j] = vtv > 0.0 ? 2.0 / vtv : 0.0;
            r_cols_[j].push_back(alpha);
        }
    }
}

std::vector<double> QrFactorization::apply_qt(std::vector<double> b) const {
    for (int k = 0; k < cols_; ++k) {
        const auto& v = reflectors_[k];
        if (beta_[k] == 0.0) continue;
        double s = 0.0;
        for (size_t t = 0; t < v.size(); ++t) s += v[t] * b[k + t];
        s *= beta_[k];
        if (s != 0.0)
            for (size_t t = 0; t < v.size(); ++t) b[k + t] -= s * v[t];
    }
    return b;
}

std::vector<double> QrFactorization::apply_q(std::vector<double> b) const {
    for (int k = cols_ - 1; k >= 0; --k) {
        const auto& v = reflectors_[k];
        if (beta_[k] == 0.0) continue;
        double s = 0.0;
        for (size_t t = 0; t < v.size(); ++t) s += v[t] * b[k + t];
        s *= beta_[k];
        if (s != 0.0)
            for (size_t t = 0; t < v.size(); ++t) b[k + t] -= s * v[t];
    }
    return b;
}

std::vector<double> QrFactorization::solve_least_squares(const std::vector<double>& b) const {
    double r_max = 0.0;
    for (int j = 0; j < cols_; ++j) r_max = std::max(r_max, std::abs(r_cols_[j][j]));
    for (int j = 0; j < cols_; ++j) {
        const double d = std::abs(r_cols_[j][j]);
        if (d <= 1e-12 * r_max || d == 0.0)
            throw RankDeficientError("qr: rank-deficient at column " + std::to_string(j) +
                                         " (|R_ii| = " + std::to_string(d) + ")",
                                     j, d);
    }
    std::vector<double> y = apply_qt(b);
    std::vector<double> x(cols_);
    for (int j = cols_ - 1; j >= 0; --j) {
        double s = y[j];
        for (int k = j + 1; k < cols_; ++k) s -= r_cols_[k][j] * x[k];
        x[j] = s / r_cols_[j][j];
    }
    return x;
}

std::vector<double> QrFactorization::r_diagonal() const {
    std::vector<double> d(cols_);
    for (int j = 0; j < cols_; ++j) d[j] = std::abs(r_cols_[j][j]);
    return d;
}

}  // namespace gridstate
