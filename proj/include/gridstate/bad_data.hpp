#pragma once

#include <string>
#include <vector>

#include "gridstate/estimation.hpp"

namespace gridstate {

struct ChiSquaredOutcome {
    bool pass = false;
    double statistic = 0.0;
    double threshold = 0.0;
    int degrees_of_freedom = 0;
    double confidence = 0.95;
};

/// Chi-squared detection over the solved model's active residuals:
/// statistic = sum r_i^2 / Sigma_ii against the quantile at k - m degrees
/// of freedom. Throws EstimationError when there is no redundancy.
ChiSquaredOutcome chi_squared_test(const EstimationModel& model, double confidence = 0.95);

struct LnrSelection {
    int row = -1;  // -1 when every candidate is critical or clean
    double normalized_residual = 0.0;
    std::vector<double> all_normalized;  // per row, 0 for inactive/critical
    std::vector<int> critical_rows;      // exempted: residual covariance ~ 0
    int fallback_rows = 0;               // selected-inverse solve fallbacks
};

/// Largest normalized residual via the sparse selected inverse:
/// C_ii = Sigma_ii - (J G^{-1} J^T)_ii, r_bar = |r_i| / sqrt(C_ii).
/// Ties break toward the lowest row index; critical measurements
/// (C_ii <= 1e-10 Sigma_ii) are exempt from selection.
LnrSelection largest_normalized_residual(EstimationModel& model);

struct BadDataRemoval {
    int pass = 0;
    int row = -1;
    std::string measurement_id;
    double normalized_residual = 0.0;
    double threshold = 0.0;
};

struct BadDataReport {
    ChiSquaredOutcome chi_squared;
    bool lnr_ran = false;
    std::vector<BadDataRemoval> removals;
    std::vector<std::string> critical_measurements;
    double final_max_normalized = 0.0;
    bool final_chi_squared_pass = false;
    int passes = 0;
    std::string error;
    EstimationResult final_estimate;
};

struct BadDataOptions {
    double identification_threshold = 3.0;  // r_bar >= threshold removes
    double confidence = 0.95;
    bool force_lnr = false;  // run LNR even when the chi-squared test passes
    int max_passes = 0;      // 0: bounded by the measurement count
    EstimationOptions estimation;
};

/// Full detection/identification loop: WLS solve, chi-squared flag, then
/// iterative largest-normalized-residual removal (masking rows in place,
/// refactoring the gain) until the largest normalized residual drops below
/// the threshold.
BadDataReport run_bad_data_loop(EstimationModel& model, const BadDataOptions& opts = {});

}  // namespace gridstate
