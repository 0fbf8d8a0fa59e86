#include "gridstate/bad_data.hpp"

#include <cmath>

#include "gridstate/selected_inverse.hpp"
#include "gridstate/stats.hpp"

namespace gridstate {

ChiSquaredOutcome chi_squared_test(const EstimationModel& model, double confidence) {
    const int k = model.active_rows();
    const int m = model.m_states();
    if (k <= m)
        throw EstimationError("chi-squared test needs redundancy (k = " + std::to_string(k) +
                              " <= m = " + std::to_string(m) + ")");
    ChiSquaredOutcome out;
    out.confidence = confidence;
    out.degrees_of_freedom = k - m;
    const auto& r = model.residuals();
    for (int i = 0; i < model.k_rows(); ++i) {
        if (!model.active()[i]) continue;
        out.statistic += r[i] * r[i] / model.sigma_diag(i);
    }
    out.threshold = chi_squared_quantile(out.degrees_of_freedom, confidence);
    out.pass = out.statistic <= out.threshold;
    return out;
}

LnrSelection largest_normalized_residual(EstimationModel& model) {
    model.refresh_gain();
    const QuadformResult quad =
        selected_inverse_quadform(model.gain_factor(), model.jacobian(), model.active());

    LnrSelection sel;
    sel.all_normalized.assign(model.k_rows(), 0.0);
    sel.fallback_rows = static_cast<int>(quad.fallback_rows.size());
    const auto& r = model.residuals();
    for (int i = 0; i < model.k_rows(); ++i) {
        if (!model.active()[i]) continue;
        const double sigma_ii = model.sigma_diag(i);
        const double c_ii = sigma_ii - quad.values[i];
        if (c_ii <= 1e-10 * sigma_ii) {
            // Critical measurement: removing it would break observability,
            // and its residual covariance vanishes. Exempt from selection.
            sel.critical_rows.push_back(i);
            continue;
        }
        const double rbar = std::abs(r[i]) / std::sqrt(c_ii);
        sel.all_normalized[i] = rbar;
        if (rbar > sel.normalized_residual) {  // strict: ties keep lowest index
            sel.normalized_residual = rbar;
            sel.row = i;
        }
    }
    return sel;
}

BadDataReport run_bad_data_loop(EstimationModel& model, const BadDataOptions& opts) {
    BadDataReport report;
    EstimationResult est = model.solve(opts.estimation);
    if (!est.converged) {
        report.error = "initial estimate failed: " + est.error;
        return report;
    }

    try {
        report.chi_squared = chi_squared_test(model, opts.confidence);
    } catch (const EstimationError& e) {
        report.error = e.what();
        report.final_estimate = est;
        return report;
    }
    if (report.chi_squared.pass && !opts.force_lnr) {
        report.final_estimate = est;
        report.final_chi_squared_pass = true;
        return report;
    }

    report.lnr_ran = true;
    const int max_passes = opts.max_passes > 0 ? opts.max_passes : model.k_rows();
    EstimationOptions warm = opts.estimation;
    for (int pass = 1; pass <= max_passes; ++pass) {
        report.passes = pass;
        LnrSelection sel;
        try {
            sel = largest_normalized_residual(model);
        } catch (const SparseError& e) {
            report.error = std::string("normalized residual computation failed: ") + e.what();
            break;
        }
        for (int row : sel.critical_rows) {
            const std::string label = model.row_label(row);
            bool seen = false;
            for (const auto& c : report.critical_measurements) seen |= (c == label);
            if (!seen) report.critical_measurements.push_back(label);
        }
        report.final_max_normalized = sel.normalized_residual;
        if (sel.row < 0 || sel.normalized_residual < opts.identification_threshold) break;

        report.removals.push_back({pass, sel.row, model.row_label(sel.row),
                                   sel.normalized_residual, opts.identification_threshold});
        model.deactivate_row(sel.row);

        warm.start = EstimationStart::Warm;
        est = model.solve(warm);
        if (!est.converged) {
            report.error = "re-estimation after removal failed: " + est.error;
            if (!est.deficient_columns.empty())
                report.error += " (removal made the model rank-deficient)";
            break;
        }
    }

    report.final_estimate = est;
    try {
        report.final_chi_squared_pass = chi_squared_test(model, opts.confidence).pass;
    } catch (const EstimationError&) {
        report.final_chi_squared_pass = false;
    }
    return report;
}

}  // namespace gridstate
