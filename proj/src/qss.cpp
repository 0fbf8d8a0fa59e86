#include "gridstate/qss.hpp"

#include <fstream>

namespace gridstate {

namespace {

ComponentChange parse_change(const json& c) {
    const std::string op = c.at("op").get<std::string>();
    if (op == "set_load") return SetLoad{c.at("bus"), c.at("p"), c.at("q")};
    if (op == "scale_load") return ScaleLoad{c.at("bus"), c.at("factor")};
    if (op == "scale_all_loads") return ScaleAllLoads{c.at("factor")};
    if (op == "set_shunt") return SetShunt{c.at("bus"), c.at("g"), c.at("b")};
    if (op == "set_branch_status")
        return SetBranchStatus{c.at("branch").get<int>() - 1, c.at("in_service")};
    if (op == "set_tap") return SetTap{c.at("branch").get<int>() - 1, c.at("tap")};
    if (op == "scale_all_taps") return ScaleAllTaps{c.at("factor")};
    if (op == "set_generator_output")
        return SetGeneratorOutput{c.at("generator").get<int>() - 1, c.at("p"), c.at("q")};
    if (op == "set_generator_status")
        return SetGeneratorStatus{c.at("generator").get<int>() - 1, c.at("in_service")};
    throw std::runtime_error("unknown change op '" + op + "'");
}

MeasurementEdit parse_edit(const json& e) {
    MeasurementEdit edit;
    edit.id = e.at("id").get<std::string>();
    if (e.contains("value")) {
        edit.what = MeasurementEdit::What::Value;
        edit.value = e.at("value").get<double>();
    } else if (e.contains("variance")) {
        edit.what = MeasurementEdit::What::Variance;
        edit.value = e.at("variance").get<double>();
    } else if (e.contains("status")) {
        edit.what = MeasurementEdit::What::Status;
        edit.in_service = e.at("status").get<int>() != 0;
    } else {
        throw std::runtime_error("measurement change needs value, variance or status");
    }
    return edit;
}

}  // namespace

QssScript parse_qss_script(const json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("qss script schema_version mismatch (expected 1)");
    QssScript script;
    for (const auto& js : j.at("steps")) {
        QssStep step;
        if (js.contains("changes"))
            for (const auto& c : js.at("changes")) step.changes.push_back(parse_change(c));
        if (js.contains("measurement_changes"))
            for (const auto& e : js.at("measurement_changes"))
                step.measurement_edits.push_back(parse_edit(e));
        if (js.contains("analyses"))
            for (const auto& a : js.at("analyses"))
                step.analyses.push_back(a.get<std::string>());
        script.steps.push_back(std::move(step));
    }
    return script;
}

QssScript parse_qss_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script " + path);
    json j;
    in >> j;
    return parse_qss_script(j);
}

QssRunner::QssRunner(NetworkModel& net, MeasurementSet* measurements)
    : net_(net), meas_(measurements) {}

json QssRunner::run_step(const QssStep& step, int index) {
    for (const auto& c : step.changes) net_.apply(c);
    for (const auto& e : step.measurement_edits) {
        if (!meas_) throw std::runtime_error("script edits measurements but none were loaded");
        switch (e.what) {
            case MeasurementEdit::What::Value: meas_->update_value(e.id, e.value); break;
            case MeasurementEdit::What::Variance: meas_->update_variance(e.id, e.value); break;
            case MeasurementEdit::What::Status: meas_->set_status(e.id, e.in_service); break;
        }
    }

    json analyses = json::object();
    for (const auto& name : step.analyses) {
        if (name == "dcpf") {
            const auto r = dc_.solve(net_);
            analyses[name] = to_json(r, net_);
            if (!r.success) throw std::runtime_error("dcpf failed: " + r.error);
        } else if (name == "pf_nr" || name == "pf_fdxb" || name == "pf_fdbx" || name == "pf_gs") {
            PowerFlowOptions opts;
            opts.start = ac_.has_previous() ? StartMode::Warm : StartMode::FromFile;
            PowerFlowResult r;
            if (name == "pf_nr") r = ac_.solve_newton_raphson(net_, opts);
            else if (name == "pf_fdxb") r = ac_.solve_fast_decoupled(net_, FdVariant::XB, opts);
            else if (name == "pf_fdbx") r = ac_.solve_fast_decoupled(net_, FdVariant::BX, opts);
            else r = ac_.solve_gauss_seidel(net_, opts);
            analyses[name] = to_json(r, net_);
            if (!r.converged) throw std::runtime_error(name + " failed: " + r.error);
        } else if (name == "se_ac_wls" || name == "se_dc_wls" || name == "se_pmu_wls") {
            if (!meas_) throw std::runtime_error(name + " needs a measurement set");
            std::optional<EstimationModel>* slot = &se_ac_;
            EstimationModelKind kind = EstimationModelKind::AcNonlinear;
            if (name == "se_dc_wls") {
                slot = &se_dc_;
                kind = EstimationModelKind::Dc;
            } else if (name == "se_pmu_wls") {
                slot = &se_pmu_;
                kind = EstimationModelKind::PmuLinear;
            }
            const bool fresh = !slot->has_value();
            if (fresh) slot->emplace(net_, *meas_, kind);
            EstimationOptions opts;
            opts.start = fresh ? EstimationStart::Flat : EstimationStart::Warm;
            const auto r = (*slot)->solve(opts);
            analyses[name] = to_json(r, net_);
            if (!r.converged) throw std::runtime_error(name + " failed: " + r.error);
        } else {
            throw std::runtime_error("unknown analysis '" + name + "'");
        }
    }

    json out;
    out["step"] = index;
    out["changes_applied"] = step.changes.size() + step.measurement_edits.size();
    out["analyses"] = std::move(analyses);
    return out;
}

QssRunOutcome QssRunner::run_script(const QssScript& script) {
    QssRunOutcome outcome;
    for (size_t i = 0; i < script.steps.size(); ++i) {
        try {
            outcome.step_reports.push_back(run_step(script.steps[i], static_cast<int>(i)));
        } catch (const std::exception& e) {
            outcome.error = "step " + std::to_string(i) + ": " + e.what();
            outcome.error_step = static_cast<int>(i);
            break;
        }
    }
    return outcome;
}

}  // namespace gridstate
