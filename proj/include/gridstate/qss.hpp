#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridstate/report.hpp"

namespace gridstate {

struct MeasurementEdit {
    enum class What { Value, Variance, Status };
    What what = What::Value;
    std::string id;
    double value = 0.0;
    bool in_service = true;
};

struct QssStep {
    std::vector<ComponentChange> changes;
    std::vector<MeasurementEdit> measurement_edits;
    std::vector<std::string> analyses;
};

struct QssScript {
    std::vector<QssStep> steps;
};

/// Script schema: {"schema_version": 1, "steps": [{"changes": [...],
/// "measurement_changes": [...], "analyses": ["dcpf", ...]}]}.
/// Branch and generator references are 1-based in scripts.
QssScript parse_qss_script(const json& j);
QssScript parse_qss_script_file(const std::string& path);

struct QssRunOutcome {
    std::vector<json> step_reports;
    std::string error;
    int error_step = -1;
};

/// Sequences timed change lists over the network and measurement models,
/// invoking the requested analyses with persistent solver sessions so every
/// step reuses matrices, factorization patterns, numeric factors and warm
/// starts whenever the accumulated dirty revisions allow. Results are
/// independent of the reuse decisions.
class QssRunner {
public:
    QssRunner(NetworkModel& net, MeasurementSet* measurements);
    json run_step(const QssStep& step, int index);
    QssRunOutcome run_script(const QssScript& script);

private:
    NetworkModel& net_;
    MeasurementSet* meas_;
    DcPowerFlowSolver dc_;
    AcPowerFlowSolver ac_;
    std::optional<EstimationModel> se_ac_, se_dc_, se_pmu_;
};

}  // namespace gridstate
