#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridstate/lu.hpp"
#include "gridstate/measurement.hpp"
#include "gridstate/network.hpp"
#include "gridstate/parallel.hpp"
#include "gridstate/power_flow.hpp"

namespace gridstate {

class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

struct RowSpecStorage;  // per-row evaluation dispatch data (internal)

enum class EstimationModelKind { AcNonlinear, PmuLinear, Dc };
enum class SolveMethod { NormalEquations, Orthogonal, PetersWilkinson, Lav };
enum class EstimationStart { Flat, FromNetwork, Warm };

struct EstimationOptions {
    SolveMethod method = SolveMethod::NormalEquations;
    double tolerance = 1e-8;  // infinity norm of the state increment
    int max_iterations = 50;
    EstimationStart start = EstimationStart::Flat;
    ExecPolicy exec = ExecPolicy::Auto;
};

struct EstimationModelOptions {
    // Force covariance neglect on every rectangular phasor pair, regardless
    // of the per-measurement flag.
    std::optional<bool> neglect_covariance_override;
};

struct EstimationResult {
    bool converged = false;
    int iterations = 0;
    std::vector<IterationRecord> trace;
    std::vector<double> state;
    std::vector<double> vm, va;       // bus view of the state (vm = 1 for DC)
    std::vector<double> residuals;    // per row, 0 for inactive rows
    double objective = 0.0;           // weighted SSE, or sum |r| for LAV
    int k_rows = 0, m_states = 0;
    ReuseEvents reuse;
    std::string error;
    std::vector<std::string> deficient_columns;  // on rank deficiency
};

/// One measurement row of the estimation model (phasor pairs expand to two
/// rows; the pairing and coordinate treatment are resolved at build time).
struct ModelRow {
    int measurement = -1;   // index into the MeasurementSet
    int component = 0;      // 0: scalar/Re/mag, 1: Im/ang
    double z = 0.0;
    double c = 0.0;         // constant term (DC rows)
};

/// Measurement model bound to a network: state indexing, measurement
/// functions, Jacobian/coefficient rows, block-diagonal covariance with
/// precomputed inverses, and the cached gain matrix factorization.
///
/// The gain pattern is fixed when the model is built; row removals mask
/// rows and refactor in place, measurement edits are pulled in through
/// sync_measurements() without rebuilding structure.
class EstimationModel {
public:
    EstimationModel(NetworkModel& net, const MeasurementSet& set, EstimationModelKind kind,
                    const EstimationModelOptions& opts = {});

    EstimationResult solve(const EstimationOptions& opts = {});

    EstimationModelKind kind() const { return kind_; }
    int k_rows() const { return static_cast<int>(rows_.size()); }
    int active_rows() const;
    int m_states() const { return m_states_; }
    int skipped_measurements() const { return skipped_; }

    const std::vector<ModelRow>& rows() const { return rows_; }
    const RowMatrix& jacobian() const { return jac_; }
    const std::vector<double>& residuals() const { return residuals_; }
    const std::vector<uint8_t>& active() const { return active_; }
    double sigma_diag(int row) const;
    LuFactorization& gain_factor() { return gain_lu_; }
    const std::vector<double>& state() const { return x_; }
    std::string row_label(int row) const;
    std::string state_label(int col) const;

    /// Masks a row out of the model (pattern retained). The next solve
    /// refactors the gain in place.
    void deactivate_row(int row);

    /// Assembles and factors the gain at the current Jacobian values, so
    /// the residual-covariance computation sees G at the solved state.
    void refresh_gain();

    /// Pulls value/variance/status changes from the measurement set into
    /// the built model. Structure changes (added measurements) rebuild.
    void sync_measurements();

    /// Exposed for covariance-locality tests: per-block inverse storage.
    const std::vector<std::array<double, 4>>& block_inverses() const { return block_inv_; }

    /// Evaluate h(x) and the Jacobian rows at the given state (row-parallel
    /// kernel with a serial reference; both produce identical results).
    void evaluate(const std::vector<double>& x, ExecPolicy policy);
    void evaluate_serial(const std::vector<double>& x) { evaluate(x, ExecPolicy::Serial); }
    const std::vector<double>& h_values() const { return h_; }

    std::vector<double> bus_vm(const std::vector<double>& x) const;
    std::vector<double> bus_va(const std::vector<double>& x) const;

private:
    struct SigmaBlock {
        int row0 = -1, row1 = -1;  // row1 = -1 for scalar blocks
        // covariance entries: c00, c01, c11 (c01 unused for scalar)
        double c00 = 0.0, c01 = 0.0, c11 = 0.0;
    };

    void build_rows(const MeasurementSet& set);
    void build_state_indexing();
    void build_gain_pattern();
    void refresh_block_inverses();
    void assemble_gain_and_rhs(std::vector<double>& rhs_out, bool with_rhs);
    std::vector<double> start_state(EstimationStart start) const;
    std::vector<double> weighted_ls_step(const EstimationOptions& opts,
                                         EstimationResult& res_flags);
    std::vector<double> lav_step(double& objective);
    void eval_row(int row, const std::vector<double>& x);

    NetworkModel& net_;
    const MeasurementSet& set_;
    EstimationModelKind kind_;
    EstimationModelOptions opts_;

    int slack_ = -1;
    int m_states_ = 0;
    std::vector<int> angle_col_, vm_col_;  // nonlinear/dc indexing
    int skipped_ = 0;

    std::vector<ModelRow> rows_;
    std::vector<uint8_t> active_;
    std::vector<SigmaBlock> blocks_;
    std::vector<int> row_block_;  // row -> block index
    std::vector<std::array<double, 4>> block_inv_;   // [i00,i01,i10,i11] or [1/v,0,0,0]
    std::vector<std::array<double, 4>> block_isqrt_; // inverse square roots

    RowMatrix jac_;
    std::vector<double> h_;
    std::vector<double> residuals_;
    std::vector<double> x_;

    SparseMatrix<double> gain_;
    std::vector<std::vector<int>> block_gain_slots_;  // per block: slot list
    LuFactorization gain_lu_;
    bool gain_pattern_built_ = false;
    bool gain_factored_ = false;
    bool gain_values_dirty_ = true;

    uint64_t seen_value_rev_ = 0, seen_variance_rev_ = 0, seen_status_rev_ = 0,
             seen_structure_rev_ = 0;
    uint64_t ac_pattern_rev_seen_ = 0;
    bool warm_available_ = false;
    bool structure_rebuilt_flag_ = false;
    std::shared_ptr<RowSpecStorage> spec_;
};

}  // namespace gridstate
