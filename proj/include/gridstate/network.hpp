#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gridstate/sparse.hpp"

namespace gridstate {

class NetworkError : public std::runtime_error {
public:
    explicit NetworkError(const std::string& what) : std::runtime_error(what) {}
};

enum class BusKind : uint8_t { Slack, Pq, Pv };

struct Bus {
    int id = 0;  // external label
    BusKind kind = BusKind::Pq;
    double vm_init = 1.0;  // per-unit
    double va_init = 0.0;  // radians
    double p_load = 0.0, q_load = 0.0;
    double g_shunt = 0.0, b_shunt = 0.0;  // per-unit at V = 1
    double base_kv = 1.0;
};

/// Unified two-port pi model: series impedance r + jx, total charging
/// admittance g_c + j b_c split half per side, complex turns ratio
/// tau * e^{j shift} with the tap on the from (primary) side.
struct Branch {
    int from = 0, to = 0;  // external bus ids
    double r = 0.0, x = 0.0;
    double g_charging = 0.0, b_charging = 0.0;
    double tap = 1.0;
    double shift = 0.0;  // radians
    double rate_a = 0.0;  // flow limit, per-unit; 0 = unlimited
    bool in_service = true;
};

struct CostCurve {
    enum class Kind : uint8_t { LinearPolynomial, PiecewiseLinear };
    Kind kind = Kind::LinearPolynomial;
    // Polynomial coefficients in ascending order over per-unit power.
    std::vector<double> poly{0.0, 0.0};
    // Piecewise breakpoints (power pu, cost/hr), strictly increasing power.
    std::vector<std::pair<double, double>> points;

    bool is_polynomial_linear() const {
        for (size_t k = 2; k < poly.size(); ++k)
            if (poly[k] != 0.0) return false;
        return true;
    }
    void validate() const;
};

struct Generator {
    int bus = 0;  // external bus id
    double p = 0.0, q = 0.0;
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    CostCurve cost;
    bool in_service = true;
};

/// Per-branch 2x2 admittance block of the unified model:
///   [I_f]   [yff yft] [V_f]
///   [I_t] = [ytf ytt] [V_t]
struct BranchAdmittance {
    cdouble yff{}, yft{}, ytf{}, ytt{};
};

struct AcModel {
    SparseMatrix<cdouble> ybus;
    std::vector<BranchAdmittance> blocks;      // zeroed when out of service
    std::vector<std::array<int, 4>> slots;     // per branch: ff ft tf tt value slots
    std::vector<int> diag_slot;                // per bus
    // Transpose (row) view sharing value storage through slot indirection.
    std::vector<int> row_ptr, row_col, row_slot;
    uint64_t value_rev = 0, pattern_rev = 0;
};

struct DcModel {
    SparseMatrix<double> b;                 // susceptance-like matrix from 1/(tau x)
    std::vector<double> branch_susceptance; // per branch, 0 when out of service
    std::vector<std::array<int, 4>> slots;
    std::vector<double> shift_injection;    // per bus, from phase-shift terms
    std::vector<double> shunt_p;            // per bus active shunt conductance
    uint64_t value_rev = 0, pattern_rev = 0;
};

struct PerUnitImpedance {
    double r, x, g, b;
};

/// Ohm/siemens branch parameters to per-unit on the secondary-side voltage
/// base: z_pu = z_ohm * S_base / V_base^2, y_pu = y_S * V_base^2 / S_base.
PerUnitImpedance impedance_to_per_unit(double r_ohm, double x_ohm, double g_siemens,
                                       double b_siemens, double base_mva,
                                       double base_kv_secondary);

// Component change descriptions used by the quasi-steady-state runner and
// the incremental update API.
struct SetLoad {
    int bus_id;
    double p, q;
};
struct ScaleLoad {
    int bus_id;
    double factor;
};
struct ScaleAllLoads {
    double factor;
};
struct SetShunt {
    int bus_id;
    double g, b;
};
struct SetBranchStatus {
    int branch;  // 0-based index
    bool in_service;
};
struct SetBranchParams {
    int branch;
    Branch params;  // from/to must match the existing branch
};
struct SetTap {
    int branch;
    double tap;
};
struct ScaleAllTaps {
    double factor;
};
struct SetGeneratorOutput {
    int generator;
    double p, q;
};
struct SetGeneratorStatus {
    int generator;
    bool in_service;
};
struct AddBranch {
    Branch branch;
};
struct AddGenerator {
    Generator generator;
};
using ComponentChange =
    std::variant<SetLoad, ScaleLoad, ScaleAllLoads, SetShunt, SetBranchStatus, SetBranchParams,
                 SetTap, ScaleAllTaps, SetGeneratorOutput, SetGeneratorStatus, AddBranch,
                 AddGenerator>;

/// Bus/branch network with lazily built, incrementally patched AC and DC
/// matrix models. Value semantics throughout: copies are deep and
/// independent, concurrent read-only sharing is safe, mutation requires
/// exclusive access.
class NetworkModel {
public:
    double base_mva = 100.0;

    int add_bus(const Bus& bus);
    int add_branch(const Branch& br);
    int add_generator(const Generator& gen);

    int n_buses() const { return static_cast<int>(buses_.size()); }
    int n_branches() const { return static_cast<int>(branches_.size()); }
    int n_generators() const { return static_cast<int>(generators_.size()); }

    const Bus& bus(int index) const { return buses_[index]; }
    const Branch& branch(int index) const { return branches_[index]; }
    const Generator& generator(int index) const { return generators_[index]; }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<Generator>& generators() const { return generators_; }

    int bus_index(int id) const;
    int slack_index() const;

    /// Validates the structural invariants; throws NetworkError.
    void validate() const;

    /// Builds (or returns the cached) AC nodal admittance model.
    const AcModel& ac();
    /// Builds (or returns the cached) DC model.
    const DcModel& dc();
    bool has_ac() const { return ac_.has_value(); }
    bool has_dc() const { return dc_.has_value(); }

    uint64_t injection_rev() const { return injection_rev_; }

    /// Specified net active/reactive injection per bus (gen - load), per-unit.
    /// Shunts are not included; analyses account for them separately.
    std::vector<double> specified_p() const;
    std::vector<double> specified_q() const;

    /// Buses of each connected component over in-service branches.
    std::vector<std::vector<int>> connected_components() const;

    /// Incremental update entry point: patches the built matrix models in
    /// place (subtract old contribution, add new) and bumps the dirty
    /// revision counters that solvers key their reuse decisions on.
    void apply(const ComponentChange& change);

    // Typed update helpers (all route through the same patching logic).
    void set_load(int bus_id, double p, double q);
    void set_shunt(int bus_id, double g, double b);
    void set_branch_status(int branch, bool in_service);
    void set_branch_params(int branch, const Branch& params);
    void set_generator_output(int generator, double p, double q);
    void set_generator_status(int generator, bool in_service);
    int add_branch_live(const Branch& br);
    int add_generator_live(const Generator& gen);

private:
    void build_ac();
    void build_dc();
    BranchAdmittance branch_block(const Branch& br) const;
    void patch_branch_ac(int index, const BranchAdmittance& old_block);
    void patch_branch_dc(int index, double old_b, double old_shift_f, double old_shift_t);
    void rebuild_row_view();

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    std::unordered_map<int, int> bus_index_;
    std::optional<AcModel> ac_;
    std::optional<DcModel> dc_;
    uint64_t injection_rev_ = 0;
};

}  // namespace gridstate
