#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridstate/network.hpp"

namespace gridstate {

class MeasurementError : public std::runtime_error {
public:
    explicit MeasurementError(const std::string& what) : std::runtime_error(what) {}
};

enum class MeasurementKind : uint8_t {
    Vmag,
    Pinj,
    Qinj,
    Pflow,
    Qflow,
    Imag,
    VphasorMag,
    VphasorAng,
    IphasorMag,
    IphasorAng,
};

enum class BranchSide : uint8_t { From, To, None };
enum class PhasorCoords : uint8_t { Polar, Rect, None };

bool kind_is_phasor(MeasurementKind k);
bool kind_is_branch(MeasurementKind k);
bool kind_is_angle(MeasurementKind k);
std::string kind_name(MeasurementKind k);
std::optional<MeasurementKind> kind_from_name(const std::string& name);

struct Measurement {
    std::string id;
    MeasurementKind kind = MeasurementKind::Vmag;
    int element = 0;  // bus id for bus kinds, 1-based branch number otherwise
    BranchSide side = BranchSide::None;
    double value = 0.0;
    double variance = 1e-4;
    bool in_service = true;
    PhasorCoords coordinates = PhasorCoords::None;
    bool neglect_covariance = true;  // rectangular phasor pairs only
};

/// First-order polar -> rectangular propagation of a phasor measurement.
struct RectangularPhasor {
    double re = 0.0, im = 0.0;
    // Covariance [var_re, cov; cov, var_im]
    double var_re = 0.0, var_im = 0.0, cov = 0.0;
};
RectangularPhasor phasor_to_rectangular(double mag, double ang, double var_mag, double var_ang);

/// Ordered measurement collection with id lookup and revision counters the
/// estimation models key their reuse decisions on.
class MeasurementSet {
public:
    int add(Measurement m);
    int size() const { return static_cast<int>(list_.size()); }
    const Measurement& at(int i) const { return list_[i]; }
    const std::vector<Measurement>& all() const { return list_; }
    int index_of(const std::string& id) const;

    std::vector<int> of_kind(MeasurementKind k) const;

    void update_value(const std::string& id, double value);
    void update_variance(const std::string& id, double variance);
    void set_status(const std::string& id, bool in_service);
    void set_status_index(int index, bool in_service);
    /// Rewrites the coordinate treatment of every phasor measurement; a
    /// structural change, since it alters how models are built.
    void force_phasor_coordinates(PhasorCoords coords);

    uint64_t value_rev() const { return value_rev_; }
    uint64_t variance_rev() const { return variance_rev_; }
    uint64_t status_rev() const { return status_rev_; }
    uint64_t structure_rev() const { return structure_rev_; }

    uint64_t generation_seed = 0;

private:
    std::vector<Measurement> list_;
    std::unordered_map<std::string, int> by_id_;
    uint64_t value_rev_ = 0, variance_rev_ = 0, status_rev_ = 0, structure_rev_ = 0;
};

/// Which measurements a generated set contains. Mirrors the usual SCADA
/// deployment: voltage magnitude everywhere, P/Q flows at every from side,
/// the rest sampled independently with the given probabilities.
struct MeasurementTemplate {
    bool vmag_all = true;
    bool flow_from_all = true;    // P and Q from-side flows on every branch
    double p_injection = 0.5;     // P/Q injection pair per bus
    double p_flow_to = 0.5;       // P/Q to-side flow pair per branch
    double p_imag = 0.0;          // branch current magnitude
    double p_vphasor = 0.0;       // bus voltage phasor (mag+ang pair)
    double p_iphasor = 0.0;       // branch current phasor, from side
    double var_legacy = 1e-4;
    double var_phasor = 1e-6;
    PhasorCoords phasor_coords = PhasorCoords::Rect;
    bool neglect_covariance = true;
    bool exact = false;  // no noise: z equals the solved value
};

struct SolvedState {
    std::vector<double> vm;  // per-unit
    std::vector<double> va;  // radians
};

/// Artificial measurement generation from a solved AC state: exact values
/// from the branch admittance blocks plus seeded white Gaussian noise.
MeasurementSet generate_from_solution(NetworkModel& network, const SolvedState& solution,
                                      const MeasurementTemplate& tmpl, uint64_t seed);

/// DC variant: active flows/injections and angle phasors from a DC solution.
struct DcMeasurementTemplate {
    bool flow_from_all = true;
    bool flow_to_all = false;
    double p_injection = 1.0;
    double p_angle_phasor = 0.0;
    double var_flow = 1e-4;
    double var_angle = 1e-6;
    bool exact = false;
};
MeasurementSet generate_from_dc_solution(NetworkModel& network, const std::vector<double>& theta,
                                         const DcMeasurementTemplate& tmpl, uint64_t seed);

struct AvailabilityPolicy {
    // Kinds the policy applies to; empty = the entire set.
    std::vector<MeasurementKind> kinds;
    int in_service_count = 0;
};

/// Puts exactly `in_service_count` uniformly chosen measurements of the
/// subset in service and the rest of the subset out of service.
void randomize_availability(MeasurementSet& set, const AvailabilityPolicy& policy, uint64_t seed);

}  // namespace gridstate
