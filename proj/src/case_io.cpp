#include "gridstate/case_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gridstate {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('%');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end && *end == '\0' && end != tok.c_str();
}

// Shortest float representation that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

CaseFile parse_matpower(const std::string& text) {
    CaseFile cf;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool saw_base = false;

    auto fail = [&](const std::string& msg) -> ParseError { return ParseError(msg, lineno); };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.rfind("function", 0) == 0) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) cf.name = trim(line.substr(eq + 1));
            continue;
        }
        if (line.rfind("mpc.", 0) != 0) throw fail("unrecognized statement: " + line);

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw fail("expected assignment");
        const std::string field = trim(line.substr(4, eq - 4));
        std::string rhs = trim(line.substr(eq + 1));

        if (field == "version") continue;  // tolerated: '2' in every real file
        if (rhs.find('\'') != std::string::npos || rhs.find('{') != std::string::npos)
            throw fail("string/cell fields are not part of the supported subset: mpc." + field);

        if (rhs.empty()) throw fail("empty assignment for mpc." + field);

        if (rhs[0] != '[') {
            // Scalar assignment.
            if (rhs.back() != ';') throw fail("missing ';' after scalar mpc." + field);
            rhs.pop_back();
            double v;
            if (!parse_number(trim(rhs), v)) throw fail("non-numeric scalar for mpc." + field);
            if (field == "baseMVA") {
                cf.base_mva = v;
                saw_base = true;
            }
            continue;
        }

        // Matrix assignment; may span lines until "];".
        std::string body = rhs.substr(1);
        bool closed = false;
        const int start_line = lineno;
        while (true) {
            const auto close = body.find(']');
            if (close != std::string::npos) {
                body = body.substr(0, close);
                closed = true;
                break;
            }
            std::string next;
            if (!std::getline(in, next)) break;
            ++lineno;
            body += "\n" + strip_comment(next);
        }
        if (!closed) {
            lineno = start_line;
            throw fail("unterminated matrix mpc." + field);
        }

        std::vector<std::vector<double>> table;
        std::string rowbuf;
        auto flush_row = [&](const std::string& rowtext) {
            std::istringstream rs(rowtext);
            std::vector<double> row;
            std::string tok;
            while (rs >> tok) {
                double v;
                if (!parse_number(tok, v))
                    throw fail("non-numeric token '" + tok + "' in mpc." + field);
                row.push_back(v);
            }
            if (!row.empty()) table.push_back(std::move(row));
        };
        for (char c : body) {
            if (c == ';' || c == '\n') {
                flush_row(rowbuf);
                rowbuf.clear();
            } else {
                rowbuf += c;
            }
        }
        flush_row(rowbuf);

        if (field == "bus") cf.bus = std::move(table);
        else if (field == "gen") cf.gen = std::move(table);
        else if (field == "branch") cf.branch = std::move(table);
        else if (field == "gencost") cf.gencost = std::move(table);
        // Other numeric tables are preserved nowhere; they are not part of
        // the model this toolkit builds.
    }

    lineno = 0;
    if (!saw_base) throw fail("missing mpc.baseMVA");
    if (cf.bus.empty()) throw fail("missing mpc.bus table");
    if (cf.branch.empty()) throw fail("missing mpc.branch table");
    if (cf.gen.empty()) throw fail("missing mpc.gen table");
    if (cf.base_mva <= 0.0) throw fail("baseMVA must be positive");
    for (const auto& r : cf.bus)
        if (r.size() < 13) throw fail("bus rows need >= 13 columns");
    for (const auto& r : cf.branch)
        if (r.size() < 13) throw fail("branch rows need >= 13 columns");
    for (const auto& r : cf.gen)
        if (r.size() < 10) throw fail("gen rows need >= 10 columns");
    return cf;
}

CaseFile parse_matpower_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_matpower(ss.str());
}

NetworkModel to_network(const CaseFile& cf) {
    NetworkModel net;
    net.base_mva = cf.base_mva;
    const double s = cf.base_mva;

    // Voltage setpoints of in-service generators pin their bus magnitudes
    // (MATPOWER semantics for PV and slack buses).
    std::unordered_map<int, double> vg;
    for (const auto& r : cf.gen)
        if (r[7] > 0.0 && r[5] > 0.0) vg[static_cast<int>(r[0])] = r[5];

    for (const auto& r : cf.bus) {
        Bus b;
        b.id = static_cast<int>(r[0]);
        const int type = static_cast<int>(r[1]);
        b.kind = type == 3 ? BusKind::Slack : (type == 2 ? BusKind::Pv : BusKind::Pq);
        b.p_load = r[2] / s;
        b.q_load = r[3] / s;
        b.g_shunt = r[4] / s;
        b.b_shunt = r[5] / s;
        b.vm_init = r[7];
        b.va_init = r[8] * kPi / 180.0;
        b.base_kv = r[9] > 0.0 ? r[9] : 1.0;
        if (b.kind != BusKind::Pq) {
            auto it = vg.find(b.id);
            if (it != vg.end()) b.vm_init = it->second;
        }
        net.add_bus(b);
    }
    for (const auto& r : cf.branch) {
        Branch br;
        br.from = static_cast<int>(r[0]);
        br.to = static_cast<int>(r[1]);
        br.r = r[2];
        br.x = r[3];
        br.b_charging = r[4];
        br.rate_a = r[5] / s;
        br.tap = r[8] == 0.0 ? 1.0 : r[8];  // MATPOWER: 0 means nominal
        br.shift = r[9] * kPi / 180.0;
        br.in_service = r[10] != 0.0;
        net.add_branch(br);
    }
    int gi = 0;
    for (const auto& r : cf.gen) {
        Generator g;
        g.bus = static_cast<int>(r[0]);
        g.p = r[1] / s;
        g.q = r[2] / s;
        g.q_max = r[3] / s;
        g.q_min = r[4] / s;
        g.in_service = r[7] > 0.0;
        g.p_max = r[8] / s;
        g.p_min = r[9] / s;
        if (gi < static_cast<int>(cf.gencost.size())) {
            const auto& c = cf.gencost[gi];
            if (c.size() >= 4) {
                const int model = static_cast<int>(c[0]);
                const int ncost = static_cast<int>(c[3]);
                if (model == 2 && static_cast<int>(c.size()) >= 4 + ncost) {
                    g.cost.kind = CostCurve::Kind::LinearPolynomial;
                    g.cost.poly.assign(ncost, 0.0);
                    // MATPOWER stores MW coefficients highest order first.
                    for (int k = 0; k < ncost; ++k)
                        g.cost.poly[k] = c[4 + ncost - 1 - k] * std::pow(s, k);
                } else if (model == 1 && static_cast<int>(c.size()) >= 4 + 2 * ncost) {
                    g.cost.kind = CostCurve::Kind::PiecewiseLinear;
                    g.cost.points.clear();
                    for (int k = 0; k < ncost; ++k)
                        g.cost.points.push_back({c[4 + 2 * k] / s, c[5 + 2 * k]});
                }
            }
        }
        ++gi;
        net.add_generator(g);
    }
    return net;
}

// --------------------------------------------------------------------------
// JSON snapshot
// --------------------------------------------------------------------------

namespace {

using nlohmann::json;

json bus_to_json(const Bus& b) {
    return json{{"id", b.id},
                {"kind", b.kind == BusKind::Slack ? "slack" : (b.kind == BusKind::Pv ? "pv" : "pq")},
                {"vm_init", b.vm_init},
                {"va_init", b.va_init},
                {"p_load", b.p_load},
                {"q_load", b.q_load},
                {"g_shunt", b.g_shunt},
                {"b_shunt", b.b_shunt},
                {"base_kv", b.base_kv}};
}

Bus bus_from_json(const json& j) {
    Bus b;
    b.id = j.at("id").get<int>();
    const std::string k = j.at("kind").get<std::string>();
    b.kind = k == "slack" ? BusKind::Slack : (k == "pv" ? BusKind::Pv : BusKind::Pq);
    b.vm_init = j.at("vm_init").get<double>();
    b.va_init = j.at("va_init").get<double>();
    b.p_load = j.at("p_load").get<double>();
    b.q_load = j.at("q_load").get<double>();
    b.g_shunt = j.at("g_shunt").get<double>();
    b.b_shunt = j.at("b_shunt").get<double>();
    b.base_kv = j.at("base_kv").get<double>();
    return b;
}

json branch_to_json(const Branch& b) {
    return json{{"from", b.from},
                {"to", b.to},
                {"r", b.r},
                {"x", b.x},
                {"g_charging", b.g_charging},
                {"b_charging", b.b_charging},
                {"tap", b.tap},
                {"shift", b.shift},
                {"rate_a", b.rate_a},
                {"in_service", b.in_service}};
}

Branch branch_from_json(const json& j) {
    Branch b;
    b.from = j.at("from").get<int>();
    b.to = j.at("to").get<int>();
    b.r = j.at("r").get<double>();
    b.x = j.at("x").get<double>();
    b.g_charging = j.at("g_charging").get<double>();
    b.b_charging = j.at("b_charging").get<double>();
    b.tap = j.at("tap").get<double>();
    b.shift = j.at("shift").get<double>();
    b.rate_a = j.at("rate_a").get<double>();
    b.in_service = j.at("in_service").get<bool>();
    return b;
}

json cost_to_json(const CostCurve& c) {
    json j;
    j["kind"] = c.kind == CostCurve::Kind::LinearPolynomial ? "poly" : "pwl";
    j["poly"] = c.poly;
    json pts = json::array();
    for (const auto& [p, y] : c.points) pts.push_back(json::array({p, y}));
    j["points"] = pts;
    return j;
}

CostCurve cost_from_json(const json& j) {
    CostCurve c;
    c.kind = j.at("kind").get<std::string>() == "poly" ? CostCurve::Kind::LinearPolynomial
                                                       : CostCurve::Kind::PiecewiseLinear;
    c.poly = j.at("poly").get<std::vector<double>>();
    c.points.clear();
    for (const auto& p : j.at("points")) c.points.push_back({p[0].get<double>(), p[1].get<double>()});
    return c;
}

json gen_to_json(const Generator& g) {
    return json{{"bus", g.bus},     {"p", g.p},
                {"q", g.q},         {"p_min", g.p_min},
                {"p_max", g.p_max}, {"q_min", g.q_min},
                {"q_max", g.q_max}, {"cost", cost_to_json(g.cost)},
                {"in_service", g.in_service}};
}

Generator gen_from_json(const json& j) {
    Generator g;
    g.bus = j.at("bus").get<int>();
    g.p = j.at("p").get<double>();
    g.q = j.at("q").get<double>();
    g.p_min = j.at("p_min").get<double>();
    g.p_max = j.at("p_max").get<double>();
    g.q_min = j.at("q_min").get<double>();
    g.q_max = j.at("q_max").get<double>();
    g.cost = cost_from_json(j.at("cost"));
    g.in_service = j.at("in_service").get<bool>();
    return g;
}

std::string side_name(BranchSide s) {
    return s == BranchSide::From ? "from" : (s == BranchSide::To ? "to" : "-");
}

std::string coords_name(PhasorCoords c) {
    return c == PhasorCoords::Polar ? "polar" : (c == PhasorCoords::Rect ? "rect" : "-");
}

json meas_to_json(const Measurement& m) {
    return json{{"id", m.id},
                {"kind", kind_name(m.kind)},
                {"element", m.element},
                {"side", side_name(m.side)},
                {"value", m.value},
                {"variance", m.variance},
                {"status", m.in_service ? 1 : 0},
                {"coordinates", coords_name(m.coordinates)},
                {"neglect_covariance", m.neglect_covariance}};
}

Measurement meas_from_json(const json& j) {
    Measurement m;
    m.id = j.at("id").get<std::string>();
    const auto k = kind_from_name(j.at("kind").get<std::string>());
    if (!k) throw MeasurementError("unknown measurement kind in snapshot");
    m.kind = *k;
    m.element = j.at("element").get<int>();
    const std::string side = j.at("side").get<std::string>();
    m.side = side == "from" ? BranchSide::From : (side == "to" ? BranchSide::To : BranchSide::None);
    m.value = j.at("value").get<double>();
    m.variance = j.at("variance").get<double>();
    m.in_service = j.at("status").get<int>() != 0;
    const std::string c = j.at("coordinates").get<std::string>();
    m.coordinates =
        c == "polar" ? PhasorCoords::Polar : (c == "rect" ? PhasorCoords::Rect : PhasorCoords::None);
    m.neglect_covariance = j.value("neglect_covariance", true);
    return m;
}

}  // namespace

void snapshot_write(const NetworkModel& network, const MeasurementSet* measurements,
                    const std::string& path) {
    json j;
    j["schema_version"] = 1;
    json net;
    net["base_mva"] = network.base_mva;
    net["buses"] = json::array();
    for (const auto& b : network.buses()) net["buses"].push_back(bus_to_json(b));
    net["branches"] = json::array();
    for (const auto& b : network.branches()) net["branches"].push_back(branch_to_json(b));
    net["generators"] = json::array();
    for (const auto& g : network.generators()) net["generators"].push_back(gen_to_json(g));
    j["network"] = std::move(net);
    if (measurements) {
        json ms = json::array();
        for (const auto& m : measurements->all()) ms.push_back(meas_to_json(m));
        j["measurements"] = std::move(ms);
        j["measurement_seed"] = measurements->generation_seed;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path, 0);
    out << j.dump(1) << "\n";
}

Snapshot snapshot_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed snapshot: ") + e.what(), 0);
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw ParseError("snapshot schema_version mismatch (expected 1)", 0);

    Snapshot snap;
    const json& net = j.at("network");
    snap.network.base_mva = net.at("base_mva").get<double>();
    for (const auto& b : net.at("buses")) snap.network.add_bus(bus_from_json(b));
    for (const auto& b : net.at("branches")) snap.network.add_branch(branch_from_json(b));
    for (const auto& g : net.at("generators")) snap.network.add_generator(gen_from_json(g));
    if (j.contains("measurements")) {
        MeasurementSet set;
        for (const auto& m : j["measurements"]) set.add(meas_from_json(m));
        set.generation_seed = j.value("measurement_seed", uint64_t{0});
        snap.measurements = std::move(set);
    }
    return snap;
}

// --------------------------------------------------------------------------
// Measurement CSV
// --------------------------------------------------------------------------

MeasurementSet read_measurements_csv(const std::string& path, const NetworkModel* network) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    MeasurementSet set;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(t);
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        if (!header_seen) {
            header_seen = true;
            if (cells.size() >= 1 && cells[0] == "id") continue;  // header row
        }
        if (cells.size() != 8)
            throw ParseError("expected 8 comma-separated fields", lineno);

        Measurement m;
        m.id = cells[0];
        const auto kind = kind_from_name(cells[1]);
        if (!kind) throw ParseError("unknown measurement kind '" + cells[1] + "'", lineno);
        m.kind = *kind;
        double ev;
        if (!parse_number(cells[2], ev)) throw ParseError("bad element reference", lineno);
        m.element = static_cast<int>(ev);
        if (cells[3] == "from") m.side = BranchSide::From;
        else if (cells[3] == "to") m.side = BranchSide::To;
        else if (cells[3] == "-") m.side = BranchSide::None;
        else throw ParseError("side must be from, to or -", lineno);
        if (!parse_number(cells[4], m.value)) throw ParseError("bad value", lineno);
        if (!parse_number(cells[5], m.variance)) throw ParseError("bad variance", lineno);
        if (m.variance <= 0.0) throw ParseError("variance must be positive", lineno);
        m.in_service = cells[6] != "0";
        if (cells[7] == "polar") m.coordinates = PhasorCoords::Polar;
        else if (cells[7] == "rect") m.coordinates = PhasorCoords::Rect;
        else if (cells[7] == "-") m.coordinates = PhasorCoords::None;
        else throw ParseError("coordinates must be polar, rect or -", lineno);
        if (kind_is_phasor(m.kind) && m.coordinates == PhasorCoords::None)
            throw ParseError("phasor measurements need coordinates", lineno);
        if (!kind_is_phasor(m.kind) && m.coordinates != PhasorCoords::None)
            throw ParseError("coordinates apply to phasor kinds only", lineno);
        if (kind_is_branch(m.kind) && m.side == BranchSide::None)
            throw ParseError("branch measurements need a side", lineno);

        if (network) {
            if (kind_is_branch(m.kind)) {
                if (m.element < 1 || m.element > network->n_branches())
                    throw ParseError("dangling branch reference " + std::to_string(m.element),
                                     lineno);
            } else {
                try {
                    network->bus_index(m.element);
                } catch (const NetworkError&) {
                    throw ParseError("dangling bus reference " + std::to_string(m.element),
                                     lineno);
                }
            }
        }
        set.add(std::move(m));
    }
    return set;
}

void write_measurements_csv(const MeasurementSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path, 0);
    out << "id,kind,element,side,value,variance,status,coordinates\n";
    for (const auto& m : set.all()) {
        out << m.id << ',' << kind_name(m.kind) << ',' << m.element << ',' << side_name(m.side)
            << ',' << format_double(m.value) << ',' << format_double(m.variance) << ','
            << (m.in_service ? 1 : 0) << ',' << coords_name(m.coordinates) << "\n";
    }
}

}  // namespace gridstate
