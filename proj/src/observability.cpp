#include "gridstate/observability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridstate/qr.hpp"

namespace gridstate {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        // Deterministic: smaller root wins.
        if (b < a) std::swap(a, b);
        parent[b] = a;
        return true;
    }
};

std::vector<std::vector<int>> adjacency(const NetworkModel& net) {
    std::vector<std::vector<int>> adj(net.n_buses());
    for (int b = 0; b < net.n_branches(); ++b) {
        const auto& br = net.branch(b);
        if (!br.in_service) continue;
        adj[net.bus_index(br.from)].push_back(net.bus_index(br.to));
        adj[net.bus_index(br.to)].push_back(net.bus_index(br.from));
    }
    return adj;
}

IslandPartition partition_from_uf(const NetworkModel& net, UnionFind& uf,
                                  IslandPartition::Kind kind, std::vector<int> used) {
    IslandPartition part;
    part.kind = kind;
    part.used_injections = std::move(used);
    const int n = net.n_buses();
    part.island_of.assign(n, -1);
    std::vector<int> root_to_island(n, -1);
    for (int i = 0; i < n; ++i) {
        const int r = uf.find(i);
        if (root_to_island[r] < 0) {
            root_to_island[r] = static_cast<int>(part.islands.size());
            part.islands.emplace_back();
        }
        part.island_of[i] = root_to_island[r];
        part.islands[root_to_island[r]].push_back(i);
    }
    std::vector<char> tie_bus(n, 0);
    for (int b = 0; b < net.n_branches(); ++b) {
        const auto& br = net.branch(b);
        if (!br.in_service) continue;
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        if (part.island_of[f] != part.island_of[t]) {
            part.tie_branches.push_back(b);
            tie_bus[f] = tie_bus[t] = 1;
        }
    }
    for (int i = 0; i < n; ++i)
        if (tie_bus[i]) part.tie_buses.push_back(i);
    return part;
}

// Reduced row of an injection at internal bus `i` over island columns:
// sum over in-service incident branches of e_island(i) - e_island(j).
std::vector<double> reduced_injection_row(const NetworkModel& net,
                                          const std::vector<std::vector<int>>& adj,
                                          const std::vector<int>& island_of, int i,
                                          int n_islands) {
    std::vector<double> row(n_islands, 0.0);
    for (int j : adj[i]) {
        row[island_of[i]] += 1.0;
        row[island_of[j]] -= 1.0;
    }
    return row;
}

bool row_is_zero(const std::vector<double>& row) {
    for (double v : row)
        if (v != 0.0) return false;
    return true;
}

// Null-space basis of a small dense row-major matrix via Gaussian
// elimination with partial pivoting. Rows of the result are basis vectors.
std::vector<std::vector<double>> dense_null_space(std::vector<std::vector<double>> a, int cols,
                                                  double tol = 1e-9) {
    const int rows = static_cast<int>(a.size());
    std::vector<int> pivot_col_of_row;
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int best = -1;
        double best_abs = tol;
        for (int r = rank; r < rows; ++r) {
            if (std::abs(a[r][c]) > best_abs) {
                best_abs = std::abs(a[r][c]);
                best = r;
            }
        }
        if (best < 0) continue;
        std::swap(a[rank], a[best]);
        const double piv = a[rank][c];
        for (int r = 0; r < rows; ++r) {
            if (r == rank || a[r][c] == 0.0) continue;
            const double factor = a[r][c] / piv;
            for (int cc = c; cc < cols; ++cc) a[r][cc] -= factor * a[rank][cc];
        }
        pivot_col_of_row.push_back(c);
        ++rank;
    }
    std::vector<char> is_pivot(cols, 0);
    for (int c : pivot_col_of_row) is_pivot[c] = 1;

    // Full Gauss-Jordan above: each pivot column is zero outside its pivot
    // row, so the basis vector of a free column reads off directly.
    std::vector<std::vector<double>> basis;
    for (int free_c = 0; free_c < cols; ++free_c) {
        if (is_pivot[free_c]) continue;
        std::vector<double> v(cols, 0.0);
        v[free_c] = 1.0;
        for (int r = 0; r < rank; ++r) {
            const int pc = pivot_col_of_row[r];
            v[pc] = -a[r][free_c] / a[r][pc];
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace

IslandPartition find_flow_islands(const NetworkModel& net, const MeasurementSet& meas) {
    const int n = net.n_buses();
    UnionFind uf(n);

    // Branches carrying an in-service active flow measurement bind their
    // endpoint buses into one island.
    for (const auto& m : meas.all()) {
        if (m.kind != MeasurementKind::Pflow || !m.in_service) continue;
        const int b = m.element - 1;
        if (b < 0 || b >= net.n_branches()) continue;
        const auto& br = net.branch(b);
        if (!br.in_service) continue;
        uf.unite(net.bus_index(br.from), net.bus_index(br.to));
    }

    // Boundary injections spanning exactly two islands merge them; iterate
    // to a fixpoint.
    const auto adj = adjacency(net);
    std::vector<int> used;
    const auto injections = meas.of_kind(MeasurementKind::Pinj);
    std::vector<char> consumed(injections.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t t = 0; t < injections.size(); ++t) {
            if (consumed[t]) continue;
            const Measurement& m = meas.at(injections[t]);
            if (!m.in_service) continue;
            const int i = net.bus_index(m.element);
            std::vector<int> touched{uf.find(i)};
            for (int j : adj[i]) {
                const int r = uf.find(j);
                if (std::find(touched.begin(), touched.end(), r) == touched.end())
                    touched.push_back(r);
            }
            if (touched.size() == 2) {
                uf.unite(touched[0], touched[1]);
                consumed[t] = 1;
                used.push_back(injections[t]);
                changed = true;
            }
        }
    }
    return partition_from_uf(net, uf, IslandPartition::Kind::Flow, std::move(used));
}

IslandPartition find_maximal_islands(const NetworkModel& net, const MeasurementSet& meas) {
    IslandPartition part = find_flow_islands(net, meas);
    const auto adj = adjacency(net);
    const auto injections = meas.of_kind(MeasurementKind::Pinj);
    std::vector<int> used = part.used_injections;

    UnionFind uf(net.n_buses());
    for (int isl = 0; isl < part.size(); ++isl)
        for (size_t k = 1; k < part.islands[isl].size(); ++k)
            uf.unite(part.islands[isl][0], part.islands[isl][k]);

    bool changed = true;
    while (changed) {
        changed = false;
        IslandPartition current =
            partition_from_uf(net, uf, IslandPartition::Kind::Maximal, used);
        const int s = current.size();
        if (s == 1) break;

        // Reduced rows of the unused in-service injections; internal rows
        // are consumed on the spot.
        std::vector<std::vector<double>> w;
        for (int idx : injections) {
            if (std::find(used.begin(), used.end(), idx) != used.end()) continue;
            const Measurement& m = meas.at(idx);
            if (!m.in_service) continue;
            auto row = reduced_injection_row(net, adj, current.island_of, net.bus_index(m.element),
                                             s);
            if (row_is_zero(row)) {
                used.push_back(idx);
                continue;
            }
            w.push_back(std::move(row));
        }
        if (w.empty()) break;

        // Islands whose entries agree across the whole null space of W have
        // pinned angle differences and may merge (restricted to groups that
        // are connected through the network).
        const auto basis = dense_null_space(w, s);
        UnionFind groups(s);
        for (int a = 0; a < s; ++a) {
            for (int b = a + 1; b < s; ++b) {
                bool equal = true;
                for (const auto& v : basis)
                    if (std::abs(v[a] - v[b]) > 1e-9) {
                        equal = false;
                        break;
                    }
                if (equal) groups.unite(a, b);
            }
        }
        // Connectivity refinement: only merge islands joined by a branch
        // whose endpoints fall in the same group.
        for (int b = 0; b < net.n_branches(); ++b) {
            const auto& br = net.branch(b);
            if (!br.in_service) continue;
            const int ia = current.island_of[net.bus_index(br.from)];
            const int ib = current.island_of[net.bus_index(br.to)];
            if (ia == ib) continue;
            if (groups.find(ia) == groups.find(ib)) {
                uf.unite(net.bus_index(br.from), net.bus_index(br.to));
                changed = true;
            }
        }
    }

    IslandPartition out = partition_from_uf(net, uf, IslandPartition::Kind::Maximal, used);
    // Consume injections that ended up internal to the final islands.
    for (int idx : injections) {
        if (std::find(out.used_injections.begin(), out.used_injections.end(), idx) !=
            out.used_injections.end())
            continue;
        const Measurement& m = meas.at(idx);
        if (!m.in_service) continue;
        const auto row = reduced_injection_row(net, adj, out.island_of,
                                               net.bus_index(m.element), out.size());
        if (row_is_zero(row)) out.used_injections.push_back(idx);
    }
    return out;
}

RestorationResult restore_observability(const NetworkModel& net, const MeasurementSet& meas,
                                        const IslandPartition& partition,
                                        const std::vector<PseudoMeasurement>& pseudo,
                                        double epsilon_rel) {
    const int s = partition.size();
    const auto adj = adjacency(net);
    RestorationResult res;

    // Retained rows: unused in-service tie injections, in-service angle
    // phasors, and the slack-bus angle reference.
    std::vector<std::vector<double>> h;
    for (int idx : meas.of_kind(MeasurementKind::Pinj)) {
        const Measurement& m = meas.at(idx);
        if (!m.in_service) continue;
        if (std::find(partition.used_injections.begin(), partition.used_injections.end(), idx) !=
            partition.used_injections.end())
            continue;
        auto row = reduced_injection_row(net, adj, partition.island_of,
                                         net.bus_index(m.element), s);
        if (!row_is_zero(row)) h.push_back(std::move(row));
    }
    for (int idx : meas.of_kind(MeasurementKind::VphasorAng)) {
        const Measurement& m = meas.at(idx);
        if (!m.in_service) continue;
        std::vector<double> row(s, 0.0);
        row[partition.island_of[net.bus_index(m.element)]] = 1.0;
        h.push_back(std::move(row));
    }
    {
        std::vector<double> slack_row(s, 0.0);
        slack_row[partition.island_of[net.slack_index()]] = 1.0;
        h.push_back(std::move(slack_row));
    }
    const int r = static_cast<int>(h.size());

    // Pseudo rows in candidate order.
    for (const auto& p : pseudo) {
        std::vector<double> row(s, 0.0);
        switch (p.kind) {
            case MeasurementKind::Pflow: {
                const int b = p.element - 1;
                const auto& br = net.branch(b);
                row[partition.island_of[net.bus_index(br.from)]] += 1.0;
                row[partition.island_of[net.bus_index(br.to)]] -= 1.0;
                break;
            }
            case MeasurementKind::Pinj:
                row = reduced_injection_row(net, adj, partition.island_of,
                                            net.bus_index(p.element), s);
                break;
            case MeasurementKind::VphasorAng:
                row[partition.island_of[net.bus_index(p.element)]] = 1.0;
                break;
            default:
                throw MeasurementError(
                    "restoration candidates are active flows, injections or angles");
        }
        h.push_back(std::move(row));
    }
    const int total = static_cast<int>(h.size());

    // Gram matrix D = H H^T, factored by QR; a nonzero pivot in a pseudo row
    // certifies linear independence from everything stacked above it.
    SparseBuilder<double> db(total, total);
    for (int i = 0; i < total; ++i)
        for (int j = 0; j < total; ++j) {
            double dot = 0.0;
            for (int c = 0; c < s; ++c) dot += h[i][c] * h[j][c];
            if (dot != 0.0) db.add(i, j, dot);
        }
    QrFactorization qr;
    qr.factor(db.compress());
    res.r_diagonal = qr.r_diagonal();
    double r_max = 0.0;
    for (double d : res.r_diagonal) r_max = std::max(r_max, d);
    res.pivot_threshold = epsilon_rel * r_max;
    for (int i = r; i < total; ++i)
        if (res.r_diagonal[i] >= res.pivot_threshold) res.selected.push_back(i - r);

    // Observability check: retained plus selected rows must span all s
    // island angles (the slack reference supplies the absolute angle).
    std::vector<std::vector<double>> stacked(h.begin(), h.begin() + r);
    for (int idx : res.selected) stacked.push_back(h[r + idx]);
    const auto basis = dense_null_space(stacked, s);
    res.observable_after = basis.empty();
    if (!res.observable_after) {
        UnionFind groups(s);
        for (int a = 0; a < s; ++a)
            for (int b = a + 1; b < s; ++b) {
                bool equal = true;
                for (const auto& v : basis)
                    if (std::abs(v[a] - v[b]) > 1e-9) {
                        equal = false;
                        break;
                    }
                if (equal) groups.unite(a, b);
            }
        std::vector<std::vector<int>> by_root(s);
        for (int a = 0; a < s; ++a) by_root[groups.find(a)].push_back(a);
        for (auto& g : by_root)
            if (!g.empty()) res.remaining_groups.push_back(std::move(g));
    }
    return res;
}

void transfer_pseudos(MeasurementSet& set, const std::vector<PseudoMeasurement>& pseudo,
                      const std::vector<int>& selected) {
    int counter = 0;
    for (int idx : selected) {
        const auto& p = pseudo[idx];
        Measurement m;
        m.id = "pseudo" + std::to_string(++counter);
        m.kind = p.kind;
        m.element = p.element;
        m.side = p.kind == MeasurementKind::Pflow ? p.side : BranchSide::None;
        m.value = p.value;
        m.variance = p.variance;
        m.coordinates = p.kind == MeasurementKind::VphasorAng ? PhasorCoords::Polar
                                                              : PhasorCoords::None;
        set.add(std::move(m));
    }
}

PmuPlacementResult place_pmus(NetworkModel& net, const MeasurementSet* legacy,
                              const IlpOptions& opts) {
    PmuPlacementResult res;
    const AcModel& ac = net.ac();
    const int n = net.n_buses();

    // Binary connectivity from the admittance pattern (numeric nonzeros).
    std::vector<std::vector<int>> a(n);
    for (int j = 0; j < n; ++j) {
        a[j].push_back(j);
        for (int p = ac.ybus.col_ptr[j]; p < ac.ybus.col_ptr[j + 1]; ++p) {
            const int i = ac.ybus.row_idx[p];
            if (i != j && std::abs(ac.ybus.values[p]) > 0.0) a[j].push_back(i);
        }
        std::sort(a[j].begin(), a[j].end());
        a[j].erase(std::unique(a[j].begin(), a[j].end()), a[j].end());
    }

    LinearProgram lp;
    for (int i = 0; i < n; ++i) lp.add_var(0.0, 1.0, 1.0, true);

    if (!legacy) {
        for (int i = 0; i < n; ++i)
            lp.add_row(RowSense::GreaterEqual, 1.0, a[i],
                       std::vector<double>(a[i].size(), 1.0),
                       "cover(" + std::to_string(net.bus(i).id) + ")");
    } else {
        // Extended formulation: per-bus coverage rows coupled through the
        // legacy flow/injection incidence.
        std::vector<int> injection_at(n, 0);
        std::vector<int> flow_partner(n, -1);
        for (const auto& m : legacy->all()) {
            if (!m.in_service) continue;
            if (m.kind == MeasurementKind::Pinj) injection_at[net.bus_index(m.element)] = 1;
            if (m.kind == MeasurementKind::Pflow) {
                const int b = m.element - 1;
                if (b < 0 || b >= net.n_branches()) continue;
                const auto& br = net.branch(b);
                if (!br.in_service) continue;
                const int end = m.side == BranchSide::From ? net.bus_index(br.from)
                                                            : net.bus_index(br.to);
                const int other = m.side == BranchSide::From ? net.bus_index(br.to)
                                                             : net.bus_index(br.from);
                if (flow_partner[end] < 0) flow_partner[end] = other;
            }
        }
        for (int i = 0; i < n; ++i) {
            // c-set of buses whose coverage counts, and the right-hand side.
            std::vector<int> cset{i};
            double b_i = 1.0;
            if (injection_at[i]) {
                for (int j : a[i])
                    if (j != i) cset.push_back(j);
                b_i = static_cast<double>(cset.size() - 1);  // |N_i|
            } else if (flow_partner[i] >= 0) {
                cset.push_back(flow_partner[i]);
            }
            // Coefficient of d_k: number of c-set buses adjacent to k.
            std::vector<double> coef(n, 0.0);
            for (int j : cset)
                for (int k : a[j]) coef[k] += 1.0;
            std::vector<int> idx;
            std::vector<double> val;
            for (int k = 0; k < n; ++k)
                if (coef[k] != 0.0) {
                    idx.push_back(k);
                    val.push_back(coef[k]);
                }
            lp.add_row(RowSense::GreaterEqual, b_i, idx, val,
                       "legacy-cover(" + std::to_string(net.bus(i).id) + ")");
        }
    }

    const IlpSolution sol = solve_binary_ilp(lp, opts);
    res.nodes = sol.nodes;
    if (sol.status == IlpStatus::NodeBudget) {
        res.error = "placement ILP exceeded the node budget";
        return res;
    }
    if (sol.status == IlpStatus::Infeasible) {
        res.error = "placement ILP infeasible";
        return res;
    }
    res.optimal = true;
    for (int i = 0; i < n; ++i)
        if (sol.x[i] > 0.5) res.buses.push_back(net.bus(i).id);
    std::sort(res.buses.begin(), res.buses.end());
    return res;
}

}  // namespace gridstate
