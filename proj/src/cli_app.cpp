#include "gridstate/cli_app.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "gridstate/case_io.hpp"
#include "gridstate/kernels.hpp"
#include "gridstate/qss.hpp"
#include "gridstate/synthetic.hpp"

namespace gridstate {

namespace {

int log_level() {
    const char* env = std::getenv("GRIDSTATE_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[gridstate] " << msg << "\n";
}

NetworkModel load_network(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        return snapshot_read(path).network;
    return to_network(parse_matpower_file(path));
}

void emit(const json& report, const std::string& report_path) {
    if (!report_path.empty()) {
        write_report(report, report_path);
        log_info("report written to " + report_path);
    } else {
        std::cout << report.dump(1) << "\n";
    }
}

void print_pf_summary(const PowerFlowResult& r, const NetworkModel& net) {
    if (log_level() == 0) return;
    if (!r.converged) {
        std::cout << "power flow failed: " << r.error << "\n";
        return;
    }
    std::cout << "converged in " << r.iterations << " iterations, max mismatch "
              << r.max_mismatch << "\n";
    std::cout << "bus      vm [pu]     va [deg]\n";
    for (int i = 0; i < net.n_buses() && i < 20; ++i)
        printf("%-6d %10.5f %12.5f\n", net.bus(i).id, r.vm[i], r.va[i] * 57.29577951308232);
    if (net.n_buses() > 20) std::cout << "... (" << net.n_buses() << " buses)\n";
}

MeasurementKind parse_kind_or_throw(const std::string& s) {
    auto k = kind_from_name(s);
    if (!k) throw CLI::ValidationError("unknown measurement kind " + s);
    return *k;
}

struct PseudoCandidates {
    std::vector<PseudoMeasurement> list;
};

// The full restoration candidate set over a partition: flows on tie
// branches, injections at tie buses, one angle per non-slack island.
PseudoCandidates make_pseudo_candidates(const NetworkModel& net, const IslandPartition& part) {
    PseudoCandidates out;
    for (int b : part.tie_branches)
        out.list.push_back({MeasurementKind::Pflow, b + 1, BranchSide::From, 0.0, 1e-2});
    for (int i : part.tie_buses)
        out.list.push_back({MeasurementKind::Pinj, net.bus(i).id, BranchSide::None, 0.0, 1e-2});
    const int slack_island = part.island_of[net.slack_index()];
    for (int isl = 0; isl < part.size(); ++isl) {
        if (isl == slack_island) continue;
        out.list.push_back({MeasurementKind::VphasorAng, net.bus(part.islands[isl][0]).id,
                            BranchSide::None, 0.0, 1e-2});
    }
    return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"gridstate: power system steady-state analysis toolkit"};
    app.require_subcommand(1);

    std::string report_path;
    app.add_option("-o,--report", report_path, "write the report JSON here")->capture_default_str();

    // ---- pf ----------------------------------------------------------------
    auto* pf = app.add_subcommand("pf", "AC power flow");
    std::string pf_case, pf_method = "nr";
    bool pf_flat = false;
    double pf_tol = 1e-8;
    int pf_maxiter = 50;
    pf->add_option("case", pf_case, "MATPOWER case or snapshot JSON")->required();
    pf->add_option("--method", pf_method, "nr | fdxb | fdbx | gs")->capture_default_str();
    pf->add_flag("--flat", pf_flat, "flat start instead of file voltages");
    pf->add_option("--tol", pf_tol, "convergence tolerance")->capture_default_str();
    pf->add_option("--max-iter", pf_maxiter, "iteration limit")->capture_default_str();

    // ---- dcpf --------------------------------------------------------------
    auto* dcpf = app.add_subcommand("dcpf", "DC power flow");
    std::string dcpf_case;
    dcpf->add_option("case", dcpf_case)->required();

    // ---- opf-dc ------------------------------------------------------------
    auto* opf = app.add_subcommand("opf-dc", "DC optimal power flow");
    std::string opf_case;
    bool opf_linearize = false;
    int opf_segments = 8;
    opf->add_option("case", opf_case)->required();
    opf->add_flag("--linearize-quadratic", opf_linearize,
                  "approximate quadratic costs with convex piecewise segments");
    opf->add_option("--segments", opf_segments, "piecewise segments for linearization")
        ->capture_default_str();

    // ---- measure -----------------------------------------------------------
    auto* measure = app.add_subcommand("measure", "generate measurements from a solved case");
    std::string meas_case, meas_out;
    uint64_t meas_seed = 1;
    double p_injection = 0.5, p_flow_to = 0.5, p_vphasor = 0.0, p_iphasor = 0.0;
    double var_legacy = 1e-4, var_phasor = 1e-6;
    bool meas_exact = false, meas_dc = false;
    measure->add_option("case", meas_case)->required();
    measure->add_option("--out", meas_out, "measurement CSV to write")->required();
    measure->add_option("--seed", meas_seed)->capture_default_str();
    measure->add_option("--p-injection", p_injection)->capture_default_str();
    measure->add_option("--p-flow-to", p_flow_to)->capture_default_str();
    measure->add_option("--p-vphasor", p_vphasor)->capture_default_str();
    measure->add_option("--p-iphasor", p_iphasor)->capture_default_str();
    measure->add_option("--variance-legacy", var_legacy)->capture_default_str();
    measure->add_option("--variance-phasor", var_phasor)->capture_default_str();
    measure->add_flag("--exact", meas_exact, "no noise");
    measure->add_flag("--dc", meas_dc, "generate from a DC power flow instead");

    // ---- observe -----------------------------------------------------------
    auto* observe = app.add_subcommand("observe", "observability analysis");
    std::string obs_case, obs_meas, obs_out;
    bool obs_maximal = false, obs_restore = false;
    observe->add_option("case", obs_case)->required();
    observe->add_option("measurements", obs_meas)->required();
    observe->add_flag("--maximal", obs_maximal, "maximal islands instead of flow islands");
    observe->add_flag("--restore", obs_restore, "run Gram restoration over the islands");
    observe->add_option("--out", obs_out, "write the augmented measurement CSV here");

    // ---- pmu-place ---------------------------------------------------------
    auto* pmu = app.add_subcommand("pmu-place", "optimal PMU placement");
    std::string pmu_case, pmu_legacy;
    pmu->add_option("case", pmu_case)->required();
    pmu->add_option("--legacy", pmu_legacy, "existing measurement CSV for the extended model");

    // ---- se ----------------------------------------------------------------
    auto* se = app.add_subcommand("se", "state estimation");
    std::string se_case, se_meas, se_model = "ac", se_method = "wls", se_coords;
    bool se_neglect = false;
    int se_repeat = 1;
    uint64_t se_seed = 1;
    bool se_generate = false;
    se->add_option("case", se_case)->required();
    se->add_option("measurements", se_meas, "measurement CSV (omit with --generate)");
    se->add_option("--model", se_model, "ac | dc | pmu")->capture_default_str();
    se->add_option("--method", se_method, "wls | orthogonal | pw | lav")->capture_default_str();
    se->add_option("--coordinates", se_coords, "force polar|rect treatment of phasors");
    se->add_flag("--neglect-covariance", se_neglect, "drop rectangular phasor covariances");
    se->add_flag("--generate", se_generate, "generate measurements from a power flow first");
    se->add_option("--repeat", se_repeat, "Monte Carlo repetitions (with --generate)")
        ->capture_default_str();
    se->add_option("--seed", se_seed)->capture_default_str();

    // ---- baddata -----------------------------------------------------------
    auto* bad = app.add_subcommand("baddata", "chi-squared + largest normalized residual loop");
    std::string bad_case, bad_meas, bad_model = "ac";
    double bad_threshold = 3.0, bad_confidence = 0.95;
    bool bad_force = false;
    bad->add_option("case", bad_case)->required();
    bad->add_option("measurements", bad_meas)->required();
    bad->add_option("--model", bad_model, "ac | dc | pmu")->capture_default_str();
    bad->add_option("--threshold", bad_threshold, "identification threshold")
        ->capture_default_str();
    bad->add_option("--confidence", bad_confidence)->capture_default_str();
    bad->add_flag("--force-lnr", bad_force, "run LNR even when the chi-squared test passes");

    // ---- qss ---------------------------------------------------------------
    auto* qss = app.add_subcommand("qss", "quasi-steady-state script runner");
    std::string qss_case, qss_script, qss_meas;
    qss->add_option("case", qss_case)->required();
    qss->add_option("--script", qss_script, "JSON change script")->required();
    qss->add_option("--measurements", qss_meas, "measurement CSV");

    // ---- convert -----------------------------------------------------------
    auto* convert = app.add_subcommand("convert", "case file to snapshot JSON");
    std::string conv_case, conv_out, conv_meas;
    convert->add_option("case", conv_case)->required();
    convert->add_option("--out", conv_out, "snapshot path")->required();
    convert->add_option("--measurements", conv_meas, "bundle this measurement CSV");

    // ---- synth -------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "write a synthetic case file");
    int synth_buses = 1000, synth_branches = 0;
    uint64_t synth_seed = 1;
    std::string synth_out;
    synth->add_option("--buses", synth_buses)->capture_default_str();
    synth->add_option("--branches", synth_branches)->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (pf->parsed()) {
            NetworkModel net = load_network(pf_case);
            PowerFlowOptions opts;
            opts.tolerance = pf_tol;
            opts.max_iterations = pf_maxiter;
            opts.start = pf_flat ? StartMode::Flat : StartMode::FromFile;
            PowerFlowResult r;
            if (pf_method == "nr") r = solve_newton_raphson(net, opts);
            else if (pf_method == "fdxb") r = solve_fast_decoupled(net, FdVariant::XB, opts);
            else if (pf_method == "fdbx") r = solve_fast_decoupled(net, FdVariant::BX, opts);
            else if (pf_method == "gs") r = solve_gauss_seidel(net, opts);
            else throw CLI::ValidationError("--method must be nr, fdxb, fdbx or gs");
            print_pf_summary(r, net);
            emit(make_report("pf", {pf_case}, to_json(r, net)), report_path);
            return r.converged ? 0 : 1;
        }

        if (dcpf->parsed()) {
            NetworkModel net = load_network(dcpf_case);
            const auto r = solve_dc(net);
            emit(make_report("dcpf", {dcpf_case}, to_json(r, net)), report_path);
            return r.success ? 0 : 1;
        }

        if (opf->parsed()) {
            NetworkModel net = load_network(opf_case);
            DcOpfOptions opts;
            opts.linearize_quadratic = opf_linearize;
            opts.piecewise_segments = opf_segments;
            const auto r = solve_dc_opf(net, opts);
            if (log_level() >= 1 && r.success)
                std::cout << "objective " << r.objective << "\n";
            emit(make_report("opf-dc", {opf_case}, to_json(r, net)), report_path);
            return r.success ? 0 : 1;
        }

        if (measure->parsed()) {
            NetworkModel net = load_network(meas_case);
            MeasurementSet set;
            if (meas_dc) {
                const auto r = solve_dc(net);
                if (!r.success) {
                    std::cerr << "dc power flow failed: " << r.error << "\n";
                    return 1;
                }
                DcMeasurementTemplate t;
                t.flow_to_all = p_flow_to >= 1.0;
                t.p_injection = p_injection;
                t.var_flow = var_legacy;
                t.exact = meas_exact;
                set = generate_from_dc_solution(net, r.theta, t, meas_seed);
            } else {
                const auto r = solve_newton_raphson(net);
                if (!r.converged) {
                    std::cerr << "power flow failed: " << r.error << "\n";
                    return 1;
                }
                MeasurementTemplate t;
                t.p_injection = p_injection;
                t.p_flow_to = p_flow_to;
                t.p_vphasor = p_vphasor;
                t.p_iphasor = p_iphasor;
                t.var_legacy = var_legacy;
                t.var_phasor = var_phasor;
                t.exact = meas_exact;
                set = generate_from_solution(net, {r.vm, r.va}, t, meas_seed);
            }
            write_measurements_csv(set, meas_out);
            log_info("wrote " + std::to_string(set.size()) + " measurements to " + meas_out);
            json res;
            res["measurements"] = set.size();
            res["seed"] = meas_seed;
            res["output"] = meas_out;
            emit(make_report("measure", {meas_case}, res), report_path);
            return 0;
        }

        if (observe->parsed()) {
            NetworkModel net = load_network(obs_case);
            MeasurementSet set = read_measurements_csv(obs_meas, &net);
            const IslandPartition part = obs_maximal || obs_restore
                                             ? find_maximal_islands(net, set)
                                             : find_flow_islands(net, set);
            json res;
            res["partition"] = to_json(part, net);
            if (log_level() >= 1)
                std::cout << (part.kind == IslandPartition::Kind::Flow ? "flow" : "maximal")
                          << " islands: " << part.size() << "\n";
            if (obs_restore && part.size() > 1) {
                const auto candidates = make_pseudo_candidates(net, part);
                const auto sel = restore_observability(net, set, part, candidates.list);
                res["restoration"] = to_json(sel);
                if (!obs_out.empty()) {
                    transfer_pseudos(set, candidates.list, sel.selected);
                    write_measurements_csv(set, obs_out);
                }
            }
            emit(make_report("observe", {obs_case, obs_meas}, res), report_path);
            return 0;
        }

        if (pmu->parsed()) {
            NetworkModel net = load_network(pmu_case);
            MeasurementSet legacy;
            const bool with_legacy = !pmu_legacy.empty();
            if (with_legacy) legacy = read_measurements_csv(pmu_legacy, &net);
            const auto r = place_pmus(net, with_legacy ? &legacy : nullptr);
            if (log_level() >= 1 && r.optimal) {
                std::cout << "minimum PMUs: " << r.buses.size() << " at buses";
                for (int b : r.buses) std::cout << " " << b;
                std::cout << "\n";
            }
            std::vector<std::string> inputs{pmu_case};
            if (with_legacy) inputs.push_back(pmu_legacy);
            emit(make_report("pmu-place", inputs, to_json(r)), report_path);
            return r.optimal ? 0 : 1;
        }

        if (se->parsed()) {
            NetworkModel net = load_network(se_case);
            EstimationModelKind kind = EstimationModelKind::AcNonlinear;
            if (se_model == "dc") kind = EstimationModelKind::Dc;
            else if (se_model == "pmu") kind = EstimationModelKind::PmuLinear;
            else if (se_model != "ac") throw CLI::ValidationError("--model must be ac, dc or pmu");
            EstimationOptions opts;
            if (se_method == "wls") opts.method = SolveMethod::NormalEquations;
            else if (se_method == "orthogonal") opts.method = SolveMethod::Orthogonal;
            else if (se_method == "pw") opts.method = SolveMethod::PetersWilkinson;
            else if (se_method == "lav") opts.method = SolveMethod::Lav;
            else throw CLI::ValidationError("--method must be wls, orthogonal, pw or lav");

            EstimationModelOptions mopts;
            if (se_neglect) mopts.neglect_covariance_override = true;

            auto prepare = [&](MeasurementSet& set) {
                if (se_coords.empty()) return;
                if (se_coords != "polar" && se_coords != "rect")
                    throw CLI::ValidationError("--coordinates must be polar or rect");
                set.force_phasor_coordinates(se_coords == "polar" ? PhasorCoords::Polar
                                                                  : PhasorCoords::Rect);
            };

            if (se_generate) {
                json trials = json::array();
                const auto truth = solve_newton_raphson(net);
                if (!truth.converged) {
                    std::cerr << "power flow failed: " << truth.error << "\n";
                    return 1;
                }
                std::vector<json> results(se_repeat);
                std::vector<int> exit_flags(se_repeat, 0);
#pragma omp parallel for schedule(dynamic) if (se_repeat > 1)
                for (int t = 0; t < se_repeat; ++t) {
                    NetworkModel local = net;  // independent per-trial model
                    MeasurementTemplate tm;
                    tm.p_vphasor = kind == EstimationModelKind::PmuLinear ? 1.0 : 0.0;
                    tm.p_iphasor = tm.p_vphasor;
                    if (kind == EstimationModelKind::PmuLinear) {
                        tm.vmag_all = false;
                        tm.flow_from_all = false;
                        tm.p_injection = 0.0;
                        tm.p_flow_to = 0.0;
                    }
                    MeasurementSet set =
                        kind == EstimationModelKind::Dc
                            ? generate_from_dc_solution(local, solve_dc(local).theta, {},
                                                        se_seed + t)
                            : generate_from_solution(local, {truth.vm, truth.va}, tm,
                                                     se_seed + t);
                    prepare(set);
                    EstimationModel model(local, set, kind, mopts);
                    const auto r = model.solve(opts);
                    results[t] = json{{"seed", se_seed + t},
                                      {"converged", r.converged},
                                      {"iterations", r.iterations},
                                      {"objective", r.objective}};
                    exit_flags[t] = r.converged ? 0 : 1;
                }
                int rc = 0;
                for (int t = 0; t < se_repeat; ++t) {
                    trials.push_back(results[t]);
                    rc |= exit_flags[t];
                }
                json res;
                res["trials"] = trials;
                emit(make_report("se", {se_case}, res), report_path);
                return rc;
            }

            if (se_meas.empty())
                throw CLI::ValidationError("se needs a measurement CSV or --generate");
            MeasurementSet set = read_measurements_csv(se_meas, &net);
            prepare(set);
            EstimationModel model(net, set, kind, mopts);
            const auto r = model.solve(opts);
            if (log_level() >= 1)
                std::cout << (r.converged ? "converged" : ("failed: " + r.error)) << " in "
                          << r.iterations << " iterations, objective " << r.objective << "\n";
            emit(make_report("se", {se_case, se_meas}, to_json(r, net)), report_path);
            return r.converged ? 0 : 1;
        }

        if (bad->parsed()) {
            NetworkModel net = load_network(bad_case);
            MeasurementSet set = read_measurements_csv(bad_meas, &net);
            EstimationModelKind kind = EstimationModelKind::AcNonlinear;
            if (bad_model == "dc") kind = EstimationModelKind::Dc;
            else if (bad_model == "pmu") kind = EstimationModelKind::PmuLinear;
            EstimationModel model(net, set, kind);
            BadDataOptions opts;
            opts.identification_threshold = bad_threshold;
            opts.confidence = bad_confidence;
            opts.force_lnr = bad_force;
            const auto r = run_bad_data_loop(model, opts);
            if (log_level() >= 1) {
                std::cout << "chi-squared " << (r.chi_squared.pass ? "pass" : "FAIL")
                          << " (statistic " << r.chi_squared.statistic << ", threshold "
                          << r.chi_squared.threshold << ")\n";
                for (const auto& rem : r.removals)
                    std::cout << "pass " << rem.pass << ": removed " << rem.measurement_id
                              << " (r_bar " << rem.normalized_residual << ")\n";
            }
            emit(make_report("baddata", {bad_case, bad_meas}, to_json(r, net)), report_path);
            return r.error.empty() ? 0 : 1;
        }

        if (qss->parsed()) {
            NetworkModel net = load_network(qss_case);
            std::optional<MeasurementSet> set;
            if (!qss_meas.empty()) set = read_measurements_csv(qss_meas, &net);
            const QssScript script = parse_qss_script_file(qss_script);
            QssRunner runner(net, set ? &*set : nullptr);
            auto outcome = runner.run_script(script);
            json res;
            res["steps"] = outcome.step_reports;
            if (!outcome.error.empty()) {
                res["error"] = outcome.error;
                res["error_step"] = outcome.error_step;
            }
            std::vector<std::string> inputs{qss_case, qss_script};
            if (!qss_meas.empty()) inputs.push_back(qss_meas);
            emit(make_report("qss", inputs, res), report_path);
            return outcome.error.empty() ? 0 : 1;
        }

        if (convert->parsed()) {
            NetworkModel net = load_network(conv_case);
            std::optional<MeasurementSet> set;
            if (!conv_meas.empty()) set = read_measurements_csv(conv_meas, &net);
            snapshot_write(net, set ? &*set : nullptr, conv_out);
            log_info("snapshot written to " + conv_out);
            json res;
            res["output"] = conv_out;
            res["digest"] = file_digest(conv_out);
            emit(make_report("convert", {conv_case}, res), report_path);
            return 0;
        }

        if (synth->parsed()) {
            SyntheticSpec spec;
            spec.n_buses = synth_buses;
            spec.n_branches = synth_branches;
            spec.seed = synth_seed;
            NetworkModel net = make_synthetic_network(spec);
            std::ofstream out(synth_out);
            if (!out) throw std::runtime_error("cannot write " + synth_out);
            out << to_matpower_text(net, "synthetic" + std::to_string(synth_buses));
            log_info("synthetic case written to " + synth_out);
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const NetworkError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const MeasurementError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace gridstate
