#include "tdfreq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "json.hpp"
#include "tdfreq/errors.hpp"
#include "tdfreq/io.hpp"
#include "tdfreq/log.hpp"
#include "tdfreq/metrics.hpp"
#include "tdfreq/order_estimate.hpp"

namespace tdfreq {

namespace {

using nlohmann::json;
using Eigen::Index;

constexpr double kPi = std::numbers::pi;

void progress(const std::string& msg) { std::cerr << "[tdfreq] " << msg << std::endl; }

// Stage label reported when a repro run fails.
thread_local std::string current_stage;

void stage(const std::string& name) {
    current_stage = name;
    progress(name);
}

std::vector<cplx> true_values(const StateSpaceSystem& sys, const std::vector<cplx>& sigmas, bool deriv) {
    FrequencyResponse fr(sys);
    std::vector<cplx> out;
    out.reserve(sigmas.size());
    for (cplx s : sigmas) out.push_back(deriv ? fr.derivative(s) : fr.value(s));
    return out;
}

bool has_unstable_pole(const std::vector<cplx>& poles) {
    return std::any_of(poles.begin(), poles.end(), [](cplx p) { return !(std::abs(p) < 1.0); });
}

// Keeps the ROM unless it has unstable modes, in which case its stable part is used.
DescriptorROM stabilized(const DescriptorROM& rom, Index& discarded) {
    discarded = 0;
    std::vector<cplx> poles;
    try {
        poles = rom_poles(rom);
    } catch (const NumericalError& e) {
        log::warn(std::string("could not compute ROM poles, keeping the full model: ") + e.what());
        return rom;
    }
    if (!has_unstable_pole(poles)) return rom;
    StablePart sp = stable_part(rom);
    discarded = sp.discarded;
    return sp.rom;
}

Evaluator rom_evaluator(const DescriptorROM& rom) {
    return [&rom](cplx z) { return eval_rom(rom, z); };
}

json triple_json(const ErrorTriple& t) { return {{"loewner", t.loewner}, {"hermite_loewner", t.hermite}, {"vector_fitting", t.vf}}; }

json history_json(const std::vector<AdaptStep>& h) {
    json arr = json::array();
    for (const auto& s : h)
        arr.push_back({{"n_used", s.n_used}, {"median_sW0", std::isfinite(s.median_sW0) ? json(s.median_sW0) : json(nullptr)}});
    return arr;
}

// JSON has no infinity; spell it out so numerically singular spectra stay readable.
json num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_pointwise_csv(const fs::path& path, const PipelineResult& p) {
    std::ostringstream os;
    os << "omega,abs_H,eps_rel0,sW0,eps_rel1,sW1,informative\n";
    std::vector<cplx> m0, m1;
    for (const auto& r : p.results) {
        m0.push_back(r.M0);
        m1.push_back(r.M1.value_or(cplx(0.0, 0.0)));
    }
    PointwiseErrors e0 = pointwise_errors(p.truth, m0);
    PointwiseErrors e1 = pointwise_errors(p.truth_deriv, m1);
    for (std::size_t i = 0; i < p.results.size(); ++i) {
        const auto& r = p.results[i];
        os << fmt(p.omegas[i]) << ',' << fmt(std::abs(p.truth[i])) << ',' << fmt(e0.errors[i]) << ',' << fmt(r.sW0)
           << ',' << fmt(e1.errors[i]) << ',' << fmt(r.sW1.value_or(std::numeric_limits<double>::quiet_NaN())) << ','
           << (r.informative ? 1 : 0) << '\n';
    }
    io::write_file(path, os.str());
}

void write_vector_csv(const fs::path& path, const std::string& header, const std::vector<std::vector<double>>& cols) {
    std::ostringstream os;
    os << header << '\n';
    std::size_t rows = cols.empty() ? 0 : cols.front().size();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << fmt(cols[c][i]);
        os << '\n';
    }
    io::write_file(path, os.str());
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double kappa(const Eigen::VectorXd& sv) {
    if (sv.size() == 0) return 0.0;
    double lo = sv(sv.size() - 1);
    return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& basis, const Eigen::VectorXcd& z) {
    Eigen::MatrixXcd M(basis.rows(), basis.cols() + 1);
    M.leftCols(basis.cols()) = basis.cast<cplx>();
    M.col(basis.cols()) = z;
    return Eigen::BDCSVD<Eigen::MatrixXcd>(M).singularValues();
}

bool truth_available(const ExperimentConfig& cfg, bool data_from_file) {
    return !data_from_file || cfg.system.kind == "file";
}

void write_truth_sweep(const ExperimentConfig& cfg, const Evaluator& H, const fs::path& path) {
    std::vector<double> omegas(cfg.output.sweep_points);
    for (int i = 0; i < cfg.output.sweep_points; ++i) omegas[i] = kPi * i / (cfg.output.sweep_points - 1);
    io::write_sweep_csv(path, sweep(H, omegas));
}

}  // namespace

StateSpaceSystem make_system(const SystemSpec& spec) {
    if (spec.kind == "random") return random_stable_system(spec.n, spec.seed);
    if (spec.kind == "heat") return spec.dt > 0.0 ? heat_rod_system(spec.n, spec.dt) : heat_rod_system(spec.n);
    if (spec.kind == "penzl") return spec.dt > 0.0 ? penzl_system(spec.dt) : penzl_system();
    if (spec.kind == "file") return io::read_system(spec.file);
    throw std::invalid_argument("unknown system kind '" + spec.kind + "'");
}

TimeSeries make_trajectory(const StateSpaceSystem& sys, const TrajectorySpec& spec) {
    if (spec.input == "file") return io::read_timeseries_csv(spec.file);
    Eigen::VectorXd u = gaussian_input(spec.T, spec.input_seed);
    if (spec.x0.empty()) return simulate(sys, u);
    if (static_cast<Index>(spec.x0.size()) != sys.order()) {
        std::ostringstream os;
        os << "trajectory.x0 has " << spec.x0.size() << " entries, the system has order " << sys.order();
        throw std::invalid_argument(os.str());
    }
    return simulate(sys, u, Eigen::Map<const Eigen::VectorXd>(spec.x0.data(), sys.order()));
}

std::vector<double> frequency_grid(const RecoverySpec& spec) {
    if (spec.spacing == "log") return logspace_halfopen(spec.omega_min, spec.omega_max, spec.count);
    std::vector<double> out(spec.count);
    for (int i = 0; i < spec.count; ++i)
        out[i] = spec.omega_min + (spec.omega_max - spec.omega_min) * static_cast<double>(i) / spec.count;
    return out;
}

PlanOptions plan_options(const RecoverySpec& spec) {
    PlanOptions po;
    po.t = spec.t;
    po.K = spec.K;
    po.W = spec.W;
    po.selection = spec.selection == "random" ? WindowSelection::Random : WindowSelection::Even;
    po.seed = spec.window_seed;
    return po;
}

RecoveryOptions recovery_options(const RecoverySpec& spec, unsigned threads) {
    RecoveryOptions ro;
    ro.tol = {spec.tau1, spec.tau2, spec.rank_tol};
    ro.want_deriv = spec.derivatives;
    ro.threads = std::max(1u, threads);
    return ro;
}

RecoveryRun run_recovery(const TimeSeries& ts, const std::vector<cplx>& sigmas, const RecoverySpec& spec,
                         unsigned threads) {
    RecoveryRun run;
    PlanOptions po = plan_options(spec);
    RecoveryOptions ro = recovery_options(spec, threads);
    if (spec.n_used) {
        run.n_used = *spec.n_used;
        WindowPlan plan = make_window_plan(ts.T(), run.n_used, po);
        run.results = recover(ts, sigmas, run.n_used, plan, ro);
        run.history.push_back({run.n_used, median_indicator(run.results)});
        return run;
    }
    OrderEstimate oe = estimate_order(ts);
    run.order_estimate = oe.N;
    AdaptOptions ao;
    ao.s_target = spec.s_target;
    ao.min_informative = spec.min_informative;
    ao.n_init = std::max<Index>(1, oe.N);
    AdaptResult ar = adapt_order(ts, sigmas, po, ro, ao);
    run.n_used = ar.n_used;
    run.converged = ar.converged;
    run.history = std::move(ar.history);
    run.results = std::move(ar.results);
    return run;
}

InterpolationData recovered_data(const std::vector<RecoveryResult>& results, bool with_derivs,
                                 std::optional<double> weight_exponent) {
    std::vector<cplx> pts, vals, ders;
    std::vector<double> sw;
    for (const auto& r : results) {
        if (!r.informative) continue;
        if (with_derivs && !(r.deriv_informative && r.M1)) continue;
        pts.push_back(r.sigma);
        vals.push_back(r.M0);
        if (with_derivs) ders.push_back(*r.M1);
        sw.push_back(r.sW0);
    }
    if (pts.empty()) throw NumericalError("no informative recovered values to build a model from");
    std::optional<std::vector<cplx>> d;
    if (with_derivs) d = std::move(ders);
    std::optional<std::vector<double>> w;
    if (weight_exponent) w = indicator_weights(sw, *weight_exponent);
    return with_conjugates(std::move(pts), std::move(vals), std::move(d), std::move(w));
}

RomBuild build_rom(const InterpolationData& data, const RomSpec& spec) {
    RomBuild out;
    if (spec.method == "vf") {
        if (!spec.r) throw std::invalid_argument("vector fitting needs rom.r");
        VectorFitOptions vo;
        vo.r = *spec.r;
        vo.max_iters = spec.vf_iters;
        InterpolationData d = data;
        d.derivs.reset();
        out.vf = vector_fitting(d, vo);
        out.rom = out.vf->descriptor();
    } else {
        LoewnerOptions lo;
        lo.r = spec.r;
        out.rom = spec.method == "hermite" ? hermite_loewner_rom(data, lo) : loewner_rom(data, lo);
    }
    if (spec.stable) out.rom = stabilized(out.rom, out.discarded);
    if (out.vf && out.discarded == 0)
        out.json = io::rom_to_json(*out.vf);
    else
        out.json = io::rom_to_json(out.rom);
    return out;
}

fs::path cmd_generate(const ExperimentConfig& cfg) {
    cfg.validate();
    StateSpaceSystem sys = make_system(cfg.system);
    fs::path path = cfg.output.dir / cfg.output.system;
    io::write_system(path, sys);
    return path;
}

fs::path cmd_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.trajectory.input == "file") throw std::invalid_argument("simulate needs trajectory.input = gaussian");
    StateSpaceSystem sys = make_system(cfg.system);
    TimeSeries ts = make_trajectory(sys, cfg.trajectory);
    fs::path path = cfg.output.dir / cfg.output.trajectory;
    io::write_timeseries_csv(path, ts);
    return path;
}

fs::path cmd_recover(const ExperimentConfig& cfg, unsigned threads) {
    cfg.validate();
    const bool from_file = cfg.trajectory.input == "file";
    std::optional<StateSpaceSystem> sys;
    if (truth_available(cfg, from_file)) sys = make_system(cfg.system);
    TimeSeries ts = from_file ? io::read_timeseries_csv(cfg.trajectory.file) : make_trajectory(*sys, cfg.trajectory);
    std::vector<double> omegas = frequency_grid(cfg.recovery);
    std::vector<cplx> sigmas = unit_circle(omegas);
    RecoveryRun run = run_recovery(ts, sigmas, cfg.recovery, threads);

    fs::path json_path = cfg.output.dir / (cfg.output.recovery + ".json");
    io::write_recovery(json_path, cfg.output.dir / (cfg.output.recovery + ".csv"), run.results);

    json info;
    info["n_used"] = run.n_used;
    info["order_estimate"] = run.order_estimate ? json(*run.order_estimate) : json(nullptr);
    info["converged"] = run.converged;
    info["history"] = history_json(run.history);
    info["median_sW0"] = run.history.empty() ? json(nullptr) : json(median_indicator(run.results));
    std::size_t informative = 0;
    for (const auto& r : run.results) informative += r.informative ? 1 : 0;
    info["informative"] = informative;
    info["count"] = run.results.size();
    if (sys) {
        std::vector<cplx> m0, m1;
        for (const auto& r : run.results) {
            m0.push_back(r.M0);
            m1.push_back(r.M1.value_or(cplx(0.0, 0.0)));
        }
        info["eps0"] = vector_errors(true_values(*sys, sigmas, false), m0);
        if (cfg.recovery.derivatives) info["eps1"] = vector_errors(true_values(*sys, sigmas, true), m1);
    }
    io::write_file(cfg.output.dir / (cfg.output.recovery + "_info.json"), info.dump(1) + "\n");
    return json_path;
}

fs::path cmd_rom(const ExperimentConfig& cfg, unsigned threads) {
    cfg.validate();
    std::vector<RecoveryResult> results;
    bool from_file = !cfg.rom.recovery_file.empty();
    std::optional<StateSpaceSystem> sys;
    if (truth_available(cfg, from_file || cfg.trajectory.input == "file")) sys = make_system(cfg.system);
    if (from_file) {
        results = io::read_recovery(cfg.rom.recovery_file);
    } else {
        TimeSeries ts = cfg.trajectory.input == "file" ? io::read_timeseries_csv(cfg.trajectory.file)
                                                         : make_trajectory(*sys, cfg.trajectory);
        results = run_recovery(ts, unit_circle(frequency_grid(cfg.recovery)), cfg.recovery, threads).results;
    }
    std::optional<double> wexp;
    if (cfg.rom.method == "vf" && cfg.rom.vf_weights == "indicator") wexp = cfg.rom.vf_weight_exponent;
    InterpolationData data = recovered_data(results, cfg.rom.method == "hermite", wexp);
    RomBuild rb = build_rom(data, cfg.rom);
    fs::path path = cfg.output.dir / cfg.output.rom;
    io::write_rom(path, rb.json);
    if (rb.discarded > 0) progress("stable part kept, " + std::to_string(rb.discarded) + " unstable modes discarded");
    if (sys) {
        FrequencyResponse fr(*sys);
        Evaluator H = [&fr](cplx z) { return fr.value(z); };
        write_truth_sweep(cfg, rom_evaluator(rb.rom), cfg.output.dir / cfg.output.sweep);
        write_truth_sweep(cfg, H, cfg.output.dir / ("truth_" + cfg.output.sweep));
        std::ostringstream os;
        os << "relative H-infinity error of the ROM: " << relative_hinf_error(H, rom_evaluator(rb.rom));
        progress(os.str());
    }
    return path;
}

fs::path cmd_eval(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::path path = cfg.output.dir / cfg.output.sweep;
    if (cfg.output.eval_file.empty()) {
        StateSpaceSystem sys = make_system(cfg.system);
        FrequencyResponse fr(sys);
        write_truth_sweep(cfg, [&fr](cplx z) { return fr.value(z); }, path);
        return path;
    }
    std::string text = io::read_file(cfg.output.eval_file);
    if (text.find("\"E\"") != std::string::npos) {
        DescriptorROM rom = io::rom_from_json(text);
        write_truth_sweep(cfg, rom_evaluator(rom), path);
    } else {
        StateSpaceSystem sys = io::system_from_json(text);
        FrequencyResponse fr(sys);
        write_truth_sweep(cfg, [&fr](cplx z) { return fr.value(z); }, path);
    }
    return path;
}

PipelineResult run_pipeline(const StateSpaceSystem& sys, const TimeSeries& ts, const PipelineSettings& s) {
    PipelineResult p;
    p.omegas = logspace_halfopen(s.omega_min, kPi, s.omega_count);
    std::vector<cplx> sigmas = unit_circle(p.omegas);
    p.truth = true_values(sys, sigmas, false);
    p.truth_deriv = true_values(sys, sigmas, true);
    p.order_estimate = estimate_order(ts).N;

    RecoverySpec spec;
    spec.K = s.K;
    spec.rank_tol = s.rank_tol;
    spec.s_target = s.s_target;
    spec.min_informative = s.min_informative;
    spec.n_used = s.n_used;
    spec.derivatives = true;
    RecoveryRun run = run_recovery(ts, sigmas, spec, s.threads);
    p.n_used = run.n_used;
    p.converged = run.converged;
    p.history = run.history;
    p.results = std::move(run.results);

    std::vector<cplx> m0, m1;
    for (const auto& r : p.results) {
        m0.push_back(r.M0);
        m1.push_back(r.M1.value_or(cplx(0.0, 0.0)));
    }
    p.eps0 = vector_errors(p.truth, m0);
    p.eps1 = vector_errors(p.truth_deriv, m1);
    if (!s.build_roms) return p;

    FrequencyResponse fr(sys);
    Evaluator H = [&fr](cplx z) { return fr.value(z); };
    InterpolationData rec_vals = recovered_data(p.results, false);
    InterpolationData rec_herm = recovered_data(p.results, true);
    InterpolationData rec_vf = recovered_data(p.results, false, s.vf_weight_exponent);
    InterpolationData true_herm = with_conjugates(sigmas, p.truth, p.truth_deriv);
    InterpolationData true_vals = true_herm;
    true_vals.derivs.reset();

    LoewnerOptions lo;
    lo.r = s.r;
    VectorFitOptions vo;
    vo.r = s.r;

    struct Models {
        DescriptorROM L, HL, VF;
    };
    auto make = [&](const InterpolationData& vals, const InterpolationData& herm, const InterpolationData& vf,
                    ErrorTriple* discarded) {
        Models m;
        Index d = 0;
        m.L = stabilized(loewner_rom(vals, lo), d);
        if (discarded) discarded->loewner = static_cast<double>(d);
        m.HL = stabilized(hermite_loewner_rom(herm, lo), d);
        if (discarded) discarded->hermite = static_cast<double>(d);
        m.VF = stabilized(vector_fitting(vf, vo).descriptor(), d);
        if (discarded) discarded->vf = static_cast<double>(d);
        return m;
    };
    Models hat = make(rec_vals, rec_herm, rec_vf, &p.discarded);
    Models tilde = make(true_vals, true_herm, true_vals, nullptr);

    auto rel = [&](const Evaluator& a, const DescriptorROM& b) { return relative_hinf_error(a, rom_evaluator(b)); };
    p.recovered = {rel(H, hat.L), rel(H, hat.HL), rel(H, hat.VF)};
    p.exact = {rel(H, tilde.L), rel(H, tilde.HL), rel(H, tilde.VF)};
    p.between = {rel(rom_evaluator(tilde.L), hat.L), rel(rom_evaluator(tilde.HL), hat.HL),
                 rel(rom_evaluator(tilde.VF), hat.VF)};
    return p;
}

ConditioningResult run_conditioning(int n, Index T, cplx sigma, std::uint64_t seed, double rank_tol) {
    StateSpaceSystem sys = random_stable_system(n, seed);
    TimeSeries ts = simulate(sys, gaussian_input(T, seed + 1));
    HankelStack G = build_gn(ts, n, 0, T);
    MomentVectors mv = moment_vectors(sigma, n);
    ConditioningResult c;
    c.sv_G = singular_values(G.matrix, mv.z_sigma);
    c.sv_Uc = singular_values(orth_basis(G, rank_tol).U, mv.z_sigma);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(G.matrix, Eigen::ComputeThinU);
    c.sv_U = singular_values(svd.matrixU(), mv.z_sigma);
    c.kappa_G = kappa(c.sv_G);
    c.kappa_Uc = kappa(c.sv_Uc);
    c.kappa_U = kappa(c.sv_U);
    return c;
}

WindowSweepResult run_window_sweep(int n, Index T, cplx sigma, const std::vector<Index>& Ks, Index W,
                                   std::uint64_t seed, double rank_tol) {
    StateSpaceSystem sys = random_stable_system(n, seed);
    TimeSeries ts = simulate(sys, gaussian_input(T, seed + 1));
    const cplx h = eval_tf(sys, sigma);
    RecoveryOptions ro;
    ro.tol.rank_tol = rank_tol;
    WindowSweepResult out;
    for (Index K : Ks) {
        PlanOptions po;
        po.K = K;
        po.W = W;
        WindowPlan plan = make_window_plan(T, n, po);
        RecoveryResult r = recover(ts, {sigma}, n, plan, ro).front();
        out.K.push_back(K);
        out.abs_error.push_back(std::abs(r.M0 - h));
        out.sW.push_back(r.sW0);
    }
    return out;
}

OrderSweepResult run_order_sweep(int n, Index T, const std::vector<Index>& orders, int omega_count, std::uint64_t seed,
                                 double rank_tol, unsigned threads) {
    StateSpaceSystem sys = random_stable_system(n, seed);
    TimeSeries ts = simulate(sys, gaussian_input(T, seed + 1));
    std::vector<cplx> sigmas = unit_circle(logspace_halfopen(1e-3, kPi, omega_count));
    std::vector<cplx> truth = true_values(sys, sigmas, false);
    RecoveryOptions ro;
    ro.tol.rank_tol = rank_tol;
    ro.threads = std::max(1u, threads);
    OrderSweepResult out;
    for (Index nu : orders) {
        WindowPlan plan = make_window_plan(T, nu, PlanOptions{});
        std::vector<RecoveryResult> res = recover(ts, sigmas, nu, plan, ro);
        double worst = 0.0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            double e = res[i].informative ? std::abs(res[i].M0 - truth[i]) / std::abs(truth[i]) : 1.0;
            worst = std::max(worst, e);
        }
        out.n_used.push_back(nu);
        out.max_rel_error.push_back(worst);
        out.median_sW.push_back(median_indicator(res));
    }
    return out;
}

const std::vector<std::string>& repro_names() {
    static const std::vector<std::string> names = {"synthetic", "heat", "penzl", "conditioning", "windows", "ordersweep"};
    return names;
}

namespace {

struct Summary {
    json config;
    json metrics;
    json checks = json::object();

    void check(const std::string& name, bool ok, double value, double threshold, const std::string& relation) {
        checks[name] = {{"pass", ok}, {"value", num(value)}, {"threshold", threshold}, {"relation", relation}};
    }

    bool pass() const {
        for (const auto& [k, v] : checks.items())
            if (!v.at("pass").get<bool>()) return false;
        return true;
    }
};

json pipeline_metrics(const PipelineResult& p) {
    return {{"order_estimate", p.order_estimate},
            {"n_used", p.n_used},
            {"converged", p.converged},
            {"history", history_json(p.history)},
            {"eps0", p.eps0},
            {"eps1", p.eps1},
            {"hinf_recovered", triple_json(p.recovered)},
            {"hinf_exact", triple_json(p.exact)},
            {"hinf_between", triple_json(p.between)},
            {"discarded_unstable_modes", triple_json(p.discarded)}};
}

void write_table_csv(const fs::path& path, const PipelineResult& p) {
    std::ostringstream os;
    os << "row,loewner,hermite_loewner,vector_fitting\n";
    auto row = [&](const char* name, const ErrorTriple& t) {
        os << name << ',' << fmt(t.loewner) << ',' << fmt(t.hermite) << ',' << fmt(t.vf) << '\n';
    };
    row("truth_vs_recovered_rom", p.recovered);
    row("truth_vs_exact_rom", p.exact);
    row("exact_rom_vs_recovered_rom", p.between);
    io::write_file(path, os.str());
}

Summary repro_synthetic(const ReproOptions& o, const fs::path& dir) {
    int n = o.full ? 1000 : 200;
    Index T = 1000;
    PipelineSettings s;
    s.omega_count = 400;
    s.omega_min = 1e-2;
    s.r = 100;
    s.s_target = 1e-8;
    s.min_informative = 1.0;
    s.rank_tol = kFineRankTol;
    s.threads = o.threads;
    Summary sum;
    sum.config = {{"n", n},           {"T", T},
                  {"omega_count", s.omega_count}, {"omega_min", s.omega_min},
                  {"r", s.r},         {"s_target", s.s_target},
                  {"min_informative", s.min_informative}, {"rank_tol", s.rank_tol},
                  {"system_seed", o.seed}, {"input_seed", o.seed + 1}};
    StateSpaceSystem sys = random_stable_system(n, o.seed);
    TimeSeries ts = simulate(sys, gaussian_input(T, o.seed + 1));
    stage("synthetic: estimate order, adapt, recover, build ROMs");
    PipelineResult p = run_pipeline(sys, ts, s);
    write_pointwise_csv(dir / "pointwise.csv", p);
    write_table_csv(dir / "hinf_table.csv", p);
    sum.metrics = pipeline_metrics(p);
    sum.check("eps0", p.eps0 <= 1e-6, p.eps0, 1e-6, "<=");
    return sum;
}

Summary repro_heat(const ReproOptions& o, const fs::path& dir) {
    Index T = 1000;
    PipelineSettings s;
    s.omega_count = 500;
    s.omega_min = 1e-4;
    s.r = 10;
    s.s_target = 1e-8;
    s.threads = o.threads;
    Summary sum;
    sum.config = {{"n", 200}, {"T", T}, {"omega_count", s.omega_count}, {"omega_min", s.omega_min}, {"r", s.r},
                  {"s_target", s.s_target}, {"input_seed", o.seed + 1}};
    StateSpaceSystem sys = heat_rod_system(200);
    TimeSeries ts = simulate(sys, gaussian_input(T, o.seed + 1));
    stage("heat: estimate order, adapt, recover, build ROMs");
    PipelineResult p = run_pipeline(sys, ts, s);
    write_pointwise_csv(dir / "pointwise.csv", p);
    write_table_csv(dir / "hinf_table.csv", p);
    sum.metrics = pipeline_metrics(p);
    sum.check("eps0", p.eps0 <= 1e-6, p.eps0, 1e-6, "<=");
    sum.check("hinf_loewner", p.recovered.loewner <= 1e-4, p.recovered.loewner, 1e-4, "<=");
    sum.check("hinf_hermite_loewner", p.recovered.hermite <= 1e-4, p.recovered.hermite, 1e-4, "<=");
    sum.check("hinf_vector_fitting", p.recovered.vf <= 1e-4, p.recovered.vf, 1e-4, "<=");
    return sum;
}

Summary repro_penzl(const ReproOptions& o, const fs::path& dir) {
    Index T = 10000;
    PipelineSettings s;
    s.omega_count = o.full ? 140 : 60;
    s.omega_min = 1e-5;
    s.r = 14;
    s.K = 40;
    s.rank_tol = 1e-13;
    s.s_target = 1e-2;
    s.vf_weight_exponent = 0.25;
    s.threads = o.threads;
    Summary sum;
    sum.config = {{"n", 1006},         {"dt", 1e-4},        {"T", T},      {"omega_count", s.omega_count},
                  {"omega_min", s.omega_min}, {"r", s.r},   {"K", s.K},    {"rank_tol", s.rank_tol},
                  {"s_target", s.s_target},   {"vf_weight_exponent", *s.vf_weight_exponent},
                  {"input_seed", o.seed + 1}};
    StateSpaceSystem sys = penzl_system();
    TimeSeries ts = simulate(sys, gaussian_input(T, o.seed + 1));

    PipelineSettings first = s;
    first.n_used = std::max<Index>(1, estimate_order(ts).N);
    first.build_roms = false;
    stage("penzl: initial attempt at the estimated order " + std::to_string(*first.n_used));
    PipelineResult p0 = run_pipeline(sys, ts, first);
    stage("penzl: adaptive order");
    PipelineResult p = run_pipeline(sys, ts, s);
    write_pointwise_csv(dir / "pointwise_initial.csv", p0);
    write_pointwise_csv(dir / "pointwise.csv", p);
    write_table_csv(dir / "hinf_table.csv", p);
    sum.metrics = pipeline_metrics(p);
    sum.metrics["initial_n_used"] = p0.n_used;
    sum.metrics["initial_eps0"] = p0.eps0;
    sum.metrics["initial_eps1"] = p0.eps1;
    double gain = p0.eps0 / p.eps0;
    sum.metrics["eps0_improvement"] = gain;
    sum.check("eps0_improvement", gain >= 100.0, gain, 100.0, ">=");
    sum.check("eps0", p.eps0 <= 0.1, p.eps0, 0.1, "<=");
    return sum;
}

Summary repro_conditioning(const ReproOptions& o, const fs::path& dir) {
    const cplx sigma = std::polar(1.0, 0.5);
    Summary sum;
    sum.config = {{"n", 100}, {"T", 300}, {"omega", 0.5}, {"rank_tol", kFineRankTol}, {"system_seed", o.seed}, {"input_seed", o.seed + 1}};
    stage("conditioning: spectra");
    ConditioningResult c = run_conditioning(100, 300, sigma, o.seed, kFineRankTol);
    write_vector_csv(dir / "sv_G_z.csv", "index,singular_value", {[&] {
                         std::vector<double> i(c.sv_G.size());
                         for (std::size_t k = 0; k < i.size(); ++k) i[k] = static_cast<double>(k);
                         return i;
                     }(), to_std(c.sv_G)});
    auto idx = [](Index m) {
        std::vector<double> i(m);
        for (Index k = 0; k < m; ++k) i[k] = static_cast<double>(k);
        return i;
    };
    write_vector_csv(dir / "sv_Uc_z.csv", "index,singular_value", {idx(c.sv_Uc.size()), to_std(c.sv_Uc)});
    write_vector_csv(dir / "sv_U_z.csv", "index,singular_value", {idx(c.sv_U.size()), to_std(c.sv_U)});
    sum.metrics = {{"kappa_G_z", num(c.kappa_G)}, {"kappa_Uc_z", num(c.kappa_Uc)}, {"kappa_U_z", num(c.kappa_U)}};
    double ratio = c.kappa_G / c.kappa_Uc;
    sum.metrics["ratio"] = num(ratio);
    sum.check("kappa_Uc_z", c.kappa_Uc <= 1e6, c.kappa_Uc, 1e6, "<=");
    sum.check("kappa_ratio", ratio >= 1e8, ratio, 1e8, ">=");
    return sum;
}

Summary repro_windows(const ReproOptions& o, const fs::path& dir) {
    Summary sum;
    const int n = 100;
    const Index T = 1000;
    sum.config = {{"n", n}, {"T", T}, {"system_seed", o.seed}, {"input_seed", o.seed + 1}, {"W", 10}, {"rank_tol", kFineRankTol}};

    // indicator vs relative error over frequency
    StateSpaceSystem sys = random_stable_system(n, o.seed);
    TimeSeries ts = simulate(sys, gaussian_input(T, o.seed + 1));
    PipelineSettings s;
    s.omega_count = 100;
    s.omega_min = 1e-3;
    s.n_used = n;
    s.rank_tol = kFineRankTol;
    s.build_roms = false;
    s.threads = o.threads;
    stage("windows: indicator curve");
    PipelineResult p = run_pipeline(sys, ts, s);
    write_pointwise_csv(dir / "indicator.csv", p);
    std::vector<double> sw, eps;
    for (std::size_t i = 0; i < p.results.size(); ++i) {
        if (!p.results[i].informative) continue;
        sw.push_back(p.results[i].sW0);
        eps.push_back(std::abs(p.results[i].M0 - p.truth[i]) / std::abs(p.truth[i]));
    }
    IndicatorFidelity f = indicator_fidelity(sw, eps);
    sum.metrics["indicator"] = {{"median_log_gap", f.median_log_gap},
                                {"fraction_within_2_decades", f.fraction_within_2_decades},
                                {"count", f.count}};
    sum.check("fraction_within_2_decades", f.fraction_within_2_decades >= 0.9, f.fraction_within_2_decades, 0.9, ">=");

    // window count sweep
    std::vector<Index> Ks = {10, 20, 30, 70};
    stage("windows: window count sweep");
    WindowSweepResult w = run_window_sweep(n, T, std::polar(1.0, 1e-2), Ks, 10, o.seed, kFineRankTol);
    std::vector<double> kd(w.K.begin(), w.K.end());
    write_vector_csv(dir / "window_count.csv", "K,abs_error,sW0", {kd, w.abs_error, w.sW});
    auto [lo, hi] = std::minmax_element(w.abs_error.begin(), w.abs_error.end());
    double spread = *hi / std::max(*lo, 1e-300);
    sum.metrics["window_count"] = {{"K", w.K}, {"abs_error", w.abs_error}, {"sW0", w.sW}, {"max_over_min", spread}};
    sum.check("window_count_spread", spread < 10.0, spread, 10.0, "<");
    return sum;
}

Summary repro_ordersweep(const ReproOptions& o, const fs::path& dir) {
    const int n = 100;
    const Index T = 1000;
    std::vector<Index> orders = {10, 25, 50, 75, 90, 100, 110, 125, 150, 200, 250, 300};
    Summary sum;
    sum.config = {{"n", n}, {"T", T}, {"omega_count", 20}, {"system_seed", o.seed}, {"input_seed", o.seed + 1}, {"rank_tol", kFineRankTol}};
    stage("ordersweep: recover per order");
    OrderSweepResult r = run_order_sweep(n, T, orders, 20, o.seed, kFineRankTol, o.threads);
    std::vector<double> nd(r.n_used.begin(), r.n_used.end());
    write_vector_csv(dir / "order_sweep.csv", "n_used,max_rel_error,median_sW0", {nd, r.max_rel_error, r.median_sW});
    double worst_above = 0.0;
    for (std::size_t i = 0; i < r.n_used.size(); ++i)
        if (r.n_used[i] >= n) worst_above = std::max(worst_above, r.max_rel_error[i]);
    sum.metrics = {{"n_used", r.n_used}, {"max_rel_error", r.max_rel_error}, {"median_sW0", r.median_sW},
                   {"worst_error_at_or_above_n", worst_above}};
    sum.check("plateau_at_or_above_n", worst_above <= 1e-8, worst_above, 1e-8, "<=");
    return sum;
}

}  // namespace

ReproReport cmd_repro(const std::string& name, const ReproOptions& opts) {
    const auto& names = repro_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown experiment '" + name + "' (expected one of " + list + ")");
    }
    ReproReport rep;
    rep.name = name;
    rep.dir = opts.out / name;
    fs::create_directories(rep.dir);
    Summary sum;
    current_stage = name + ": setup";
    try {
        if (name == "synthetic") sum = repro_synthetic(opts, rep.dir);
        if (name == "heat") sum = repro_heat(opts, rep.dir);
        if (name == "penzl") sum = repro_penzl(opts, rep.dir);
        if (name == "conditioning") sum = repro_conditioning(opts, rep.dir);
        if (name == "windows") sum = repro_windows(opts, rep.dir);
        if (name == "ordersweep") sum = repro_ordersweep(opts, rep.dir);
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "repro " << name << " failed at stage '" << current_stage << "' (seed " << opts.seed << ", full " << (opts.full ? "yes" : "no")
           << "): " << e.what();
        if (dynamic_cast<const std::invalid_argument*>(&e)) throw std::invalid_argument(os.str());
        throw NumericalError(os.str());
    }
    json out;
    out["experiment"] = name;
    out["seed"] = opts.seed;
    out["full"] = opts.full;
    out["config"] = sum.config;
    out["metrics"] = sum.metrics;
    out["checks"] = sum.checks;
    out["pass"] = sum.pass();
    rep.pass = sum.pass();
    io::write_file(rep.dir / "summary.json", out.dump(2) + "\n");
    return rep;
}

}  // namespace tdfreq
