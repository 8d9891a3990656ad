#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "dob/benchmarks.hpp"
#include "dob/io.hpp"

namespace dob::cli {

namespace {

using io::ConfigError;
using io::Json;
using io::Reader;

constexpr std::uint64_t kDefaultSeed = 0;
constexpr int kDefaultSPhiSamples = 20000;

struct CommonFlags {
    std::string config;
    std::string out;
    long seed = 0;
    CLI::Option* seed_opt = nullptr;
    bool emit = false;
};

/// Settings shared by every command config.
struct Common {
    std::uint64_t seed = kDefaultSeed;
    std::string out;
    bool quiet = false;

    void read(Reader& r, const CommonFlags& flags) {
        seed = static_cast<std::uint64_t>(r.integer_or("seed", static_cast<long>(kDefaultSeed)));
        if (flags.seed_opt->count() > 0) seed = static_cast<std::uint64_t>(flags.seed);
        if (r.has("out")) out = r.string("out");
        if (!flags.out.empty()) out = flags.out;
        const std::string level = r.has("log_level") ? r.string("log_level") : "info";
        if (level != "info" && level != "quiet") throw ConfigError("config.log_level: expected \"info\" or \"quiet\"");
        quiet = level == "quiet";
    }

    void write(Json& j) const {
        j["seed"] = seed;
        if (!out.empty()) j["out"] = out;
        j["log_level"] = quiet ? "quiet" : "info";
    }
};

class Log {
public:
    Log(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
    void operator()(const std::string& msg) const {
        if (!quiet_) err_ << "[dob] " << msg << '\n';
    }
    void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

private:
    std::ostream& err_;
    bool quiet_;
};

Json load_config(const CommonFlags& flags) {
    if (flags.config.empty()) return Json::object();
    Json j = io::parse_file(flags.config);
    if (!j.is_object()) throw ConfigError(flags.config + ": expected a JSON object");
    return j;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

Json disk_json(const DiskTestReport& d) {
    return {{"pass", d.pass},
            {"min_distance", d.min_distance},
            {"encirclements", d.encirclements},
            {"center", d.disk.center},
            {"radius", d.disk.radius}};
}

Json complex_list(const std::vector<Complex>& v) {
    Json out = Json::array();
    for (const auto& c : v) out.push_back(io::complex_json(c));
    return out;
}

void check_tau_grid(const std::vector<double>& taus, const std::string& path) {
    if (taus.empty()) throw ConfigError(path + ": empty tau grid");
    for (double t : taus)
        if (!(t > 0.0)) throw ConfigError(path + ": tau values must be positive");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] < taus[i - 1])) throw ConfigError(path + ": tau values must be strictly decreasing");
}

void append_loci(std::ostringstream& csv, int sample_id, const AsymptoticsTable& table) {
    for (const auto& p : table.points) {
        csv << sample_id << ',' << num(p.tau) << ',' << num(p.eigenvalue.real()) << ',' << num(p.eigenvalue.imag())
            << ',' << (p.cls == PoleClass::fast ? "fast" : "slow") << ',' << p.target << ',' << num(p.error) << '\n';
    }
}

constexpr const char* kLociHeader = "sample_id,tau,re,im,class,match_target,match_error\n";

// ---------------------------------------------------------------- design-q

struct DesignQ {
    Common common;
    int nu = 1;
    std::vector<double> a_tail;
    GainInterval gains;
    double a0_initial = 1.0;
    double safety_fraction = kDiskSafetyFraction;

    static DesignQ resolve(const Json& cfg, const CommonFlags& flags) {
        DesignQ d;
        Reader r(cfg, "config");
        d.common.read(r, flags);
        d.nu = static_cast<int>(r.integer("nu"));
        if (d.nu < 1) throw ConfigError("config.nu: must be >= 1");
        d.a_tail = r.has("a_tail") ? r.numbers("a_tail") : std::vector<double>{};
        if (static_cast<int>(d.a_tail.size()) != d.nu - 1) throw ConfigError("config.a_tail: need nu - 1 entries");
        d.gains = io::gains_from(r.raw("gains"), r.child("gains"));
        d.a0_initial = r.number_or("a0_initial", 1.0);
        if (!(d.a0_initial > 0.0)) throw ConfigError("config.a0_initial: must be positive");
        d.safety_fraction = r.number_or("safety_fraction", kDiskSafetyFraction);
        if (!(d.safety_fraction >= 0.0 && d.safety_fraction < 1.0))
            throw ConfigError("config.safety_fraction: must lie in [0, 1)");
        r.finish();
        return d;
    }

    [[nodiscard]] Json to_json() const {
        Json j{{"nu", nu}, {"a_tail", a_tail}, {"gains", io::to_json(gains)}, {"a0_initial", a0_initial},
               {"safety_fraction", safety_fraction}};
        common.write(j);
        return j;
    }

    int run(std::ostream& out, const Log& log) const {
        A0Design design;
        try {
            design = design_a0(nu, a_tail, gains, a0_initial, safety_fraction);
        } catch (const Error& e) {
            log(std::string("no a0 found: ") + e.what());
            Json report{{"found", false}, {"diagnostic", e.what()}};
            write_text(common.out, dump(report), out);
            return kNoDesign;
        }
        std::vector<double> a{design.a0};
        a.insert(a.end(), a_tail.begin(), a_tail.end());
        const auto sweep = gain_grid_sweep(a, gains);
        log("a0 = " + num(design.a0) + " after " + std::to_string(design.halvings) + " halvings");
        Json report{{"found", true},
                    {"a0", design.a0},
                    {"halvings", design.halvings},
                    {"a", a},
                    {"safety_threshold", disk_safety_threshold(gains, safety_fraction)},
                    {"disk", disk_json(design.report)},
                    {"gain_sweep",
                     {{"all_hurwitz", sweep.all_hurwitz},
                      {"worst_real_part", sweep.worst_real_part},
                      {"worst_gain", sweep.worst_gain}}}};
        write_text(common.out, dump(report), out);
        return kOk;
    }
};

// ---------------------------------------------------------------- analyze

struct AnalyzeFlags {
    std::string family, controller, qfilter, tau_grid, loci;
    int samples = 0;
    CLI::Option* samples_opt = nullptr;
};

struct Analyze {
    Common common;
    PlantFamily family;
    PlantSample nominal;
    TransferFunction controller;
    QFilterSpec qspec;
    std::vector<double> tau_grid;
    int samples = 200;
    std::string loci_out;

    static Analyze resolve(Json cfg, const CommonFlags& flags, const AnalyzeFlags& af) {
        if (!af.family.empty()) cfg["family"] = io::parse_file(af.family);
        if (!af.controller.empty()) cfg["controller"] = io::parse_file(af.controller);
        if (!af.qfilter.empty()) cfg["qfilter"] = io::parse_file(af.qfilter);
        if (!af.tau_grid.empty()) cfg["tau_grid"] = af.tau_grid;
        if (af.samples_opt->count() > 0) cfg["samples"] = af.samples;
        Analyze a;
        Reader r(cfg, "config");
        a.common.read(r, flags);
        a.family = io::family_from(r.raw("family"), r.child("family"));
        a.nominal = r.has("nominal") ? io::sample_from(r.raw("nominal"), r.child("nominal")) : a.family.nominal();
        a.controller = io::transfer_from(r.raw("controller"), r.child("controller"));
        a.qspec = io::qfilter_from(r.raw("qfilter"), r.child("qfilter"));
        a.tau_grid = io::tau_list_from(r.raw("tau_grid"), r.child("tau_grid"));
        check_tau_grid(a.tau_grid, r.child("tau_grid"));
        a.samples = static_cast<int>(r.integer_or("samples", 200));
        if (a.samples < 0) throw ConfigError("config.samples: must be >= 0");
        r.finish();
        a.loci_out = af.loci;
        if (a.loci_out.empty() && !a.common.out.empty()) {
            std::string base = a.common.out;
            if (base.size() > 5 && base.substr(base.size() - 5) == ".json") base.resize(base.size() - 5);
            a.loci_out = base + ".loci.csv";
        }
        return a;
    }

    [[nodiscard]] Json to_json() const {
        Json j{{"family", io::to_json(family)},     {"nominal", io::to_json(nominal)},
               {"controller", io::to_json(controller)}, {"qfilter", io::to_json(qspec)},
               {"tau_grid", tau_grid},              {"samples", samples}};
        common.write(j);
        return j;
    }

    int run(std::ostream& out, const Log& log) const {
        const auto plants = sample_family(family, samples, common.seed);
        log("checking " + std::to_string(plants.size()) + " plants over " + std::to_string(tau_grid.size()) +
            " tau values");
        const auto rep = verify_robust_stability(family, nominal, controller, qspec, tau_grid, plants);

        Json samples_json = Json::array();
        for (const auto& s : plants)
            samples_json.push_back(
                {{"id", s.id}, {"provenance", to_string(s.provenance)}, {"alpha", s.alpha}, {"beta", s.beta}, {"g", s.g}});
        Json sweep = Json::array();
        for (const auto& c : rep.sweep) sweep.push_back({{"sample_id", c.sample_id}, {"tau", c.tau}, {"max_real", c.max_real}});
        Json report{
            {"conditions_hold", rep.conditions_hold()},
            {"condition_a", {{"pass", rep.condition_a}, {"nominal_poles", complex_list(rep.nominal_poles)}}},
            {"condition_b",
             {{"pass", rep.condition_b},
              {"sampled_pass", rep.minimum_phase.pass},
              {"kharitonov_pass",
               rep.minimum_phase.kharitonov_pass ? Json(*rep.minimum_phase.kharitonov_pass) : Json(nullptr)},
              {"worst_zero",
               rep.minimum_phase.worst_zero ? io::complex_json(*rep.minimum_phase.worst_zero) : Json(nullptr)}}},
            {"condition_c",
             {{"pass", rep.condition_c},
              {"detail", rep.condition_c_detail},
              {"disk", rep.disk ? disk_json(*rep.disk) : Json(nullptr)}}},
            {"sweep_clean", rep.sweep_clean},
            {"tau_star_estimate", rep.tau_star_estimate ? Json(*rep.tau_star_estimate) : Json(nullptr)},
            {"tau_star_scope", "certified on grid"},
            {"tau_grid", tau_grid},
            {"samples", samples_json},
            {"sweep", sweep}};
        write_text(common.out, dump(report), out);

        if (!loci_out.empty()) {
            std::ostringstream csv;
            csv << kLociHeader;
            if (tau_grid.size() >= 3) {
                for (const auto& s : plants) {
                    try {
                        append_loci(csv, s.id, pole_asymptotics(s, nominal, controller, qspec, tau_grid));
                    } catch (const Error& e) {
                        log("no pole loci for sample " + std::to_string(s.id) + ": " + e.what());
                    }
                }
            } else {
                log("pole loci need at least 3 tau values; writing an empty table");
            }
            write_text(loci_out, csv.str(), out);
        }

        const bool ok = rep.conditions_hold() && rep.sweep_clean;
        log(std::string("conditions a/b/c: ") + (rep.condition_a ? "pass" : "FAIL") + "/" +
            (rep.condition_b ? "pass" : "FAIL") + "/" + (rep.condition_c ? "pass" : "FAIL") +
            ", sweep " + (rep.sweep_clean ? "clean" : "UNSTABLE"));
        return ok ? kOk : kConditionFailed;
    }
};

// ---------------------------------------------------------------- poles

struct Poles {
    Common common;
    PlantSample plant;
    PlantSample nominal;
    TransferFunction controller;
    QFilterSpec qspec;
    std::vector<double> tau_grid;

    static Poles resolve(Json cfg, const CommonFlags& flags, const std::string& tau_flag) {
        if (!tau_flag.empty()) cfg["tau_grid"] = tau_flag;
        Poles p;
        Reader r(cfg, "config");
        p.common.read(r, flags);
        p.plant = io::sample_from(r.raw("plant"), r.child("plant"));
        p.nominal = io::sample_from(r.raw("nominal"), r.child("nominal"));
        p.controller = io::transfer_from(r.raw("controller"), r.child("controller"));
        p.qspec = io::qfilter_from(r.raw("qfilter"), r.child("qfilter"));
        p.tau_grid = io::tau_list_from(r.raw("tau_grid"), r.child("tau_grid"));
        check_tau_grid(p.tau_grid, r.child("tau_grid"));
        if (p.tau_grid.size() < 3) throw ConfigError("config.tau_grid: need at least 3 tau values");
        r.finish();
        return p;
    }

    [[nodiscard]] Json to_json() const {
        Json j{{"plant", io::to_json(plant)},           {"nominal", io::to_json(nominal)},
               {"controller", io::to_json(controller)}, {"qfilter", io::to_json(qspec)},
               {"tau_grid", tau_grid}};
        common.write(j);
        return j;
    }

    int run(std::ostream& out, const Log& log) const {
        const auto table = pole_asymptotics(plant, nominal, controller, qspec, tau_grid);
        std::ostringstream csv;
        csv << kLociHeader;
        append_loci(csv, 0, table);
        write_text(common.out, csv.str(), out);
        for (const auto& row : table.rows)
            log("tau " + num(row.tau) + ": fast " + std::to_string(row.fast_count) + ", slow " +
                std::to_string(row.slow_count) + ", pf error " + num(row.pf_error) + ", slow error " +
                num(row.slow_error) + (row.count_mismatch ? " (count mismatch)" : ""));
        return kOk;
    }
};

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
    std::string loop, r, d, n;
    double t_end = 0.0, dt = 0.0;
    CLI::Option* t_end_opt = nullptr;
    CLI::Option* dt_opt = nullptr;
};

struct Simulate {
    Common common;
    TransferFunction plant, nominal, controller;
    QFilterSpec qspec;
    SignalSpec r, d, n;
    double t_end = 10.0;
    double dt = 1e-4;
    int record_stride = 1;
    bool allow_unstable = false;

    static Simulate resolve(Json cfg, const CommonFlags& flags, const SimulateFlags& sf) {
        if (!sf.loop.empty()) cfg["loop"] = io::parse_file(sf.loop);
        if (!sf.r.empty()) cfg["r"] = io::parse_file(sf.r);
        if (!sf.d.empty()) cfg["d"] = io::parse_file(sf.d);
        if (!sf.n.empty()) cfg["n"] = io::parse_file(sf.n);
        if (sf.t_end_opt->count() > 0) cfg["t_end"] = sf.t_end;
        if (sf.dt_opt->count() > 0) cfg["dt"] = sf.dt;
        Simulate s;
        Reader rd(cfg, "config");
        s.common.read(rd, flags);
        Reader loop(rd.raw("loop"), rd.child("loop"));
        s.plant = io::transfer_from(loop.raw("plant"), loop.child("plant"));
        s.nominal = io::transfer_from(loop.raw("nominal"), loop.child("nominal"));
        s.controller = io::transfer_from(loop.raw("controller"), loop.child("controller"));
        s.qspec = io::qfilter_from(loop.raw("qfilter"), loop.child("qfilter"));
        loop.finish();
        auto signal = [&](const char* key) {
            return rd.has(key) ? io::signal_from(rd.raw(key), rd.child(key)) : SignalSpec{};
        };
        s.r = signal("r");
        s.d = signal("d");
        s.n = signal("n");
        s.t_end = rd.number("t_end");
        s.dt = rd.number("dt");
        s.record_stride = static_cast<int>(rd.integer_or("record_stride", 1));
        s.allow_unstable = rd.boolean_or("allow_unstable", false);
        rd.finish();
        if (!(s.t_end > 0.0)) throw ConfigError("config.t_end: must be positive");
        if (!(s.dt > 0.0)) throw ConfigError("config.dt: must be positive");
        if (s.record_stride < 1) throw ConfigError("config.record_stride: must be >= 1");
        return s;
    }

    [[nodiscard]] Json to_json() const {
        Json j{{"loop",
                {{"plant", io::to_json(plant)},
                 {"nominal", io::to_json(nominal)},
                 {"controller", io::to_json(controller)},
                 {"qfilter", io::to_json(qspec)}}},
               {"r", io::to_json(r)},
               {"d", io::to_json(d)},
               {"n", io::to_json(n)},
               {"t_end", t_end},
               {"dt", dt},
               {"record_stride", record_stride},
               {"allow_unstable", allow_unstable}};
        common.write(j);
        return j;
    }

    int run(std::ostream& out, const Log& log) const {
        const auto loop = closed_loop_statespace(plant, nominal, controller, q_transfer(qspec));
        LinearSimOptions options;
        options.allow_unstable = allow_unstable;
        options.tau = qspec.tau;
        options.record_stride = record_stride;
        const auto trace = simulate_linear(loop.ss, r, d, n, t_end, dt, options);
        std::ostringstream csv;
        trace.write_csv(csv);
        write_text(common.out, csv.str(), out);
        log("wrote " + std::to_string(trace.size()) + " rows");
        return kOk;
    }
};

// ---------------------------------------------------------------- simulate-nl / compare-transient

struct NonlinearRunConfig {
    Common common;
    NormalFormPlant plant;
    NominalModel nominal;
    BaselineController controller;
    DobParams params;
    bool auto_sat_phi = false;
    int s_phi_samples = kDefaultSPhiSamples;
    Envelope envelope;
    InitialState initial;
    double t_end = 10.0;
    std::optional<double> dt;
    int record_stride = 1;
    std::vector<double> tau_sweep;  // compare-transient only

    static DobParams params_from(const Json& j, const std::string& path, bool& auto_sat_phi) {
        Reader r(j, path);
        DobParams p;
        p.qspec = io::qfilter_from(r.raw("qfilter"), r.child("qfilter"));
        p.g_star = r.number("g_star");
        p.sat_x = io::intervals_from(r.raw("sat_x"), r.child("sat_x"));
        const Json& sp = r.raw("sat_phi");
        auto_sat_phi = sp.is_string();
        if (auto_sat_phi) {
            if (sp.get<std::string>() != "auto") throw ConfigError(r.child("sat_phi") + ": expected [lower, upper] or \"auto\"");
        } else {
            p.sat_phi = io::interval_from(sp, r.child("sat_phi"));
        }
        if (r.has("smoothing_width")) p.smoothing_width = r.number("smoothing_width");
        r.finish();
        return p;
    }

    [[nodiscard]] Json params_json() const {
        Json j{{"qfilter", io::to_json(params.qspec)},
               {"g_star", params.g_star},
               {"sat_x", io::to_json(params.sat_x)},
               {"sat_phi", auto_sat_phi ? Json("auto") : io::to_json(params.sat_phi)}};
        if (params.smoothing_width) j["smoothing_width"] = *params.smoothing_width;
        return j;
    }

    /// Expands a "benchmark" entry into explicit sections; explicit sections win.
    static Json expand_benchmark(Json cfg) {
        if (!cfg.contains("benchmark")) return cfg;
        const Json name = cfg["benchmark"];
        if (!name.is_string()) throw ConfigError("config.benchmark: expected \"n1\" or \"linear\"");
        double tau = 1e-2;
        if (cfg.contains("tau")) tau = io::as_number(cfg["tau"], "config.tau");
        if (!(tau > 0.0)) throw ConfigError("config.tau: must be positive");
        bench::NonlinearBenchmark b;
        if (name == "n1")
            b = bench::n1(tau);
        else if (name == "linear")
            b = bench::linear_instance(tau);
        else
            throw ConfigError("config.benchmark: unknown benchmark '" + name.get<std::string>() + "'");
        NonlinearRunConfig base;
        base.params = b.params;
        Json sections{{"plant", io::to_json(b.plant)},       {"nominal", io::to_json(b.nominal)},
                      {"controller", io::to_json(b.controller)}, {"dob", base.params_json()},
                      {"envelope", io::to_json(b.envelope)},   {"initial", io::to_json(b.initial)},
                      {"t_end", b.t_end}};
        cfg.erase("benchmark");
        cfg.erase("tau");
        for (const auto& [key, value] : sections.items())
            if (!cfg.contains(key)) cfg[key] = value;
        return cfg;
    }

    static NonlinearRunConfig resolve(Json cfg, const CommonFlags& flags, bool sweep, const std::string& sweep_flag) {
        cfg = expand_benchmark(std::move(cfg));
        if (sweep && !sweep_flag.empty()) cfg["tau_sweep"] = sweep_flag;
        NonlinearRunConfig c;
        Reader r(cfg, "config");
        c.common.read(r, flags);
        c.plant = io::plant_from(r.raw("plant"), r.child("plant"));
        c.nominal = io::nominal_from(r.raw("nominal"), r.child("nominal"));
        c.controller = io::controller_from(r.raw("controller"), r.child("controller"));
        c.params = params_from(r.raw("dob"), r.child("dob"), c.auto_sat_phi);
        c.s_phi_samples = static_cast<int>(r.integer_or("s_phi_samples", kDefaultSPhiSamples));
        if (c.s_phi_samples < 1) throw ConfigError("config.s_phi_samples: must be >= 1");
        c.envelope = io::envelope_from(r.raw("envelope"), r.child("envelope"));
        c.initial = io::initial_from(r.raw("initial"), r.child("initial"));
        c.t_end = r.number_or("t_end", 10.0);
        if (!(c.t_end > 0.0)) throw ConfigError("config.t_end: must be positive");
        if (r.has("dt")) {
            c.dt = r.number("dt");
            if (!(*c.dt > 0.0)) throw ConfigError("config.dt: must be positive");
        } else if (!sweep) {
            c.dt = c.params.qspec.tau / 20.0;
        }
        c.record_stride = static_cast<int>(r.integer_or("record_stride", 1));
        if (c.record_stride < 1) throw ConfigError("config.record_stride: must be >= 1");
        if (sweep) {
            c.tau_sweep = io::tau_list_from(r.raw("tau_sweep"), r.child("tau_sweep"));
            if (c.tau_sweep.empty()) throw ConfigError("config.tau_sweep: empty tau sweep");
            for (double t : c.tau_sweep)
                if (!(t > 0.0)) throw ConfigError("config.tau_sweep: tau values must be positive");
        }
        r.finish();
        try {
            c.plant.validate();
            c.nominal.validate(c.plant.nu, c.plant.nz());
            c.controller.validate();
            if (!c.auto_sat_phi) c.params.validate();
            c.envelope.validate(c.plant.nu, c.plant.nz(), c.controller.m);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        return c;
    }

    [[nodiscard]] Json to_json(bool sweep) const {
        Json j{{"plant", io::to_json(plant)},
               {"nominal", io::to_json(nominal)},
               {"controller", io::to_json(controller)},
               {"dob", params_json()},
               {"s_phi_samples", s_phi_samples},
               {"envelope", io::to_json(envelope)},
               {"initial", io::to_json(initial)},
               {"t_end", t_end}};
        if (dt) j["dt"] = *dt;
        j["record_stride"] = record_stride;
        if (sweep) j["tau_sweep"] = tau_sweep;
        common.write(j);
        return j;
    }

    [[nodiscard]] DobParams resolved_params(const Log& log) const {
        DobParams p = params;
        if (auto_sat_phi) {
            p.sat_phi = estimate_s_phi(plant, nominal, controller, envelope, p.g_star, s_phi_samples, common.seed);
            log("S_phi = [" + num(p.sat_phi.lower) + ", " + num(p.sat_phi.upper) + "] from " +
                std::to_string(s_phi_samples) + " samples");
        }
        p.validate();
        return p;
    }

    [[nodiscard]] NonlinearSimOptions options(double dt_value) const {
        NonlinearSimOptions o;
        o.t_end = t_end;
        o.dt = dt_value;
        o.record_stride = record_stride;
        return o;
    }

    int run_single(std::ostream& out, const Log& log) const {
        const DobParams p = resolved_params(log);
        std::ostringstream csv;
        int code = kOk;
        try {
            const auto run = simulate_nonlinear(plant, nominal, controller, p, envelope, initial, options(*dt));
            run.trace.write_csv(csv);
            log("sup_dev " + num(run.summary.sup_dev) + ", max|u| " + num(run.summary.max_abs_u));
        } catch (const DivergenceError& e) {
            e.partial().trace.write_csv(csv);
            log.error(e.what());
            code = kDiverged;
        }
        write_text(common.out, csv.str(), out);
        return code;
    }

    int run_sweep(std::ostream& out, const Log& log) const {
        const DobParams base = resolved_params(log);
        const auto count = static_cast<long>(tau_sweep.size());
        std::vector<NonlinearSummary> rows(tau_sweep.size());
        std::vector<std::string> errors(tau_sweep.size());
        std::vector<char> diverged(tau_sweep.size(), 0);
#if defined(DOB_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
        for (long k = 0; k < count; ++k) {
            const double tau = tau_sweep[static_cast<std::size_t>(k)];
            DobParams p = base;
            p.qspec.tau = tau;
            const double step = dt ? std::min(*dt, tau / 20.0) : tau / 20.0;
            try {
                NonlinearSimOptions o = options(step);
                // only the summary is reported; keep the trace small
                o.record_stride = std::max(1, static_cast<int>(t_end / step / 1000.0));
                rows[static_cast<std::size_t>(k)] =
                    simulate_nonlinear(plant, nominal, controller, p, envelope, initial, o).summary;
            } catch (const DivergenceError& e) {
                rows[static_cast<std::size_t>(k)] = e.partial().summary;
                errors[static_cast<std::size_t>(k)] = e.what();
                diverged[static_cast<std::size_t>(k)] = 1;
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(k)] = e.what();
            }
        }
        for (std::size_t k = 0; k < tau_sweep.size(); ++k)
            if (!errors[k].empty() && !diverged[k]) throw Error("tau " + num(tau_sweep[k]) + ": " + errors[k]);

        std::ostringstream csv;
        csv << "tau,sup_dev,sup_u_err,max_abs_u,z_max\n";
        int code = kOk;
        for (std::size_t k = 0; k < tau_sweep.size(); ++k) {
            const auto& s = rows[k];
            csv << num(tau_sweep[k]) << ',' << num(s.sup_dev) << ',' << num(s.max_u_error) << ','
                << num(s.max_abs_u) << ',' << num(s.z_max) << '\n';
            if (diverged[k]) {
                log.error("tau " + num(tau_sweep[k]) + ": " + errors[k]);
                code = kDiverged;
            } else {
                log("tau " + num(tau_sweep[k]) + ": sup_dev " + num(s.sup_dev));
            }
        }
        write_text(common.out, csv.str(), out);
        return code;
    }
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--out", flags.out, "Output path (default: standard output)");
    flags.seed_opt = sub->add_option("--seed", flags.seed, "Random seed (overrides the config)");
    sub->add_flag("--emit-config", flags.emit, "Print the resolved configuration and exit");
}

/// Resolves, optionally emits, and runs one command; maps failures to exit codes.
template <typename Resolve, typename Emit, typename Run>
int dispatch(const CommonFlags& flags, std::ostream& out, std::ostream& err, Resolve&& resolve, Emit&& emit,
             Run&& run_fn) {
    try {
        auto cfg = resolve(load_config(flags));
        if (flags.emit) {
            out << dump(emit(cfg));
            return kOk;
        }
        const Log log(err, cfg.common.quiet);
        return run_fn(cfg, log);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kMalformed;
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kDiverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kMalformed;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kMalformed;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Disturbance-observer design, robustness analysis and simulation"};
    app.name("dob");
    app.require_subcommand(1);

    CommonFlags dq_flags, an_flags, po_flags, si_flags, nl_flags, ct_flags;
    AnalyzeFlags af;
    SimulateFlags sf;
    std::string poles_tau, sweep_flag;

    auto* dq = app.add_subcommand("design-q", "Pick a0 for a Q-filter tail so the fast dynamics stay stable over the gain interval");
    add_common(dq, dq_flags);

    auto* an = app.add_subcommand("analyze", "Check the robust-stability hypotheses and sweep the closed loop over a plant family");
    add_common(an, an_flags);
    an->add_option("--family", af.family, "Plant family JSON");
    an->add_option("--controller", af.controller, "Controller transfer function JSON");
    an->add_option("--qfilter", af.qfilter, "Q-filter JSON");
    an->add_option("--tau-grid", af.tau_grid, "Decreasing tau grid: start:stop:log10 or v1,v2,...");
    af.samples_opt = an->add_option("--samples", af.samples, "Random interior samples on top of the vertices");
    an->add_option("--loci", af.loci, "Pole-locus CSV (default: next to --out)");

    auto* po = app.add_subcommand("poles", "Closed-loop pole loci of one plant as tau shrinks");
    add_common(po, po_flags);
    po->add_option("--tau-grid", poles_tau, "Decreasing tau grid: start:stop:log10 or v1,v2,...");

    auto* si = app.add_subcommand("simulate", "Time simulation of the linear DOB loop");
    add_common(si, si_flags);
    si->add_option("--loop", sf.loop, "Loop JSON with plant, nominal, controller, qfilter");
    si->add_option("--r", sf.r, "Reference signal JSON");
    si->add_option("--d", sf.d, "Input disturbance JSON");
    si->add_option("--n", sf.n, "Measurement noise JSON");
    sf.t_end_opt = si->add_option("--t-end", sf.t_end, "Final time");
    sf.dt_opt = si->add_option("--dt", sf.dt, "Fixed RK4 step");

    auto* nl = app.add_subcommand("simulate-nl", "Time simulation of the nonlinear plant with the saturated observer");
    add_common(nl, nl_flags);

    auto* ct = app.add_subcommand("compare-transient", "Deviation from the nominal transient over a tau sweep");
    add_common(ct, ct_flags);
    ct->add_option("--tau-sweep", sweep_flag, "Tau values: v1,v2,... or start:stop:log10");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kMalformed;
    }

    if (dq->parsed()) {
        return dispatch(
            dq_flags, out, err, [&](const Json& c) { return DesignQ::resolve(c, dq_flags); },
            [](const DesignQ& c) { return c.to_json(); }, [&](const DesignQ& c, const Log& log) { return c.run(out, log); });
    }
    if (an->parsed()) {
        return dispatch(
            an_flags, out, err, [&](const Json& c) { return Analyze::resolve(c, an_flags, af); },
            [](const Analyze& c) { return c.to_json(); }, [&](const Analyze& c, const Log& log) { return c.run(out, log); });
    }
    if (po->parsed()) {
        return dispatch(
            po_flags, out, err, [&](const Json& c) { return Poles::resolve(c, po_flags, poles_tau); },
            [](const Poles& c) { return c.to_json(); }, [&](const Poles& c, const Log& log) { return c.run(out, log); });
    }
    if (si->parsed()) {
        return dispatch(
            si_flags, out, err, [&](const Json& c) { return Simulate::resolve(c, si_flags, sf); },
            [](const Simulate& c) { return c.to_json(); }, [&](const Simulate& c, const Log& log) { return c.run(out, log); });
    }
    if (nl->parsed()) {
        return dispatch(
            nl_flags, out, err, [&](const Json& c) { return NonlinearRunConfig::resolve(c, nl_flags, false, ""); },
            [](const NonlinearRunConfig& c) { return c.to_json(false); },
            [&](const NonlinearRunConfig& c, const Log& log) { return c.run_single(out, log); });
    }
    return dispatch(
        ct_flags, out, err, [&](const Json& c) { return NonlinearRunConfig::resolve(c, ct_flags, true, sweep_flag); },
        [](const NonlinearRunConfig& c) { return c.to_json(true); },
        [&](const NonlinearRunConfig& c, const Log& log) { return c.run_sweep(out, log); });
}

}  // namespace dob::cli
