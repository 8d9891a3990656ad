#include "dob/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dob/parallel.hpp"

namespace dob {

namespace {

using Kind = VarRef::Kind;

void check_interval(const Interval& i, const std::string& what) {
    if (!(i.lower < i.upper)) throw Error(what + ": interval needs lower < upper");
}

void check_box(const std::vector<Interval>& box, std::size_t dim, const std::string& what) {
    if (box.size() != dim) throw Error(what + ": expected " + std::to_string(dim) + " intervals");
    for (const auto& i : box)
        if (!(i.lower <= i.upper)) throw Error(what + ": interval with lower > upper");
}

double uniform(const Interval& i, std::mt19937_64& rng) {
    return i.lower + (i.upper - i.lower) * std::generate_canonical<double, 53>(rng);
}

}  // namespace

void NormalFormPlant::validate() const {
    if (nu < 1 || n < nu) throw Error("plant: need 1 <= nu <= n");
    if (static_cast<int>(h.size()) != nz()) throw Error("plant: h must have n - nu entries");
    if (!dz.empty() && static_cast<int>(dz.size()) != nz()) throw Error("plant: dz must have n - nu entries");
    if (!(g_lower > 0.0 && g_lower <= g_upper)) throw Error("plant: need 0 < g_lower <= g_upper");
    f.validate("plant.f", {{Kind::x, nu}, {Kind::z, nz()}});
    g.validate("plant.g", {{Kind::x, nu}, {Kind::z, nz()}});
    for (const auto& hi : h) hi.validate("plant.h", {{Kind::x, nu}, {Kind::z, nz()}, {Kind::dz, nz()}});
    d.validate();
    for (const auto& s : dz) s.validate();
}

void NominalModel::validate(int nu, int nz) const {
    if (static_cast<int>(h_n.size()) != nz) throw Error("nominal: h_n must have n - nu entries");
    f_n.validate("nominal.f_n", {{Kind::x, nu}, {Kind::z, nz}});
    g_n.validate("nominal.g_n", {{Kind::x, nu}, {Kind::z, nz}});
    for (const auto& h : h_n) h.validate("nominal.h_n", {{Kind::x, nu}, {Kind::z, nz}});
}

void BaselineController::validate() const {
    if (m < 0) throw Error("controller: m must be >= 0");
    if (static_cast<int>(Pi.size()) != m) throw Error("controller: Pi must have m entries");
    for (const auto& f : Pi) f.validate("controller.Pi", {{Kind::eta, m}, {Kind::y, 1}});
    pi.validate("controller.pi", {{Kind::eta, m}, {Kind::y, 1}});
}

void DobParams::validate() const {
    if (!(qspec.tau > 0.0)) throw Error("dob: tau must be positive");
    qspec.validate();
    if (!(g_star > 0.0)) throw Error("dob: g_star must be positive");
    if (static_cast<int>(sat_x.size()) != qspec.nu) throw Error("dob: sat_x must have nu intervals");
    for (const auto& i : sat_x) check_interval(i, "dob.sat_x");
    check_interval(sat_phi, "dob.sat_phi");
    if (smoothing_width && !(*smoothing_width > 0.0)) throw Error("dob: smoothing_width must be positive");
}

double DobParams::width_for(const Interval& identity) const {
    return smoothing_width ? *smoothing_width : 0.1 * (identity.upper - identity.lower);
}

void Envelope::validate(int nu, int nz, int m) const {
    check_box(x, static_cast<std::size_t>(nu), "envelope.x");
    check_box(z, static_cast<std::size_t>(nz), "envelope.z");
    check_box(eta, static_cast<std::size_t>(m), "envelope.eta");
    if (!(M_d >= 0.0) || !(M_dz >= 0.0)) throw Error("envelope: M_d and M_dz must be >= 0");
    if (!s0_x.empty()) check_box(s0_x, static_cast<std::size_t>(nu), "envelope.s0_x");
    if (!s0_z.empty()) check_box(s0_z, static_cast<std::size_t>(nz), "envelope.s0_z");
    if (!s0_eta.empty()) check_box(s0_eta, static_cast<std::size_t>(m), "envelope.s0_eta");
}

double smooth_sat(double v, double lo, double hi, double width) {
    if (v > hi) {
        const double s = (v - hi) / width;
        return s >= 1.0 ? hi + 0.5 * width : hi + width * (s - 0.5 * s * s);
    }
    if (v < lo) {
        const double s = (lo - v) / width;
        return s >= 1.0 ? lo - 0.5 * width : lo - width * (s - 0.5 * s * s);
    }
    return v;
}

double smooth_sat_derivative(double v, double lo, double hi, double width) {
    if (v > hi) return std::max(0.0, 1.0 - (v - hi) / width);
    if (v < lo) return std::max(0.0, 1.0 - (lo - v) / width);
    return 1.0;
}

namespace {

struct Signals {
    double y = 0.0, u = 0.0, ubar = 0.0, phi = 0.0, sat_phi = 0.0, w = 0.0, u_desired = 0.0, d = 0.0;
};

// Observer right-hand side on raw spans. satq is scratch of size nu.
void observer_rhs(std::span<const double> zbar, std::span<const double> q, std::span<const double> p, double y,
                  double ubar, const DobParams& params, const NominalModel& nominal, std::span<double> dzbar,
                  std::span<double> dq, std::span<double> dp, std::span<double> satq, Signals& sig) {
    const int nu = params.qspec.nu;
    const double tau = params.qspec.tau;
    for (int i = 0; i < nu; ++i) {
        const auto& b = params.sat_x[static_cast<std::size_t>(i)];
        satq[static_cast<std::size_t>(i)] = smooth_sat(q[static_cast<std::size_t>(i)], b.lower, b.upper, params.width_for(b));
    }
    // c_k = a_k / tau^(nu - k)
    double c[16];
    if (nu > 16) throw Error("dob: nu above 16 is not supported");
    for (int k = 0; k < nu; ++k) c[k] = params.qspec.a[static_cast<std::size_t>(k)] / std::pow(tau, nu - k);
    double cq = 0.0, cp = 0.0;
    for (int k = 0; k < nu; ++k) {
        cq += c[k] * q[static_cast<std::size_t>(k)];
        cp += c[k] * p[static_cast<std::size_t>(k)];
    }
    const Vars v{satq, zbar, {}, {}, y};
    const double gs = params.g_star;
    sig.w = nominal.f_n(v) + nominal.g_n(v) * ubar;
    sig.phi = p[0] + (cq - c[0] * y) / gs;
    sig.sat_phi = smooth_sat(sig.phi, params.sat_phi.lower, params.sat_phi.upper, params.width_for(params.sat_phi));
    sig.u = sig.sat_phi + sig.w / gs;
    const double p_in = sig.phi - (sig.phi - sig.sat_phi) / gs + sig.w / gs;
    for (int i = 0; i + 1 < nu; ++i) {
        dq[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i + 1)];
        dp[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i + 1)];
    }
    dq[static_cast<std::size_t>(nu - 1)] = -cq + c[0] * y;
    dp[static_cast<std::size_t>(nu - 1)] = -cp + c[0] * p_in;
    for (std::size_t i = 0; i < dzbar.size(); ++i) dzbar[i] = nominal.h_n[i](v);
}

// Stacked closed loop; see nonlinear_state_names for the layout.
class LoopModel {
public:
    LoopModel(const NormalFormPlant& plant, const NominalModel& nominal, const BaselineController& controller,
              const DobParams& params, bool with_nominal)
        : plant_(plant), nominal_(nominal), controller_(controller), params_(params), with_nominal_(with_nominal),
          nu_(plant.nu), nz_(plant.nz()), m_(controller.m), satq_(static_cast<std::size_t>(nu_)),
          dzv_(static_cast<std::size_t>(nz_)) {}

    [[nodiscard]] int nu() const { return nu_; }
    [[nodiscard]] int nz() const { return nz_; }
    [[nodiscard]] int m() const { return m_; }
    [[nodiscard]] int ox() const { return 0; }
    [[nodiscard]] int oz() const { return nu_; }
    [[nodiscard]] int oeta() const { return nu_ + nz_; }
    [[nodiscard]] int ozbar() const { return nu_ + nz_ + m_; }
    [[nodiscard]] int oq() const { return nu_ + 2 * nz_ + m_; }
    [[nodiscard]] int op() const { return 2 * nu_ + 2 * nz_ + m_; }
    [[nodiscard]] int oxn() const { return 3 * nu_ + 2 * nz_ + m_; }
    [[nodiscard]] int ozbarn() const { return 4 * nu_ + 2 * nz_ + m_; }
    [[nodiscard]] int oetan() const { return 4 * nu_ + 3 * nz_ + m_; }
    [[nodiscard]] int size() const { return with_nominal_ ? 4 * nu_ + 3 * nz_ + 2 * m_ : op() + nu_; }

    void rhs(double t, const std::vector<double>& s, double d, std::vector<double>& ds, Signals& sig) {
        auto seg = [&](const std::vector<double>& v, int off, int len) {
            return std::span<const double>(v.data() + off, static_cast<std::size_t>(len));
        };
        auto out = [&](int off, int len) { return std::span<double>(ds.data() + off, static_cast<std::size_t>(len)); };
        const auto x = seg(s, ox(), nu_), z = seg(s, oz(), nz_), eta = seg(s, oeta(), m_);
        const auto zbar = seg(s, ozbar(), nz_), q = seg(s, oq(), nu_), p = seg(s, op(), nu_);

        sig.y = x[0];
        sig.d = d;
        const Vars cv{{}, {}, {}, eta, sig.y};
        sig.ubar = controller_.pi(cv);
        for (int i = 0; i < m_; ++i) ds[static_cast<std::size_t>(oeta() + i)] = controller_.Pi[static_cast<std::size_t>(i)](cv);

        observer_rhs(zbar, q, p, sig.y, sig.ubar, params_, nominal_, out(ozbar(), nz_), out(oq(), nu_), out(op(), nu_),
                     satq_, sig);

        for (int i = 0; i < nz_; ++i)
            dzv_[static_cast<std::size_t>(i)] = plant_.dz.empty() ? 0.0 : plant_.dz[static_cast<std::size_t>(i)](t);
        const Vars pv{x, z, dzv_, {}, sig.y};
        const double f = plant_.f(pv), g = plant_.g(pv);
        for (int i = 0; i + 1 < nu_; ++i) ds[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i + 1)];
        ds[static_cast<std::size_t>(nu_ - 1)] = f + g * (sig.u + d);
        for (int i = 0; i < nz_; ++i) ds[static_cast<std::size_t>(oz() + i)] = plant_.h[static_cast<std::size_t>(i)](pv);

        const Vars nv{x, zbar, {}, {}, sig.y};
        if (!(g > 0.0)) throw Error("plant gain g(x, z) is not positive at the current state");
        sig.u_desired = -d + (-f + nominal_.f_n(nv) + nominal_.g_n(nv) * sig.ubar) / g;

        if (!with_nominal_) return;
        const auto xn = seg(s, oxn(), nu_), zbn = seg(s, ozbarn(), nz_), etan = seg(s, oetan(), m_);
        const Vars ncv{{}, {}, {}, etan, xn[0]};
        const double ubar_n = controller_.pi(ncv);
        for (int i = 0; i < m_; ++i)
            ds[static_cast<std::size_t>(oetan() + i)] = controller_.Pi[static_cast<std::size_t>(i)](ncv);
        const Vars nnv{xn, zbn, {}, {}, xn[0]};
        for (int i = 0; i + 1 < nu_; ++i) ds[static_cast<std::size_t>(oxn() + i)] = xn[static_cast<std::size_t>(i + 1)];
        ds[static_cast<std::size_t>(oxn() + nu_ - 1)] = nominal_.f_n(nnv) + nominal_.g_n(nnv) * ubar_n;
        for (int i = 0; i < nz_; ++i)
            ds[static_cast<std::size_t>(ozbarn() + i)] = nominal_.h_n[static_cast<std::size_t>(i)](nnv);
    }

    [[nodiscard]] double deviation(const std::vector<double>& s) const {
        double sum = 0.0;
        auto acc = [&](int a, int b, int len) {
            for (int i = 0; i < len; ++i) {
                const double e = s[static_cast<std::size_t>(a + i)] - s[static_cast<std::size_t>(b + i)];
                sum += e * e;
            }
        };
        acc(ozbar(), ozbarn(), nz_);
        acc(ox(), oxn(), nu_);
        acc(oeta(), oetan(), m_);
        return std::sqrt(sum);
    }

private:
    const NormalFormPlant& plant_;
    const NominalModel& nominal_;
    const BaselineController& controller_;
    const DobParams& params_;
    bool with_nominal_;
    int nu_, nz_, m_;
    std::vector<double> satq_;
    std::vector<double> dzv_;
};

void check_dimensions(const NormalFormPlant& plant, const NominalModel& nominal, const BaselineController& controller,
                      const DobParams& params) {
    plant.validate();
    nominal.validate(plant.nu, plant.nz());
    controller.validate();
    params.validate();
    if (params.qspec.nu != plant.nu) throw Error("dob: Q-filter order nu differs from the plant's relative degree");
}

std::vector<double> sized_or(const std::optional<std::vector<double>>& v, std::size_t n, const std::string& what) {
    if (!v) return std::vector<double>(n, 0.0);
    if (v->size() != n) throw Error("initial." + what + ": wrong dimension");
    return *v;
}

bool in_box(const std::vector<double>& v, const std::vector<Interval>& box) {
    if (box.empty()) return true;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!box[i].contains(v[i])) return false;
    return true;
}

}  // namespace

DobOutput dob_derivatives(const DobState& state, double y, double u_bar, const DobParams& params,
                          const NominalModel& nominal) {
    params.validate();
    const auto nu = static_cast<std::size_t>(params.qspec.nu);
    if (state.q.size() != nu || state.p.size() != nu) throw Error("dob: q and p must have nu entries");
    if (nominal.h_n.size() != state.zbar.size()) throw Error("dob: zbar and h_n dimensions differ");
    DobOutput out;
    out.derivative.zbar.resize(state.zbar.size());
    out.derivative.q.resize(nu);
    out.derivative.p.resize(nu);
    std::vector<double> satq(nu);
    Signals sig;
    observer_rhs(state.zbar, state.q, state.p, y, u_bar, params, nominal, out.derivative.zbar, out.derivative.q,
                 out.derivative.p, satq, sig);
    out.u = sig.u;
    out.phi = sig.phi;
    out.w = sig.w;
    return out;
}

double u_desired_oracle(std::span<const double> x, std::span<const double> z, std::span<const double> zbar,
                        double u_bar, const NormalFormPlant& plant, const NominalModel& nominal, double t) {
    const Vars pv{x, z, {}, {}, x.empty() ? 0.0 : x[0]};
    const double g = plant.g(pv);
    if (!(g > 0.0)) throw Error("u_desired_oracle: g(x, z) <= 0 (envelope violation)");
    const Vars nv{x, zbar, {}, {}, pv.y};
    return -plant.d(t) + (-plant.f(pv) + nominal.f_n(nv) + nominal.g_n(nv) * u_bar) / g;
}

DivergenceError::DivergenceError(double time, NonlinearRun partial)
    : Error([&] {
          std::ostringstream msg;
          msg << "divergence: state norm exceeded the threshold at t = " << time;
          return msg.str();
      }()),
      time_(time), partial_(std::move(partial)) {}

std::vector<std::string> nonlinear_state_names(const NormalFormPlant& plant, const BaselineController& controller) {
    std::vector<std::string> names;
    auto add = [&](const std::string& base, int len) {
        for (int i = 0; i < len; ++i) names.push_back(base + std::to_string(i + 1));
    };
    add("x", plant.nu);
    add("z", plant.nz());
    add("eta", controller.m);
    add("zbar", plant.nz());
    add("q", plant.nu);
    add("p", plant.nu);
    add("xN", plant.nu);
    add("zbarN", plant.nz());
    add("etaN", controller.m);
    return names;
}

void check_gain_on_envelope(const NormalFormPlant& plant, const Envelope& envelope, int n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(envelope.x.size()), z(envelope.z.size());
    for (int k = 0; k < n_samples; ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(envelope.x[i], rng);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = uniform(envelope.z[i], rng);
        const double g = plant.g.sampled(rng)(Vars{x, z, {}, {}, x.empty() ? 0.0 : x[0]});
        if (g < plant.g_lower - 1e-12 || g > plant.g_upper + 1e-12) {
            std::ostringstream msg;
            msg << "plant.g leaves [g_lower, g_upper] on the envelope (g = " << g << ")";
            throw Error(msg.str());
        }
    }
}

NonlinearRun simulate_nonlinear(const NormalFormPlant& plant, const NominalModel& nominal,
                                const BaselineController& controller, const DobParams& params,
                                const Envelope& envelope, const InitialState& initial,
                                const NonlinearSimOptions& options) {
    check_dimensions(plant, nominal, controller, params);
    envelope.validate(plant.nu, plant.nz(), controller.m);
    const double tau = params.qspec.tau;
    if (!(options.dt > 0.0) || !(options.t_end > 0.0)) throw Error("simulate_nonlinear: dt and t_end must be positive");
    if (options.dt > tau / 20.0 * (1.0 + 1e-12)) throw Error("step too large: dt must be <= tau/20");
    if (options.record_stride < 1) throw Error("simulate_nonlinear: record_stride must be >= 1");
    if (params.g_star < plant.g_lower || params.g_star > plant.g_upper)
        throw Error("dob: g_star must lie in [g_lower, g_upper]");
    check_gain_on_envelope(plant, envelope);
    {
        const auto disk = nyquist_disk_test_auto(plant.nu, params.qspec.a, {plant.g_lower, plant.g_upper, params.g_star});
        if (!disk.pass) throw Error("dob: Q coefficients fail the disk test for the plant gain interval");
    }

    const auto nu = static_cast<std::size_t>(plant.nu), nz = static_cast<std::size_t>(plant.nz()),
               m = static_cast<std::size_t>(controller.m);
    if (initial.x.size() != nu || initial.z.size() != nz || initial.eta.size() != m)
        throw Error("initial: x, z, eta dimensions do not match the plant and controller");
    if (options.check_initial_state &&
        !(in_box(initial.x, envelope.s0_x) && in_box(initial.z, envelope.s0_z) && in_box(initial.eta, envelope.s0_eta)))
        throw Error("initial: state lies outside the S0 box");
    const auto zbar0 = initial.zbar ? sized_or(initial.zbar, nz, "zbar") : initial.z;

    LoopModel model(plant, nominal, controller, params, true);
    std::vector<double> s(static_cast<std::size_t>(model.size()), 0.0);
    auto put = [&](int off, const std::vector<double>& v) { std::copy(v.begin(), v.end(), s.begin() + off); };
    put(model.ox(), initial.x);
    put(model.oz(), initial.z);
    put(model.oeta(), initial.eta);
    put(model.ozbar(), zbar0);
    put(model.oq(), sized_or(initial.q, nu, "q"));
    put(model.op(), sized_or(initial.p, nu, "p"));
    put(model.oxn(), initial.x);
    put(model.ozbarn(), zbar0);
    put(model.oetan(), initial.eta);

    std::vector<std::string> names{"y", "u", "ubar", "phi", "w", "u_desired", "d"};
    for (auto& n : nonlinear_state_names(plant, controller)) names.push_back(std::move(n));
    names.emplace_back("dev");
    NonlinearRun run{SimulationTrace(names), {}};
    auto& sum = run.summary;
    std::vector<double> row(names.size());

    const double late = 10.0 * tau;
    auto observe = [&](double t, const Signals& sig, bool store) {
        const double dev = model.deviation(s);
        sum.sup_dev = std::max(sum.sup_dev, dev);
        sum.max_abs_u = std::max(sum.max_abs_u, std::abs(sig.u));
        for (std::size_t i = 0; i < nz; ++i) sum.z_max = std::max(sum.z_max, std::abs(s[static_cast<std::size_t>(model.oz()) + i]));
        if (t > late) {
            sum.max_u_error = std::max(sum.max_u_error, std::abs(sig.u - sig.u_desired));
            sum.max_abs_phi_late = std::max(sum.max_abs_phi_late, std::abs(sig.phi));
            if (!params.sat_phi.contains(sig.phi)) sum.phi_saturated_late = true;
        }
        sum.t_final = t;
        if (!store) return;
        row[0] = sig.y;
        row[1] = sig.u;
        row[2] = sig.ubar;
        row[3] = sig.phi;
        row[4] = sig.w;
        row[5] = sig.u_desired;
        row[6] = sig.d;
        std::copy(s.begin(), s.end(), row.begin() + 7);
        row.back() = dev;
        run.trace.append(t, row);
    };

    const std::size_t dim = s.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    Signals sig, scratch;
    const double dt = options.dt;
    const auto steps = static_cast<long>(std::llround(options.t_end / dt));
    for (long step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        model.rhs(t, s, plant.d(t), k1, sig);
        observe(t, sig, step % options.record_stride == 0 || step == steps);
        if (step == steps) break;
        const double th = t + 0.5 * dt, d_half = plant.d(th);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
        model.rhs(th, tmp, d_half, k2, scratch);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
        model.rhs(th, tmp, d_half, k3, scratch);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + dt * k3[i];
        model.rhs(t + dt, tmp, plant.d(t + dt), k4, scratch);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm2 += s[i] * s[i];
        }
        if (!(std::sqrt(norm2) <= options.divergence_threshold)) {
            const double t_bad = t + dt;
            if (std::isfinite(norm2)) {
                model.rhs(t_bad, s, plant.d(t_bad), k1, sig);
                observe(t_bad, sig, true);
            }
            throw DivergenceError(t_bad, std::move(run));
        }
    }
    return run;
}

SimulationTrace simulate_nominal(const NominalModel& nominal, const BaselineController& controller, int nu, int nz,
                                 const InitialState& initial, double t_end, double dt, int record_stride) {
    nominal.validate(nu, nz);
    controller.validate();
    if (!(dt > 0.0) || !(t_end > 0.0) || record_stride < 1) throw Error("simulate_nominal: bad time grid");
    const auto snu = static_cast<std::size_t>(nu), snz = static_cast<std::size_t>(nz),
               sm = static_cast<std::size_t>(controller.m);
    if (initial.x.size() != snu || initial.z.size() != snz || initial.eta.size() != sm)
        throw Error("initial: x, z, eta dimensions do not match");
    std::vector<double> s(initial.x);
    const auto zbar0 = initial.zbar ? sized_or(initial.zbar, snz, "zbar") : initial.z;
    s.insert(s.end(), zbar0.begin(), zbar0.end());
    s.insert(s.end(), initial.eta.begin(), initial.eta.end());

    std::vector<std::string> names;
    for (int i = 0; i < nu; ++i) names.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < nz; ++i) names.push_back("zbar" + std::to_string(i + 1));
    for (int i = 0; i < controller.m; ++i) names.push_back("eta" + std::to_string(i + 1));
    SimulationTrace trace(names);

    auto rhs = [&](const std::vector<double>& v, std::vector<double>& out) {
        const std::span<const double> x(v.data(), snu), zb(v.data() + nu, snz), eta(v.data() + nu + nz, sm);
        const Vars cv{{}, {}, {}, eta, x[0]};
        const double ubar = controller.pi(cv);
        const Vars nv{x, zb, {}, {}, x[0]};
        for (std::size_t i = 0; i + 1 < snu; ++i) out[i] = x[i + 1];
        out[snu - 1] = nominal.f_n(nv) + nominal.g_n(nv) * ubar;
        for (std::size_t i = 0; i < snz; ++i) out[snu + i] = nominal.h_n[i](nv);
        for (std::size_t i = 0; i < sm; ++i) out[snu + snz + i] = controller.Pi[i](cv);
    };
    const std::size_t dim = s.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    const auto steps = static_cast<long>(std::llround(t_end / dt));
    for (long step = 0; step <= steps; ++step) {
        if (step % record_stride == 0 || step == steps) trace.append(static_cast<double>(step) * dt, s);
        if (step == steps) break;
        rhs(s, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = s[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return trace;
}

SimulationTrace nominal_part(const SimulationTrace& run) {
    std::vector<std::string> from, to;
    for (const auto& n : run.names()) {
        for (const char* base : {"xN", "zbarN", "etaN"}) {
            const std::string b = base;
            if (n.rfind(b, 0) == 0 && n.size() > b.size() && std::isdigit(static_cast<unsigned char>(n[b.size()]))) {
                from.push_back(n);
                to.push_back(b.substr(0, b.size() - 1) + n.substr(b.size()));
            }
        }
    }
    SimulationTrace out(to);
    std::vector<double> row(from.size());
    for (std::size_t k = 0; k < run.size(); ++k) {
        for (std::size_t i = 0; i < from.size(); ++i) row[i] = run.column(from[i])[k];
        out.append(run.t()[k], row);
    }
    return out;
}

TransientDeviation transient_deviation(const SimulationTrace& trace, const SimulationTrace& nominal_trace) {
    if (trace.size() != nominal_trace.size()) throw Error("transient_deviation: time grids differ");
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (std::abs(trace.t()[k] - nominal_trace.t()[k]) > 1e-9 * std::max(1.0, std::abs(trace.t()[k])))
            throw Error("transient_deviation: time grids differ");
    std::vector<std::string> cols;
    for (const auto& n : nominal_trace.names()) {
        const bool wanted = n.rfind("zbar", 0) == 0 || n.rfind("eta", 0) == 0 ||
                            (n.size() > 1 && n[0] == 'x' && std::isdigit(static_cast<unsigned char>(n[1])));
        if (!wanted) continue;
        if (!trace.has(n)) throw Error("transient_deviation: trace lacks column " + n);
        cols.push_back(n);
    }
    TransientDeviation out;
    for (const auto& c : cols) out.per_signal[c] = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        double sum = 0.0;
        for (const auto& c : cols) {
            const double e = trace.column(c)[k] - nominal_trace.column(c)[k];
            out.per_signal[c] = std::max(out.per_signal[c], std::abs(e));
            sum += e * e;
        }
        out.sup_dev = std::max(out.sup_dev, std::sqrt(sum));
    }
    return out;
}

StateSpace linearize_loop(const NormalFormPlant& plant, const NominalModel& nominal,
                          const BaselineController& controller, const DobParams& params, double h) {
    check_dimensions(plant, nominal, controller, params);
    LoopModel model(plant, nominal, controller, params, false);
    const auto n = static_cast<std::size_t>(model.size());
    StateSpace ss;
    ss.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    ss.B.resize(static_cast<Eigen::Index>(n), 1);
    ss.C.resize(2, static_cast<Eigen::Index>(n));
    ss.D.resize(2, 1);
    std::vector<double> s(n, 0.0), fp(n), fm(n);
    Signals sp, sm;
    for (std::size_t j = 0; j < n; ++j) {
        s[j] = h;
        model.rhs(0.0, s, 0.0, fp, sp);
        s[j] = -h;
        model.rhs(0.0, s, 0.0, fm, sm);
        s[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            ss.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2.0 * h);
        ss.C(0, static_cast<Eigen::Index>(j)) = (sp.y - sm.y) / (2.0 * h);
        ss.C(1, static_cast<Eigen::Index>(j)) = (sp.u - sm.u) / (2.0 * h);
    }
    model.rhs(0.0, s, h, fp, sp);
    model.rhs(0.0, s, -h, fm, sm);
    for (std::size_t i = 0; i < n; ++i) ss.B(static_cast<Eigen::Index>(i), 0) = (fp[i] - fm[i]) / (2.0 * h);
    ss.D(0, 0) = (sp.y - sm.y) / (2.0 * h);
    ss.D(1, 0) = (sp.u - sm.u) / (2.0 * h);
    return ss;
}

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

// Slow-manifold phi without the -d term, for one sampled point.
double s_phi_sample(const NormalFormPlant& plant, const NominalModel& nominal, const BaselineController& controller,
                    const Envelope& env, double g_star, std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<double> x(env.x.size()), z(env.z.size()), zbar(env.z.size()), eta(env.eta.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(env.x[i], rng);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = uniform(env.z[i], rng);
    for (std::size_t i = 0; i < zbar.size(); ++i) zbar[i] = uniform(env.z[i], rng);
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = uniform(env.eta[i], rng);
    const Field f = plant.f.sampled(rng), g = plant.g.sampled(rng);
    const Vars pv{x, z, {}, {}, x[0]};
    const Vars nv{x, zbar, {}, {}, x[0]};
    const double gv = g(pv);
    if (!(gv > 0.0)) throw Error("estimate_s_phi: g(x, z) <= 0 on the envelope");
    const double pi = controller.pi(Vars{{}, {}, {}, eta, x[0]});
    return (1.0 / gv - 1.0 / g_star) * (nominal.f_n(nv) + nominal.g_n(nv) * pi) - f(pv) / gv;
}

template <typename ForEach>
Interval s_phi_impl(const NormalFormPlant& plant, const NominalModel& nominal, const BaselineController& controller,
                    const Envelope& envelope, double g_star, int n_samples, std::uint64_t seed, ForEach&& for_each) {
    plant.validate();
    nominal.validate(plant.nu, plant.nz());
    controller.validate();
    envelope.validate(plant.nu, plant.nz(), controller.m);
    if (n_samples < 1) throw Error("estimate_s_phi: n_samples must be >= 1");
    if (!(g_star > 0.0)) throw Error("estimate_s_phi: g_star must be positive");
    std::vector<double> values(static_cast<std::size_t>(n_samples));
    for_each(static_cast<std::ptrdiff_t>(n_samples), [&](std::ptrdiff_t i) {
        values[static_cast<std::size_t>(i)] =
            s_phi_sample(plant, nominal, controller, envelope, g_star, seed, static_cast<std::uint64_t>(i));
    });
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    // -d is additive, so its extremes shift the range exactly.
    const double a = *lo - envelope.M_d, b = *hi + envelope.M_d;
    const double margin = kSPhiMargin * std::max(b - a, kSPhiMinSpan);
    return {a - margin, b + margin};
}

}  // namespace

Interval estimate_s_phi(const NormalFormPlant& plant, const NominalModel& nominal,
                        const BaselineController& controller, const Envelope& envelope, double g_star,
                        int n_samples, std::uint64_t seed) {
    return s_phi_impl(plant, nominal, controller, envelope, g_star, n_samples, seed,
                      [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index(n, body); });
}

Interval estimate_s_phi_serial(const NormalFormPlant& plant, const NominalModel& nominal,
                               const BaselineController& controller, const Envelope& envelope, double g_star,
                               int n_samples, std::uint64_t seed) {
    return s_phi_impl(plant, nominal, controller, envelope, g_star, n_samples, seed,
                      [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index_serial(n, body); });
}

}  // namespace dob
