#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dob/field.hpp"
#include "dob/qfilter.hpp"
#include "dob/signal.hpp"
#include "dob/state_space.hpp"
#include "dob/trace.hpp"

namespace dob {

/// Normal-form plant: x_i' = x_{i+1} (i < nu), x_nu' = f(x,z) + g(x,z)(u + d),
/// z' = h(x, z, dz), y = x1. Ranged coefficients describe the uncertainty class;
/// the coefficient values are the instance being simulated.
struct NormalFormPlant {
    int nu = 1;
    int n = 1;
    Field f;
    Field g = Field::constant(1.0);
    std::vector<Field> h;  // n - nu entries over (x, z, dz)
    SignalSpec d;
    std::vector<SignalSpec> dz;  // n - nu entries; empty means zero
    double g_lower = 1.0;
    double g_upper = 1.0;

    [[nodiscard]] int nz() const { return n - nu; }
    void validate() const;
};

/// Nominal model over (x, z-bar); z-bar is read through the z variables.
struct NominalModel {
    Field f_n;
    Field g_n = Field::constant(1.0);
    std::vector<Field> h_n;

    void validate(int nu, int nz) const;
};

/// eta' = Pi(eta, y), ubar = pi(eta, y).
struct BaselineController {
    int m = 0;
    std::vector<Field> Pi;
    Field pi;

    void validate() const;
};

struct DobParams {
    QFilterSpec qspec;
    double g_star = 1.0;
    std::vector<Interval> sat_x;  // nu entries
    Interval sat_phi{-1.0, 1.0};
    std::optional<double> smoothing_width;  // default: 10% of each identity span

    void validate() const;
    [[nodiscard]] double width_for(const Interval& identity) const;
};

struct Envelope {
    std::vector<Interval> x;    // U_x
    std::vector<Interval> z;    // Z, also used for z-bar
    std::vector<Interval> eta;  // controller part of U
    double M_d = 0.0;
    double M_dz = 0.0;
    std::vector<Interval> s0_x;
    std::vector<Interval> s0_z;
    std::vector<Interval> s0_eta;

    void validate(int nu, int nz, int m) const;
};

struct InitialState {
    std::vector<double> x;
    std::vector<double> z;
    std::vector<double> eta;
    std::optional<std::vector<double>> zbar;  // defaults to z
    std::optional<std::vector<double>> q;     // defaults to zero
    std::optional<std::vector<double>> p;     // defaults to zero
};

/// C^1 saturation: identity on [lo, hi], Hermite blend over a band of `width`,
/// constant hi + width/2 (lo - width/2) beyond it.
double smooth_sat(double v, double lo, double hi, double width);
double smooth_sat_derivative(double v, double lo, double hi, double width);

struct DobState {
    std::vector<double> zbar;
    std::vector<double> q;
    std::vector<double> p;
};

struct DobOutput {
    DobState derivative;
    double u = 0.0;
    double phi = 0.0;
    double w = 0.0;
};

/// Right-hand side of the observer: z-bar, q, p derivatives and the control u.
/// Both the q and p input gains are a0/tau^nu, which gives the q chain unit DC gain.
DobOutput dob_derivatives(const DobState& state, double y, double u_bar, const DobParams& params,
                          const NominalModel& nominal);

/// Omniscient control that makes the plant behave like the nominal model:
/// -d + (-f(x,z) + f_n(x,zbar) + g_n(x,zbar) ubar) / g(x,z).
double u_desired_oracle(std::span<const double> x, std::span<const double> z, std::span<const double> zbar,
                        double u_bar, const NormalFormPlant& plant, const NominalModel& nominal, double t);

struct NonlinearSimOptions {
    double t_end = 10.0;
    double dt = 1e-4;
    int record_stride = 1;
    double divergence_threshold = 1e6;
    bool check_initial_state = true;  // initial (x, z, eta) inside the S0 boxes
};

/// Statistics gathered at every integration step, independent of record_stride.
struct NonlinearSummary {
    double sup_dev = 0.0;       // sup |(zbar, x, eta) - nominal|
    double max_abs_u = 0.0;
    double max_u_error = 0.0;   // sup |u - u_desired| for t > 10 tau
    double z_max = 0.0;         // sup |z|_inf
    double max_abs_phi_late = 0.0;  // sup |phi| for t > 10 tau
    bool phi_saturated_late = false;  // phi left S_phi for some t > 10 tau
    double t_final = 0.0;
};

struct NonlinearRun {
    SimulationTrace trace;
    NonlinearSummary summary;
};

class DivergenceError : public Error {
public:
    DivergenceError(double time, NonlinearRun partial);
    [[nodiscard]] double time() const { return time_; }
    [[nodiscard]] const NonlinearRun& partial() const { return partial_; }

private:
    double time_;
    NonlinearRun partial_;
};

/// Names of the stacked closed-loop state: x, z, eta, zbar, q, p, then the
/// nominal co-simulation xN, zbarN, etaN.
std::vector<std::string> nonlinear_state_names(const NormalFormPlant& plant, const BaselineController& controller);

/// Full closed loop of plant, baseline controller and observer, co-simulated with
/// the nominal loop started from the same (zbar, x, eta). Fixed-step RK4, dt <= tau/20.
/// Trace columns: y, u, ubar, phi, w, u_desired, d, the states, dev.
NonlinearRun simulate_nonlinear(const NormalFormPlant& plant, const NominalModel& nominal,
                                const BaselineController& controller, const DobParams& params,
                                const Envelope& envelope, const InitialState& initial,
                                const NonlinearSimOptions& options);

/// The nominal closed loop alone; trace columns x#, zbar#, eta#.
SimulationTrace simulate_nominal(const NominalModel& nominal, const BaselineController& controller, int nu, int nz,
                                 const InitialState& initial, double t_end, double dt, int record_stride = 1);

/// Extracts the co-simulated nominal columns (xN#, ...) of a run under the names x#, zbar#, eta#.
SimulationTrace nominal_part(const SimulationTrace& run);

struct TransientDeviation {
    double sup_dev = 0.0;
    std::map<std::string, double> per_signal;
};

/// sup_t |(zbar, x, eta)(t) - nominal(t)|; z is not part of the metric.
TransientDeviation transient_deviation(const SimulationTrace& trace, const SimulationTrace& nominal_trace);

/// Jacobian of the closed-loop right-hand side at the origin with respect to the
/// state and to d, by central differences with step h. Outputs y and u. Exact up to
/// rounding for linear instances.
StateSpace linearize_loop(const NormalFormPlant& plant, const NominalModel& nominal,
                          const BaselineController& controller, const DobParams& params, double h = 1.0);

inline constexpr double kSPhiMargin = 0.25;
inline constexpr double kSPhiMinSpan = 1e-3;

/// Monte-Carlo range of the slow-manifold value of phi over the envelope and the
/// coefficient ranges of f and g, widened by 25% of its span on each side.
Interval estimate_s_phi(const NormalFormPlant& plant, const NominalModel& nominal,
                        const BaselineController& controller, const Envelope& envelope, double g_star,
                        int n_samples, std::uint64_t seed);
Interval estimate_s_phi_serial(const NormalFormPlant& plant, const NominalModel& nominal,
                               const BaselineController& controller, const Envelope& envelope, double g_star,
                               int n_samples, std::uint64_t seed);

/// Samples g over the envelope and coefficient ranges; throws if it leaves [g_lower, g_upper].
void check_gain_on_envelope(const NormalFormPlant& plant, const Envelope& envelope, int n_samples = 1000,
                            std::uint64_t seed = 0);

}  // namespace dob
