#pragma once

#include <optional>
#include <vector>

#include "dob/qfilter.hpp"
#include "dob/signal.hpp"
#include "dob/state_space.hpp"
#include "dob/trace.hpp"

namespace dob {

struct LinearSimOptions {
    bool allow_unstable = false;
    std::optional<double> tau;  // enforces dt <= tau/20 when set
    int record_stride = 1;
};

/// Fixed-step RK4 from the zero state. The loop takes inputs (r, d, n) and
/// produces y (and u when it has a second output). Trace columns:
/// y, u, r, d, n, x1..xk.
SimulationTrace simulate_linear(const StateSpace& loop, const SignalSpec& r, const SignalSpec& d, const SignalSpec& n,
                                double t_end, double dt, const LinearSimOptions& options = {});

/// 10 / |Re| of the slowest closed-loop eigenvalue.
double transient_window(const StateSpace& loop);

struct RecoveryRow {
    double omega = 0.0;
    double yr_deviation = 0.0;  // |T_yr - PnC/(1+PnC)|
    double yr_nominal = 0.0;    // |PnC/(1+PnC)|
    double yd = 0.0;            // |T_yd|
    double yd_nominal = 0.0;    // |Pn/(1+PnC)|
};

/// Evaluates the loop transfers pointwise at each probe frequency. Throws if the
/// loop at qspec.tau is not internally stable.
std::vector<RecoveryRow> recovery_report(const TransferFunction& plant, const TransferFunction& nominal,
                                         const TransferFunction& controller, const QFilterSpec& qspec,
                                         const std::vector<double>& omegas);

}  // namespace dob
