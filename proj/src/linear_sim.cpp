#include "dob/linear_sim.hpp"

#include <cmath>
#include <sstream>

#include "dob/error.hpp"

namespace dob {

SimulationTrace simulate_linear(const StateSpace& loop, const SignalSpec& r, const SignalSpec& d, const SignalSpec& n,
                                double t_end, double dt, const LinearSimOptions& options) {
    loop.validate();
    r.validate();
    d.validate();
    n.validate();
    if (loop.inputs() != 3) throw Error("simulate_linear: loop must take inputs (r, d, n)");
    if (loop.outputs() < 1) throw Error("simulate_linear: loop has no outputs");
    if (!(dt > 0.0)) throw Error("simulate_linear: dt must be positive");
    if (!(t_end > 0.0)) throw Error("simulate_linear: t_end must be positive");
    if (options.record_stride < 1) throw Error("simulate_linear: record_stride must be >= 1");
    if (options.tau && dt > *options.tau / 20.0 * (1.0 + 1e-12)) throw Error("step too large: dt must be <= tau/20");

    const Eigen::Index k = loop.order();
    if (k > 0) {
        const auto ev = eigenvalues(loop.A);
        double fastest = 0.0, slowest_real = -1e300;
        for (const auto& l : ev) {
            fastest = std::max(fastest, std::abs(l));
            slowest_real = std::max(slowest_real, l.real());
        }
        if (fastest * dt > 0.5) throw Error("step too large for stiff loop");
        if (!options.allow_unstable && !(slowest_real < 0.0))
            throw Error("simulate_linear: loop is not internally stable (set allow_unstable to override)");
    }

    std::vector<std::string> names{"y"};
    if (loop.outputs() >= 2) names.push_back("u");
    for (const char* s : {"r", "d", "n"}) names.emplace_back(s);
    for (Eigen::Index i = 0; i < k; ++i) names.push_back("x" + std::to_string(i + 1));
    SimulationTrace trace(names);

    auto input = [&](double t) { return Eigen::Vector3d(r(t), d(t), n(t)); };
    Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
    std::vector<double> row(names.size());
    auto record = [&](double t) {
        const Eigen::Vector3d w = input(t);
        const Eigen::VectorXd out = loop.C * x + loop.D * w;
        std::size_t c = 0;
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(out.size(), 2); ++i) row[c++] = out[i];
        for (int i = 0; i < 3; ++i) row[c++] = w[i];
        for (Eigen::Index i = 0; i < k; ++i) row[c++] = x[i];
        trace.append(t, row);
    };

    const auto steps = static_cast<long>(std::llround(t_end / dt));
    record(0.0);
    for (long s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * dt;
        const Eigen::Vector3d w0 = input(t), wh = input(t + 0.5 * dt), w1 = input(t + dt);
        const Eigen::VectorXd k1 = loop.A * x + loop.B * w0;
        const Eigen::VectorXd k2 = loop.A * (x + 0.5 * dt * k1) + loop.B * wh;
        const Eigen::VectorXd k3 = loop.A * (x + 0.5 * dt * k2) + loop.B * wh;
        const Eigen::VectorXd k4 = loop.A * (x + dt * k3) + loop.B * w1;
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((s + 1) % options.record_stride == 0 || s + 1 == steps) record(static_cast<double>(s + 1) * dt);
    }
    return trace;
}

double transient_window(const StateSpace& loop) {
    if (loop.order() == 0) return 0.0;
    double slowest = -1e300;
    for (const auto& l : eigenvalues(loop.A)) slowest = std::max(slowest, l.real());
    if (!(slowest < 0.0)) throw Error("transient_window: loop is not stable");
    return 10.0 / -slowest;
}

std::vector<RecoveryRow> recovery_report(const TransferFunction& plant, const TransferFunction& nominal,
                                         const TransferFunction& controller, const QFilterSpec& qspec,
                                         const std::vector<double>& omegas) {
    const TransferFunction q = q_transfer(qspec);
    const auto loop = closed_loop_statespace(plant, nominal, controller, q);
    if (loop.ss.order() > 0 && !(max_real_eigenvalue(loop.ss.A) < 0.0)) {
        std::ostringstream msg;
        msg << "recovery_report: loop is unstable at tau = " << qspec.tau;
        throw Error(msg.str());
    }
    std::vector<RecoveryRow> rows;
    rows.reserve(omegas.size());
    for (double w : omegas) {
        if (!(w > 0.0)) throw Error("recovery_report: probe frequencies must be positive");
        const Complex s{0.0, w};
        const Complex P = plant(s), Pn = nominal(s), C = controller(s), Q = q(s);
        const Complex den = Pn * (1.0 + P * C) + Q * (P - Pn);
        const Complex tyr = Pn * P * C / den;
        const Complex tyd = Pn * P * (1.0 - Q) / den;
        const Complex target = Pn * C / (1.0 + Pn * C);
        rows.push_back({w, std::abs(tyr - target), std::abs(target), std::abs(tyd), std::abs(Pn / (1.0 + Pn * C))});
    }
    return rows;
}

}  // namespace dob
