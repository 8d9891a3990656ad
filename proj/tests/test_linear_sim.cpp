#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dob/benchmarks.hpp"
#include "dob/linear_sim.hpp"

using dob::SignalSpec;
using dob::TransferFunction;

namespace {

// Least-squares fit of a sin(wt) + b cos(wt) + c over t >= t_from.
double fitted_amplitude(const dob::SimulationTrace& tr, const std::string& col, double omega, double t_from) {
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    const auto& y = tr.column(col);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.t()[k] < t_from) continue;
        const Eigen::Vector3d phi(std::sin(omega * tr.t()[k]), std::cos(omega * tr.t()[k]), 1.0);
        M += phi * phi.transpose();
        v += phi * y[k];
    }
    const Eigen::Vector3d c = M.ldlt().solve(v);
    return std::hypot(c[0], c[1]);
}

dob::ClosedLoop b1_loop(double tau, const dob::PlantSample& plant) {
    auto b = dob::bench::b1();
    b.qspec.tau = tau;
    return dob::closed_loop_statespace(plant.transfer(), b.nominal.transfer(), b.controller, dob::q_transfer(b.qspec));
}

}  // namespace

TEST(Signal, Evaluation) {
    EXPECT_EQ(SignalSpec::zero()(3.0), 0.0);
    EXPECT_EQ(SignalSpec::step(2.0, 1.0)(0.5), 0.0);
    EXPECT_EQ(SignalSpec::step(2.0, 1.0)(1.0), 2.0);
    EXPECT_NEAR(SignalSpec::sinusoid(0.5, 2.0)(0.3), 0.5 * std::sin(0.6), 1e-15);
    const auto s = SignalSpec::sum({SignalSpec::step(1.0), SignalSpec::sinusoid(2.0, 1.0)});
    EXPECT_NEAR(s(1.0), 1.0 + 2.0 * std::sin(1.0), 1e-15);
    EXPECT_EQ(s.bound(), 3.0);
}

TEST(Signal, Validation) {
    EXPECT_THROW(SignalSpec::sinusoid(1.0, 0.0).validate(), dob::Error);
    EXPECT_THROW(SignalSpec::sum({}).validate(), dob::Error);
    EXPECT_THROW(dob::signal_kind_from_string("ramp"), dob::Error);
    EXPECT_EQ(dob::signal_kind_from_string("sum"), SignalSpec::Kind::sum);
}

TEST(SimulateLinear, ZeroInputsGiveZeroOutput) {
    const auto loop = b1_loop(1e-2, dob::bench::b1_perturbed());
    const auto tr = dob::simulate_linear(loop.ss, {}, {}, {}, 1.0, 5e-4, {false, 1e-2, 1});
    for (double y : tr.column("y")) EXPECT_EQ(y, 0.0);
    EXPECT_EQ(tr.size(), 2001U);
    EXPECT_TRUE(tr.has("x6"));
    EXPECT_FALSE(tr.has("x7"));
}

TEST(SimulateLinear, StepDisturbanceIsRejected) {
    const auto b = dob::bench::b1();
    const auto loop = b1_loop(1e-2, b.nominal);
    const auto tr = dob::simulate_linear(loop.ss, {}, SignalSpec::step(1.0), {}, 20.0, 5e-4);
    EXPECT_NEAR(tr.column("y").back(), 0.0, 1e-6);
}

TEST(SimulateLinear, LowFrequencyDisturbanceAttenuated) {
    const double tau = 1e-2, omega = 1.0 / tau / 100.0;
    const auto p = dob::bench::b1_perturbed();
    const auto loop = b1_loop(tau, p);
    const auto tr = dob::simulate_linear(loop.ss, {}, SignalSpec::sinusoid(1.0, omega), {}, 30.0, 5e-4, {false, tau, 1});
    const double open_loop = std::abs(p.transfer()(dob::Complex{0.0, omega}));
    EXPECT_LE(fitted_amplitude(tr, "y", omega, dob::transient_window(loop.ss)), 0.05 * open_loop);
}

TEST(SimulateLinear, StiffnessAndStepGuards) {
    const auto loop = b1_loop(1e-3, dob::bench::b1_perturbed());
    try {
        dob::simulate_linear(loop.ss, {}, {}, {}, 1.0, 1e-2);
        FAIL() << "expected a stiffness error";
    } catch (const dob::Error& e) {
        EXPECT_STREQ(e.what(), "step too large for stiff loop");
    }
    EXPECT_THROW(dob::simulate_linear(loop.ss, {}, {}, {}, 1.0, 1e-4, {false, 1e-3, 1}), dob::Error);
    EXPECT_THROW(dob::simulate_linear(loop.ss, {}, {}, {}, 1.0, 0.0), dob::Error);
}

TEST(SimulateLinear, UnstableLoopNeedsOptIn) {
    const auto b = dob::bench::unstable_nominal();
    const auto loop = dob::closed_loop_statespace(b.nominal.transfer(), b.nominal.transfer(), b.controller,
                                                  dob::q_transfer(b.qspec));
    EXPECT_THROW(dob::simulate_linear(loop.ss, {}, {}, {}, 1.0, 1e-3), dob::Error);
    const auto tr = dob::simulate_linear(loop.ss, {}, SignalSpec::step(1.0), {}, 5.0, 1e-3, {true, {}, 10});
    EXPECT_GT(std::abs(tr.column("y").back()), 1.0);
}

TEST(SimulateLinear, Rk4FourthOrderSlope) {
    const auto loop = b1_loop(0.1, dob::bench::b1_perturbed());
    const auto r = SignalSpec::sinusoid(1.0, 3.0);
    const auto d = SignalSpec::sinusoid(0.5, 1.0);
    const double t_end = 2.0;
    const double ref = dob::simulate_linear(loop.ss, r, d, {}, t_end, 1e-4).column("y").back();
    std::vector<double> lx, ly;
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        const double y = dob::simulate_linear(loop.ss, r, d, {}, t_end, dt).column("y").back();
        lx.push_back(std::log(dt));
        ly.push_back(std::log(std::abs(y - ref)));
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    EXPECT_GE((n * sxy - sx * sy) / (n * sxx - sx * sx), 3.7);
}

TEST(SimulateLinear, TimeDomainMatchesFrequencyResponse) {
    const double tau = 1e-2;
    const auto b = dob::bench::b1();
    const auto p = dob::bench::b1_perturbed();
    const auto loop = b1_loop(tau, p);
    auto q = b.qspec;
    q.tau = tau;
    const auto tf = dob::loop_transfers(p.transfer(), b.nominal.transfer(), b.controller, dob::q_transfer(q));
    for (double omega : {2.0, 20.0}) {
        const auto tr = dob::simulate_linear(loop.ss, {}, SignalSpec::sinusoid(0.7, omega), {}, 25.0, 5e-4, {false, tau, 1});
        const double expected = 0.7 * std::abs(tf.d_to_y(dob::Complex{0.0, omega}));
        EXPECT_NEAR(fitted_amplitude(tr, "y", omega, dob::transient_window(loop.ss)), expected, 0.02 * expected);
    }
}

TEST(SimulateLinear, HighFrequencyNoisePassesLikeTheOuterLoop) {
    // First-order plant under a stiff static controller: |Q| << |Pn C| above 1/tau.
    const TransferFunction P(dob::Polynomial{1.2}, dob::Polynomial{2.0, 1.0});
    const TransferFunction Pn(dob::Polynomial{1.0}, dob::Polynomial{1.0, 1.0});
    const TransferFunction C(dob::Polynomial{100.0}, dob::Polynomial{1.0});
    const dob::QFilterSpec qs{1, {1.0}, 1.0};
    const auto loop = dob::closed_loop_statespace(P, Pn, C, dob::q_transfer(qs));
    const double omega = 1000.0;
    const auto tr = dob::simulate_linear(loop.ss, {}, {}, SignalSpec::sinusoid(1.0, omega), 12.0, 2e-5);
    const dob::Complex s{0.0, omega};
    const double expected = std::abs(P(s) * C(s) / (1.0 + P(s) * C(s)));
    EXPECT_NEAR(fitted_amplitude(tr, "y", omega, dob::transient_window(loop.ss)), expected, 0.05 * expected);
}

TEST(SimulateLinear, RecordStrideAndCsv) {
    const auto loop = b1_loop(0.1, dob::bench::b1_perturbed());
    const auto tr = dob::simulate_linear(loop.ss, SignalSpec::step(1.0), {}, {}, 1.0, 1e-3, {false, {}, 100});
    EXPECT_EQ(tr.size(), 11U);
    EXPECT_NEAR(tr.t()[1], 0.1, 1e-12);
    std::ostringstream os;
    tr.write_csv(os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,y,u,r,d,n,x1,x2,x3,x4,x5,x6");
}

TEST(RecoveryReport, LowFrequencyDisturbanceVanishes) {
    const auto b = dob::bench::b1();
    auto q = b.qspec;
    q.tau = 1e-3;
    const auto rows = dob::recovery_report(dob::bench::b1_perturbed().transfer(), b.nominal.transfer(), b.controller, q,
                                           {1e-6, 1e-4, 1e-2});
    EXPECT_LT(rows[0].yd, 1e-8);
    EXPECT_LT(rows[0].yd, rows[2].yd);
}

TEST(RecoveryReport, NominalPlantRecoversExactly) {
    const auto b = dob::bench::b1();
    const auto rows = dob::recovery_report(b.nominal.transfer(), b.nominal.transfer(), b.controller, b.qspec,
                                           dob::logspace(1e-2, 1e3, 30));
    for (const auto& r : rows) EXPECT_LT(r.yr_deviation, 1e-12 * std::max(1.0, r.yr_nominal));
}

TEST(RecoveryReport, BenchmarkBandBounds) {
    const auto b = dob::bench::b1();
    auto q = b.qspec;
    q.tau = 1e-3;
    const auto rows = dob::recovery_report(dob::bench::b1_perturbed().transfer(), b.nominal.transfer(), b.controller, q,
                                           dob::logspace(1e-3, 10.0, 80));
    for (const auto& r : rows) {
        EXPECT_LE(r.yd, 0.05 * r.yd_nominal) << r.omega;
        EXPECT_LE(r.yr_deviation, 0.05 * r.yr_nominal) << r.omega;
    }
}

TEST(RecoveryReport, UnstableLoopThrows) {
    const auto b = dob::bench::disk_violation();
    auto q = b.qspec;
    q.tau = 1e-3;
    dob::PlantSample p = b.nominal;
    p.g = 4.0;
    EXPECT_THROW(dob::recovery_report(p.transfer(), b.nominal.transfer(), b.controller, q, {1.0}), dob::Error);
}
