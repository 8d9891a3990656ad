#include "dob/benchmarks.hpp"

namespace dob::bench {

namespace {

LinearBenchmark finish(LinearBenchmark b) {
    b.nominal = b.family.nominal();
    return b;
}

}  // namespace

LinearBenchmark b1() {
    LinearBenchmark b;
    b.family.n = 2;
    b.family.nu = 1;
    b.family.alpha_bounds = {{1.0, 3.0}, {2.0, 4.0}};
    b.family.beta_bounds = {{1.0, 2.0}};
    b.family.gain = {0.8, 1.25, 1.025};
    b.controller = TransferFunction(Polynomial{5.0, 5.0}, Polynomial{10.0, 1.0});
    b.qspec = {1, {1.0}, 0.1};
    return finish(b);
}

PlantSample b1_perturbed() {
    PlantSample s;
    s.alpha = {1.0, 4.0};
    s.beta = {2.0};
    s.g = 1.25;
    s.provenance = Provenance::vertex;
    return s;
}

LinearBenchmark unstable_nominal() {
    LinearBenchmark b;
    b.family.n = 2;
    b.family.nu = 1;
    b.family.alpha_bounds = {{-1.0, -1.0}, {1.0, 1.0}};  // s^2 + s - 1 has a root at +0.618
    b.family.beta_bounds = {{1.0, 1.0}};
    b.family.gain = {1.0, 1.0, 1.0};
    b.controller = TransferFunction{};
    b.qspec = {1, {1.0}, 0.1};
    return finish(b);
}

LinearBenchmark non_minimum_phase() {
    LinearBenchmark b = b1();
    b.family.alpha_bounds = {{2.0, 2.0}, {3.0, 3.0}};
    b.family.beta_bounds = {{-1.0, 3.0}};
    b.family.gain = {1.0, 1.0, 1.0};
    return finish(b);
}

LinearBenchmark disk_violation() {
    LinearBenchmark b;
    b.family.n = 3;
    b.family.nu = 3;
    b.family.alpha_bounds = {{1.0, 1.0}, {3.0, 3.0}, {3.0, 3.0}};
    b.family.gain = {0.25, 4.0, 1.0};
    b.controller = TransferFunction(Polynomial{1.0}, Polynomial{1.0});
    b.qspec = {3, {5.0, 2.0, 3.0}, 0.1};
    return finish(b);
}

NonlinearBenchmark n1(double tau) {
    NonlinearBenchmark b;
    auto& P = b.plant;
    P.nu = 2;
    P.n = 3;
    P.f.add(0.6, {{"x1", 1}, {"x2", 1}}, Interval{0.4, 0.6}).add(1.2, {{"z1", 1}}, Interval{0.8, 1.2});
    P.g = Field::constant(1.0);
    P.g.add(0.2, {{"x1", 2}}, Interval{-0.2, 0.2});
    P.g.clip = Interval{0.5, 2.0};
    P.h = {Field{}.add(-1.0, {{"z1", 1}}).add(1.0, {{"x1", 1}}).add(1.0, {{"dz1", 1}})};
    P.d = SignalSpec::sinusoid(0.5, 2.0);
    P.g_lower = 0.5;
    P.g_upper = 2.0;

    b.nominal.f_n.add(0.5, {{"x1", 1}, {"x2", 1}}).add(1.0, {{"z1", 1}});
    b.nominal.h_n = {Field{}.add(-1.0, {{"z1", 1}}).add(1.0, {{"x1", 1}})};

    // ubar = -k1 y - k2 eta2 with an observer (l1, l2) of the double integrator
    constexpr double k1 = 8.0, k2 = 3.0, l1 = 16.0, l2 = 64.0;
    b.controller.m = 2;
    b.controller.Pi = {Field{}.add(1.0, {{"eta2", 1}}).add(l1, {{"y", 1}}).add(-l1, {{"eta1", 1}}),
                       Field{}.add(l2 - k1, {{"y", 1}}).add(-l2, {{"eta1", 1}}).add(-k2, {{"eta2", 1}})};
    b.controller.pi = Field{}.add(-k1, {{"y", 1}}).add(-k2, {{"eta2", 1}});

    auto& E = b.envelope;
    E.x = {{-2.0, 2.0}, {-4.0, 4.0}};
    E.z = {{-3.0, 3.0}};
    E.eta = {{-4.0, 4.0}, {-4.0, 4.0}};
    E.M_d = 0.5;
    E.s0_x = {{-1.0, 1.0}, {-1.0, 1.0}};
    E.s0_z = {{-0.5, 0.5}};
    E.s0_eta = {{-0.5, 0.5}, {-0.5, 0.5}};

    b.params.qspec = {2, {9.0, 6.0}, tau};
    b.params.g_star = 1.0;
    b.params.sat_x = E.x;
    b.params.sat_phi = estimate_s_phi(P, b.nominal, b.controller, E, b.params.g_star, kN1SPhiSamples, kN1SPhiSeed);

    b.initial.x = {0.5, 0.0};
    b.initial.z = {0.2};
    b.initial.eta = {0.0, 0.0};
    b.t_end = 10.0;
    return b;
}

NonlinearBenchmark linear_instance(double tau) {
    NonlinearBenchmark b;
    auto& P = b.plant;
    P.nu = 2;
    P.n = 2;
    P.f.add(-1.5, {{"x1", 1}}).add(-3.5, {{"x2", 1}});
    P.g = Field::constant(1.2);
    P.d = SignalSpec::sum({SignalSpec::sinusoid(0.5, 2.0), SignalSpec::step(0.3, 1.0)});
    P.g_lower = 0.8;
    P.g_upper = 1.25;

    b.nominal.f_n.add(-2.0, {{"x1", 1}}).add(-3.0, {{"x2", 1}});

    // C = 5(s+1)/(s+10) = 5 - 45/(s+10) acting on -y
    b.controller.m = 1;
    b.controller.Pi = {Field{}.add(-10.0, {{"eta1", 1}}).add(1.0, {{"y", 1}})};
    b.controller.pi = Field{}.add(-5.0, {{"y", 1}}).add(45.0, {{"eta1", 1}});

    constexpr double wide = 1e6;
    auto& E = b.envelope;
    E.x = {{-wide, wide}, {-wide, wide}};
    E.eta = {{-wide, wide}};
    E.M_d = 1.0;

    b.params.qspec = {2, {1.0, 2.0}, tau};
    b.params.g_star = 1.0;
    b.params.sat_x = E.x;
    b.params.sat_phi = {-wide, wide};

    b.initial.x = {0.0, 0.0};
    b.initial.eta = {0.0};
    b.t_end = 10.0;
    return b;
}

LinearEquivalent linear_instance_transfers() {
    return {TransferFunction(Polynomial{1.2}, Polynomial{1.5, 3.5, 1.0}),
            TransferFunction(Polynomial{1.0}, Polynomial{2.0, 3.0, 1.0}),
            TransferFunction(Polynomial{5.0, 5.0}, Polynomial{10.0, 1.0})};
}

}  // namespace dob::bench
