#pragma once

#include "dob/nonlinear.hpp"
#include "dob/robust_analysis.hpp"

namespace dob::bench {

/// Linear benchmark loop: plant family, stabilizing controller and Q filter.
struct LinearBenchmark {
    PlantFamily family;
    PlantSample nominal;
    TransferFunction controller;
    QFilterSpec qspec;
};

/// n=2, nu=1; alpha1 in [2,4], alpha0 in [1,3], beta0 in [1,2], g in [0.8,1.25];
/// C = 5(s+1)/(s+10); a = [1].
LinearBenchmark b1();

/// The B1 vertex alpha = (1,4), beta0 = 2, g = 1.25 used for pole-locus checks.
PlantSample b1_perturbed();

/// Fixtures that break exactly one robust-stability hypothesis each.
LinearBenchmark unstable_nominal();      // C = 0 around an unstable Pn
LinearBenchmark non_minimum_phase();     // beta0 interval reaches the right half plane
LinearBenchmark disk_violation();        // nu = 3 with too wide a gain interval

struct NonlinearBenchmark {
    NormalFormPlant plant;
    NominalModel nominal;
    BaselineController controller;
    DobParams params;
    Envelope envelope;
    InitialState initial;
    double t_end = 10.0;
};

/// nu=2, n=3: f = th1 x1 x2 + th2 z, g = 1 + th3 x1^2 clipped to [0.5, 2], h = -z + x1 + dz;
/// instance at 120% of the nominal th1 = 0.5, th2 = 1 and th3 = 0.2 (nominal 0);
/// observer-based output feedback; d = 0.5 sin(2t); a = [9, 6]; S_phi from estimate_s_phi.
NonlinearBenchmark n1(double tau);

/// Number of samples and seed behind the N1 saturation level.
inline constexpr int kN1SPhiSamples = 20000;
inline constexpr std::uint64_t kN1SPhiSeed = 1;

/// Fully linear instance (nu = n = 2, m = 1) with the saturations opened wide.
NonlinearBenchmark linear_instance(double tau);

/// Transfer functions of the linear instance written out by hand.
struct LinearEquivalent {
    TransferFunction plant;
    TransferFunction nominal;
    TransferFunction controller;
};
LinearEquivalent linear_instance_transfers();

}  // namespace dob::bench
