#pragma once

#include <span>
#include <vector>

#include "dob/error.hpp"
#include "dob/polynomial.hpp"
#include "dob/transfer_function.hpp"

namespace dob {

/// Q(s) = a0 / ((tau s)^nu + a_{nu-1} (tau s)^{nu-1} + ... + a1 (tau s) + a0).
struct QFilterSpec {
    int nu = 1;
    std::vector<double> a;  // a0 .. a_{nu-1}
    double tau = 0.1;

    /// Throws dob::Error unless a0 > 0, a.size() == nu, tau > 0.
    void validate() const;
};

/// Plant high-frequency gain interval with the nominal value g*.
struct GainInterval {
    double g_lower = 1.0;
    double g_upper = 1.0;
    double g_star = 1.0;

    void validate() const;
};

TransferFunction q_transfer(const QFilterSpec& spec);

/// p_f(s) = s^nu + a_{nu-1} s^{nu-1} + ... + a1 s + (g/g*) a0; independent of tau.
Polynomial fast_char_poly(const QFilterSpec& spec, double g, double g_star);
Polynomial fast_char_poly(std::span<const double> a, double g, double g_star);

/// s^{nu-1} + a_{nu-1} s^{nu-2} + ... + a1 (the constant 1 when nu == 1).
Polynomial reduced_poly(std::span<const double> a);

/// Open-loop G(s) = a0 / (s^nu + a_{nu-1} s^{nu-1} + ... + a1 s).
TransferFunction disk_test_plant(std::span<const double> a);

/// Closed disk with diameter [-g*/g_lower, -g*/g_upper] on the real axis.
struct Disk {
    double center = -1.0;
    double radius = 0.0;
};
Disk critical_disk(const GainInterval& gains);

/// Raised when consecutive Nyquist samples turn by more than pi/2 about the disk center.
class GridTooCoarse : public Error {
public:
    using Error::Error;
};

struct DiskTestReport {
    bool pass = false;
    double min_distance = 0.0;  // signed: negative inside the disk
    int encirclements = 0;
    Disk disk;
};

/// Log-spaced grid wide enough for the disk test: |G(j w_min)| > 10 (|c| + r) and
/// |G(j w_max)| < 0.01 (|c| - r).
std::vector<double> disk_test_grid(std::span<const double> a, const GainInterval& gains, int points_per_decade = 200);

/// Circle-criterion check that p_f stays Hurwitz for every g in the gain interval.
/// Throws dob::Error("choose a1..a_{nu-1} Hurwitz first") when the reduced
/// polynomial is not Hurwitz, GridTooCoarse when the sampled contour is too coarse.
DiskTestReport nyquist_disk_test(int nu, std::span<const double> a, const GainInterval& gains,
                                 std::span<const double> omega_grid);

/// nyquist_disk_test on disk_test_grid, doubling the grid density (200 up to 3200
/// points per decade) while the contour is too coarse.
DiskTestReport nyquist_disk_test_auto(int nu, std::span<const double> a, const GainInterval& gains);

inline constexpr double kDiskSafetyFraction = 0.05;

/// min_distance a design has to keep: safety_fraction * (|c| - r), i.e. a fraction of
/// the gap between the origin and the disk (equals safety_fraction * |c| for a point disk).
double disk_safety_threshold(const GainInterval& gains, double safety_fraction = kDiskSafetyFraction);

struct A0Design {
    double a0 = 0.0;
    int halvings = 0;
    DiskTestReport report;
};

/// Largest a0 = a0_initial 2^{-k}, 0 <= k <= 60, whose disk test passes with the
/// safety margin. Throws dob::Error("gain interval too wide for this a-tail").
A0Design design_a0(int nu, std::span<const double> a_tail, const GainInterval& gains, double a0_initial,
                   double safety_fraction = kDiskSafetyFraction);

/// Brute-force companion of the disk test: is p_f Hurwitz at `points` gains spread
/// uniformly over [g_lower, g_upper]? Serial and OpenMP variants agree exactly.
struct GainSweep {
    bool all_hurwitz = true;
    double worst_real_part = 0.0;
    double worst_gain = 0.0;
};
GainSweep gain_grid_sweep(std::span<const double> a, const GainInterval& gains, int points = 1000);
GainSweep gain_grid_sweep_serial(std::span<const double> a, const GainInterval& gains, int points = 1000);

}  // namespace dob
