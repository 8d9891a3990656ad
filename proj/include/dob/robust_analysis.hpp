#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dob/qfilter.hpp"
#include "dob/state_space.hpp"

namespace dob {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool degenerate() const { return lower == upper; }
    [[nodiscard]] double mid() const { return 0.5 * (lower + upper); }
    [[nodiscard]] bool contains(double v) const { return v >= lower && v <= upper; }
};

enum class Provenance { vertex, random, nominal };

const char* to_string(Provenance p);

/// One member P(s) = g (s^{n-nu} + beta...) / (s^n + alpha...) of the family.
struct PlantSample {
    std::vector<double> alpha;  // alpha_0 .. alpha_{n-1}
    std::vector<double> beta;   // beta_0 .. beta_{n-nu-1}
    double g = 1.0;
    Provenance provenance = Provenance::nominal;
    int id = 0;

    [[nodiscard]] Polynomial numerator() const;    // monic, degree n - nu
    [[nodiscard]] Polynomial denominator() const;  // monic, degree n
    [[nodiscard]] TransferFunction transfer() const;
};

/// Interval plant family: alpha_i, beta_i and g each range over a known interval.
struct PlantFamily {
    int n = 1;
    int nu = 1;
    std::vector<Interval> alpha_bounds;
    std::vector<Interval> beta_bounds;
    GainInterval gain;

    void validate() const;
    [[nodiscard]] int parameter_count() const { return n + (n - nu) + 1; }
    /// Interval midpoints for alpha and beta, g = g_star.
    [[nodiscard]] PlantSample nominal() const;
    [[nodiscard]] bool contains(const PlantSample& s) const;
};

/// Vertices (all of them when at most 12 parameters vary, otherwise 4096 random
/// ones), n_random uniform interior points, then the nominal point. Sample ids are
/// the list positions. Deterministic in seed.
std::vector<PlantSample> sample_family(const PlantFamily& family, int n_random, std::uint64_t seed);

/// Kharitonov corner polynomials of an interval polynomial (ascending coefficient bounds).
std::array<Polynomial, 4> kharitonov_polynomials(const std::vector<Interval>& coeffs);

struct MinimumPhaseReport {
    bool pass = true;
    std::optional<bool> kharitonov_pass;  // empty when n == nu
    std::optional<Complex> worst_zero;
};

MinimumPhaseReport check_minimum_phase(const PlantFamily& family, const std::vector<PlantSample>& samples);

inline constexpr double kStabilityMargin = 1e-9;

struct SweepCell {
    int sample_id = 0;
    double tau = 0.0;
    double max_real = 0.0;
};

/// Max closed-loop eigenvalue real part of the DOB loop for every (sample, tau),
/// ordered by sample then tau as given. The OpenMP version matches the serial one exactly.
std::vector<SweepCell> closed_loop_sweep(const PlantSample& nominal, const TransferFunction& controller,
                                         const QFilterSpec& qspec, const std::vector<double>& taus,
                                         const std::vector<PlantSample>& samples);
std::vector<SweepCell> closed_loop_sweep_serial(const PlantSample& nominal, const TransferFunction& controller,
                                                const QFilterSpec& qspec, const std::vector<double>& taus,
                                                const std::vector<PlantSample>& samples);

struct MarginRow {
    int sample_id = 0;
    double max_real = 0.0;
};

/// Single-tau slice of closed_loop_sweep.
std::vector<MarginRow> stability_margin_sweep(const PlantFamily& family, const PlantSample& nominal,
                                              const TransferFunction& controller, const QFilterSpec& qspec,
                                              double tau, const std::vector<PlantSample>& samples);

struct RobustStabilityReport {
    bool condition_a = false;
    std::vector<Complex> nominal_poles;
    bool condition_b = false;
    MinimumPhaseReport minimum_phase;
    bool condition_c = false;
    std::optional<DiskTestReport> disk;
    std::string condition_c_detail;
    std::vector<SweepCell> sweep;
    bool sweep_clean = false;  // every cell stable
    std::optional<double> tau_star_estimate;

    [[nodiscard]] bool conditions_hold() const { return condition_a && condition_b && condition_c; }
};

/// Checks the three robust-stability hypotheses and sweeps the closed loop over the
/// samples and the tau grid. Throws dob::Error when the nominal model lies outside the family.
RobustStabilityReport verify_robust_stability(const PlantFamily& family, const PlantSample& nominal, const TransferFunction& controller,
                               const QFilterSpec& qspec, const std::vector<double>& tau_grid,
                               const std::vector<PlantSample>& samples);

enum class PoleClass { fast, slow };

struct LocusPoint {
    double tau = 0.0;
    Complex eigenvalue;
    PoleClass cls = PoleClass::slow;
    std::string target;  // e.g. "pf:0", "q:0", "zero:0", "nominal:2"
    Complex target_value;
    double error = 0.0;  // |tau lambda - target| for fast, |lambda - target| for slow
};

struct AsymptoticsRow {
    double tau = 0.0;
    int fast_count = 0;
    int slow_count = 0;
    bool count_mismatch = false;
    double fast_error = 0.0;  // over every fast eigenvalue
    double pf_error = 0.0;    // over fast eigenvalues matched to roots of p_f
    double slow_error = 0.0;
};

struct AsymptoticsTable {
    std::vector<Complex> pf_roots;
    std::vector<Complex> q_roots;  // modes of the separate Q realization, scaled by tau
    std::vector<Complex> plant_zeros;
    std::vector<Complex> nominal_poles;
    std::vector<AsymptoticsRow> rows;
    std::vector<LocusPoint> points;
};

/// Closed-loop eigenvalues along a decreasing tau sequence, split at |lambda| = 0.5/tau
/// and matched to their limits: tau*lambda -> roots of p_f (plus the roots of the
/// Q denominator, which the separate Q realization contributes), lambda -> zeros of P
/// and poles of the nominal (Pn, C) loop.
AsymptoticsTable pole_asymptotics(const PlantSample& plant, const PlantSample& nominal,
                                  const TransferFunction& controller, const QFilterSpec& qspec,
                                  const std::vector<double>& tau_seq);

/// Optimal one-to-one assignment of values to targets (exhaustive up to 8 entries,
/// greedy beyond). Returns target index per value; sizes must match.
std::vector<int> assign_nearest(const std::vector<Complex>& values, const std::vector<Complex>& targets);

}  // namespace dob
