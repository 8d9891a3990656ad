#include "dob/qfilter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dob/parallel.hpp"

namespace dob {

void QFilterSpec::validate() const {
    if (nu < 1) throw Error("qfilter: nu must be a positive integer");
    if (static_cast<int>(a.size()) != nu) throw Error("qfilter: length of a must equal nu");
    if (!(a[0] > 0.0)) throw Error("qfilter: a0 must be positive");
    if (!(tau > 0.0)) throw Error("qfilter: tau must be positive");
}

void GainInterval::validate() const {
    if (!(g_lower > 0.0)) throw Error("gain interval: g_lower must be positive");
    if (!(g_upper >= g_lower)) throw Error("gain interval: g_upper must be >= g_lower");
    if (!(g_star >= g_lower && g_star <= g_upper)) throw Error("gain interval: g_star must lie in [g_lower, g_upper]");
}

TransferFunction q_transfer(const QFilterSpec& spec) {
    spec.validate();
    std::vector<double> den(static_cast<std::size_t>(spec.nu) + 1);
    double tk = 1.0;
    for (int k = 0; k < spec.nu; ++k) {
        den[static_cast<std::size_t>(k)] = spec.a[static_cast<std::size_t>(k)] * tk;
        tk *= spec.tau;
    }
    den.back() = tk;
    return {Polynomial{spec.a[0]}, Polynomial(std::move(den))};
}

Polynomial fast_char_poly(std::span<const double> a, double g, double g_star) {
    if (!(g > 0.0) || !(g_star > 0.0)) throw Error("fast_char_poly: g and g_star must be positive");
    if (a.empty()) throw Error("fast_char_poly: empty coefficient list");
    std::vector<double> c(a.begin(), a.end());
    c[0] *= g / g_star;
    c.push_back(1.0);
    return Polynomial(std::move(c));
}

Polynomial fast_char_poly(const QFilterSpec& spec, double g, double g_star) {
    spec.validate();
    return fast_char_poly(spec.a, g, g_star);
}

Polynomial reduced_poly(std::span<const double> a) {
    if (a.empty()) throw Error("reduced_poly: empty coefficient list");
    std::vector<double> c(a.begin() + 1, a.end());
    c.push_back(1.0);
    return Polynomial(std::move(c));
}

TransferFunction disk_test_plant(std::span<const double> a) {
    std::vector<double> den(a.size() + 1, 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) den[k] = a[k];
    den.back() = 1.0;
    return {Polynomial{a[0]}, Polynomial(std::move(den))};
}

Disk critical_disk(const GainInterval& gains) {
    gains.validate();
    const double left = gains.g_star / gains.g_lower;
    const double right = gains.g_star / gains.g_upper;
    return {-(left + right) / 2.0, (left - right) / 2.0};
}

double disk_safety_threshold(const GainInterval& gains, double safety_fraction) {
    const Disk disk = critical_disk(gains);
    // G(jw) -> 0 as w -> inf, so no contour can keep more than |c| - r from the disk.
    return safety_fraction * (std::abs(disk.center) - disk.radius);
}

std::vector<double> disk_test_grid(std::span<const double> a, const GainInterval& gains, int points_per_decade) {
    const Disk disk = critical_disk(gains);
    const TransferFunction G = disk_test_plant(a);
    auto mag = [&](double w) { return std::abs(G(Complex{0.0, w})); };
    const double far = 10.0 * (std::abs(disk.center) + disk.radius);
    const double near = 0.01 * (std::abs(disk.center) - disk.radius);
    double lo = 1.0, hi = 1.0;
    for (int i = 0; i < 60 && !(mag(lo) > far); ++i) lo /= 10.0;
    for (int i = 0; i < 60 && !(mag(hi) < near); ++i) hi *= 10.0;
    lo /= 10.0;
    hi *= 10.0;
    const int decades = static_cast<int>(std::lround(std::log10(hi / lo)));
    return logspace(lo, hi, decades * points_per_decade + 1);
}

namespace {

// Accumulates arg(v - center) along a closed sampled curve.
class WindingCounter {
public:
    explicit WindingCounter(double center) : center_(center) {}

    void add(Complex v) {
        const double angle = std::arg(v - center_);
        if (started_) {
            double step = angle - last_;
            if (step > std::numbers::pi) step -= 2.0 * std::numbers::pi;
            if (step < -std::numbers::pi) step += 2.0 * std::numbers::pi;
            if (std::abs(step) > std::numbers::pi / 2.0) {
                std::ostringstream msg;
                msg << "Nyquist grid too coarse: argument increment " << step << " rad near G = " << v
                    << "; refine the frequency grid";
                throw GridTooCoarse(msg.str());
            }
            total_ += step;
        }
        last_ = angle;
        started_ = true;
    }

    [[nodiscard]] int turns() const { return static_cast<int>(std::lround(total_ / (2.0 * std::numbers::pi))); }

private:
    double center_;
    double last_ = 0.0;
    double total_ = 0.0;
    bool started_ = false;
};

}  // namespace

DiskTestReport nyquist_disk_test(int nu, std::span<const double> a, const GainInterval& gains,
                                 std::span<const double> omega_grid) {
    if (nu < 1 || static_cast<int>(a.size()) != nu) throw Error("disk test: need nu >= 1 and nu coefficients");
    if (!(a[0] > 0.0)) throw Error("disk test: a0 must be positive");
    if (omega_grid.size() < 2) throw Error("disk test: omega grid needs at least two points");
    if (!std::is_sorted(omega_grid.begin(), omega_grid.end()) || !(omega_grid.front() > 0.0))
        throw Error("disk test: omega grid must be positive and ascending");
    const Polynomial reduced = reduced_poly(a);
    if (reduced.degree() >= 1 && !is_hurwitz(reduced)) throw Error("choose a1..a_{nu-1} Hurwitz first");

    DiskTestReport report;
    report.disk = critical_disk(gains);
    const Disk& disk = report.disk;
    const TransferFunction G = disk_test_plant(a);

    const double low_mag = std::abs(G(Complex{0.0, omega_grid.front()}));
    const double high_mag = std::abs(G(Complex{0.0, omega_grid.back()}));
    if (!(low_mag > 10.0 * (std::abs(disk.center) + disk.radius)))
        throw Error("disk test: omega grid does not reach low enough frequencies");
    if (!(high_mag < 0.01 * (std::abs(disk.center) - disk.radius)))
        throw Error("disk test: omega grid does not reach high enough frequencies");

    std::vector<Complex> upper;
    upper.reserve(omega_grid.size());
    // The closed contour passes through G(j inf) = 0.
    report.min_distance = std::abs(disk.center) - disk.radius;
    for (double w : omega_grid) {
        const Complex v = G(Complex{0.0, w});
        upper.push_back(v);
        report.min_distance = std::min(report.min_distance, std::abs(v - disk.center) - disk.radius);
    }

    // Contour: j eps -> j inf, infinity (G = 0), -j inf -> -j eps, then the
    // right-hand indentation s = eps e^{j theta}, theta from -pi/2 to pi/2.
    WindingCounter winding(disk.center);
    for (const Complex& v : upper) winding.add(v);
    winding.add(Complex{0.0});
    for (auto it = upper.rbegin(); it != upper.rend(); ++it) winding.add(std::conj(*it));
    const double eps = omega_grid.front();
    constexpr int kArcPoints = 360;
    for (int i = 0; i <= kArcPoints; ++i) {
        const double theta = -std::numbers::pi / 2.0 + std::numbers::pi * i / kArcPoints;
        winding.add(G(std::polar(eps, theta)));
    }
    report.encirclements = winding.turns();
    report.pass = report.min_distance > 0.0 && report.encirclements == 0;
    return report;
}

DiskTestReport nyquist_disk_test_auto(int nu, std::span<const double> a, const GainInterval& gains) {
    for (int ppd = 200;; ppd *= 2) {
        try {
            return nyquist_disk_test(nu, a, gains, disk_test_grid(a, gains, ppd));
        } catch (const GridTooCoarse&) {
            if (ppd >= 3200) throw;
        }
    }
}

A0Design design_a0(int nu, std::span<const double> a_tail, const GainInterval& gains, double a0_initial,
                   double safety_fraction) {
    if (nu < 1 || static_cast<int>(a_tail.size()) != nu - 1) throw Error("design_a0: a_tail must hold nu - 1 values");
    if (!(a0_initial > 0.0)) throw Error("design_a0: a0_initial must be positive");
    std::vector<double> a(static_cast<std::size_t>(nu));
    std::copy(a_tail.begin(), a_tail.end(), a.begin() + 1);
    if (nu > 1 && !is_hurwitz(reduced_poly(std::vector<double>(a.begin(), a.end()))))
        throw Error("choose a1..a_{nu-1} Hurwitz first");

    const double threshold = disk_safety_threshold(gains, safety_fraction);
    double a0 = a0_initial;
    for (int k = 0; k <= 60; ++k, a0 /= 2.0) {
        a[0] = a0;
        DiskTestReport report;
        try {
            report = nyquist_disk_test_auto(nu, a, gains);
        } catch (const GridTooCoarse&) {
            continue;  // contour grazes the disk center; cannot pass anyway
        }
        if (report.pass && report.min_distance >= threshold) return {a0, k, report};
    }
    throw Error("gain interval too wide for this a-tail");
}

namespace {

template <typename Loop>
GainSweep run_gain_sweep(std::span<const double> a, const GainInterval& gains, int points, Loop&& loop) {
    gains.validate();
    if (points < 1) throw Error("gain sweep: need at least one point");
    std::vector<double> worst(static_cast<std::size_t>(points));
    std::vector<double> g_of(static_cast<std::size_t>(points));
    loop(points, [&](std::ptrdiff_t i) {
        const double g = points == 1 ? gains.g_lower
                                     : gains.g_lower + (gains.g_upper - gains.g_lower) * static_cast<double>(i) /
                                                           static_cast<double>(points - 1);
        g_of[static_cast<std::size_t>(i)] = g;
        worst[static_cast<std::size_t>(i)] = max_real_root(fast_char_poly(a, g, gains.g_star));
    });
    GainSweep out;
    out.worst_real_part = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < worst.size(); ++i) {
        if (worst[i] > out.worst_real_part) {
            out.worst_real_part = worst[i];
            out.worst_gain = g_of[i];
        }
    }
    out.all_hurwitz = out.worst_real_part < 0.0;
    return out;
}

}  // namespace

GainSweep gain_grid_sweep(std::span<const double> a, const GainInterval& gains, int points) {
    return run_gain_sweep(a, gains, points,
                          [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index(n, body); });
}

GainSweep gain_grid_sweep_serial(std::span<const double> a, const GainInterval& gains, int points) {
    return run_gain_sweep(a, gains, points,
                          [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index_serial(n, body); });
}

}  // namespace dob
