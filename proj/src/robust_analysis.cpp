#include "dob/robust_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dob/parallel.hpp"

namespace dob {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::vertex: return "vertex";
        case Provenance::random: return "random";
        case Provenance::nominal: return "nominal";
    }
    return "unknown";
}

Polynomial PlantSample::numerator() const {
    std::vector<double> c = beta;
    c.push_back(1.0);
    return Polynomial(std::move(c));
}

Polynomial PlantSample::denominator() const {
    std::vector<double> c = alpha;
    c.push_back(1.0);
    return Polynomial(std::move(c));
}

TransferFunction PlantSample::transfer() const { return {g * numerator(), denominator()}; }

void PlantFamily::validate() const {
    if (nu < 1 || nu > n) throw Error("plant family: need 1 <= nu <= n");
    if (static_cast<int>(alpha_bounds.size()) != n) throw Error("plant family: alpha_bounds must hold n intervals");
    if (static_cast<int>(beta_bounds.size()) != n - nu)
        throw Error("plant family: beta_bounds must hold n - nu intervals");
    for (const auto& i : alpha_bounds)
        if (!(i.lower <= i.upper)) throw Error("plant family: alpha interval with lower > upper");
    for (const auto& i : beta_bounds)
        if (!(i.lower <= i.upper)) throw Error("plant family: beta interval with lower > upper");
    gain.validate();
}

PlantSample PlantFamily::nominal() const {
    validate();
    PlantSample s;
    for (const auto& i : alpha_bounds) s.alpha.push_back(i.mid());
    for (const auto& i : beta_bounds) s.beta.push_back(i.mid());
    s.g = gain.g_star;
    s.provenance = Provenance::nominal;
    return s;
}

bool PlantFamily::contains(const PlantSample& s) const {
    if (static_cast<int>(s.alpha.size()) != n || static_cast<int>(s.beta.size()) != n - nu) return false;
    for (int i = 0; i < n; ++i)
        if (!alpha_bounds[static_cast<std::size_t>(i)].contains(s.alpha[static_cast<std::size_t>(i)])) return false;
    for (int i = 0; i < n - nu; ++i)
        if (!beta_bounds[static_cast<std::size_t>(i)].contains(s.beta[static_cast<std::size_t>(i)])) return false;
    return s.g >= gain.g_lower && s.g <= gain.g_upper;
}

namespace {

// Parameters flattened as alpha..., beta..., g.
std::vector<Interval> flat_bounds(const PlantFamily& f) {
    std::vector<Interval> b = f.alpha_bounds;
    b.insert(b.end(), f.beta_bounds.begin(), f.beta_bounds.end());
    b.push_back({f.gain.g_lower, f.gain.g_upper});
    return b;
}

PlantSample unflatten(const PlantFamily& f, const std::vector<double>& v, Provenance p) {
    PlantSample s;
    s.alpha.assign(v.begin(), v.begin() + f.n);
    s.beta.assign(v.begin() + f.n, v.begin() + f.n + (f.n - f.nu));
    s.g = v.back();
    s.provenance = p;
    return s;
}

}  // namespace

std::vector<PlantSample> sample_family(const PlantFamily& family, int n_random, std::uint64_t seed) {
    family.validate();
    if (n_random < 0) throw Error("sample_family: n_random must be >= 0");
    const auto bounds = flat_bounds(family);
    std::vector<std::size_t> varying;
    for (std::size_t i = 0; i < bounds.size(); ++i)
        if (!bounds[i].degenerate()) varying.push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<PlantSample> out;
    std::vector<double> v(bounds.size());
    auto corner = [&](auto&& pick_upper) {
        for (std::size_t i = 0; i < bounds.size(); ++i) v[i] = bounds[i].lower;
        for (std::size_t k = 0; k < varying.size(); ++k)
            if (pick_upper(k)) v[varying[k]] = bounds[varying[k]].upper;
        out.push_back(unflatten(family, v, Provenance::vertex));
    };
    if (varying.size() <= 12) {
        const std::uint64_t count = std::uint64_t{1} << varying.size();
        for (std::uint64_t mask = 0; mask < count; ++mask) corner([mask](std::size_t k) { return (mask >> k) & 1U; });
    } else {
        std::bernoulli_distribution coin(0.5);
        for (int i = 0; i < 4096; ++i) corner([&](std::size_t) { return coin(rng); });
    }
    for (int r = 0; r < n_random; ++r) {
        for (std::size_t i = 0; i < bounds.size(); ++i)
            v[i] = bounds[i].lower + (bounds[i].upper - bounds[i].lower) * std::generate_canonical<double, 53>(rng);
        out.push_back(unflatten(family, v, Provenance::random));
    }
    out.push_back(family.nominal());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
    return out;
}

std::array<Polynomial, 4> kharitonov_polynomials(const std::vector<Interval>& coeffs) {
    // Corner patterns repeat with period 4 in the coefficient index.
    static constexpr bool kUpper[4][4] = {
        {false, false, true, true}, {true, true, false, false}, {false, true, true, false}, {true, false, false, true}};
    std::array<Polynomial, 4> out;
    for (int k = 0; k < 4; ++k) {
        std::vector<double> c(coeffs.size());
        for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = kUpper[k][i % 4] ? coeffs[i].upper : coeffs[i].lower;
        out[static_cast<std::size_t>(k)] = Polynomial(std::move(c));
    }
    return out;
}

MinimumPhaseReport check_minimum_phase(const PlantFamily& family, const std::vector<PlantSample>& samples) {
    family.validate();
    MinimumPhaseReport report;
    if (family.n == family.nu) return report;
    for (const auto& s : samples) {
        for (const Complex& z : poly_roots(s.numerator())) {
            if (!report.worst_zero || z.real() > report.worst_zero->real()) report.worst_zero = z;
        }
    }
    report.pass = !report.worst_zero || report.worst_zero->real() < -kStabilityMargin;
    std::vector<Interval> numerator = family.beta_bounds;
    numerator.push_back({1.0, 1.0});
    bool all = true;
    for (const auto& k : kharitonov_polynomials(numerator)) all = all && is_hurwitz(k, kStabilityMargin);
    report.kharitonov_pass = all;
    return report;
}

namespace {

double cell_margin(const PlantSample& plant, const TransferFunction& pn, const TransferFunction& controller,
                   QFilterSpec qspec, double tau) {
    qspec.tau = tau;
    const auto loop = closed_loop_statespace(plant.transfer(), pn, controller, q_transfer(qspec));
    return max_real_eigenvalue(loop.ss.A);
}

template <typename ForEach>
std::vector<SweepCell> run_sweep(const PlantSample& nominal, const TransferFunction& controller,
                                 const QFilterSpec& qspec, const std::vector<double>& taus,
                                 const std::vector<PlantSample>& samples, ForEach&& for_each) {
    qspec.validate();
    const TransferFunction pn = nominal.transfer();
    const auto nt = static_cast<std::ptrdiff_t>(taus.size());
    std::vector<SweepCell> cells(samples.size() * taus.size());
    for_each(static_cast<std::ptrdiff_t>(cells.size()), [&](std::ptrdiff_t k) {
        const auto& s = samples[static_cast<std::size_t>(k / nt)];
        const double tau = taus[static_cast<std::size_t>(k % nt)];
        cells[static_cast<std::size_t>(k)] = {s.id, tau, cell_margin(s, pn, controller, qspec, tau)};
    });
    return cells;
}

}  // namespace

std::vector<SweepCell> closed_loop_sweep(const PlantSample& nominal, const TransferFunction& controller,
                                         const QFilterSpec& qspec, const std::vector<double>& taus,
                                         const std::vector<PlantSample>& samples) {
    return run_sweep(nominal, controller, qspec, taus, samples,
                     [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index(n, body); });
}

std::vector<SweepCell> closed_loop_sweep_serial(const PlantSample& nominal, const TransferFunction& controller,
                                                const QFilterSpec& qspec, const std::vector<double>& taus,
                                                const std::vector<PlantSample>& samples) {
    return run_sweep(nominal, controller, qspec, taus, samples,
                     [](std::ptrdiff_t n, auto&& body) { parallel::for_each_index_serial(n, body); });
}

std::vector<MarginRow> stability_margin_sweep(const PlantFamily& family, const PlantSample& nominal,
                                              const TransferFunction& controller, const QFilterSpec& qspec,
                                              double tau, const std::vector<PlantSample>& samples) {
    family.validate();
    if (!(tau > 0.0)) throw Error("stability_margin_sweep: tau must be positive");
    std::vector<MarginRow> rows;
    for (const auto& c : closed_loop_sweep(nominal, controller, qspec, {tau}, samples))
        rows.push_back({c.sample_id, c.max_real});
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
    return rows;
}

RobustStabilityReport verify_robust_stability(const PlantFamily& family, const PlantSample& nominal, const TransferFunction& controller,
                               const QFilterSpec& qspec, const std::vector<double>& tau_grid,
                               const std::vector<PlantSample>& samples) {
    family.validate();
    qspec.validate();
    if (!family.contains(nominal)) throw Error("nominal model is outside the plant family (condition (a))");
    if (qspec.nu != family.nu) throw Error("Q-filter order nu differs from the family's relative degree");
    if (tau_grid.empty()) throw Error("empty tau grid");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > 0.0)) throw Error("tau grid entries must be positive");
        if (i > 0 && !(tau_grid[i] < tau_grid[i - 1])) throw Error("tau grid must be strictly decreasing");
    }

    RobustStabilityReport report;
    const TransferFunction pn = nominal.transfer();
    const auto bare = closed_loop_statespace(pn, pn, controller, TransferFunction{});
    report.nominal_poles = eigenvalues(bare.ss.A);
    report.condition_a = std::all_of(report.nominal_poles.begin(), report.nominal_poles.end(),
                                     [](const Complex& l) { return l.real() < -kStabilityMargin; });

    report.minimum_phase = check_minimum_phase(family, samples);
    report.condition_b = report.minimum_phase.pass && report.minimum_phase.kharitonov_pass.value_or(true);

    GainInterval gains = family.gain;
    gains.g_star = nominal.g;
    try {
        report.disk = nyquist_disk_test_auto(qspec.nu, qspec.a, gains);
        report.condition_c = report.disk->pass;
        std::ostringstream msg;
        msg << "min distance " << report.disk->min_distance << ", encirclements " << report.disk->encirclements;
        report.condition_c_detail = msg.str();
    } catch (const Error& e) {
        report.condition_c = false;
        report.condition_c_detail = e.what();
    }

    report.sweep = closed_loop_sweep(nominal, controller, qspec, tau_grid, samples);
    const std::size_t nt = tau_grid.size();
    std::vector<bool> stable_at(nt, true);
    for (std::size_t k = 0; k < report.sweep.size(); ++k)
        if (!(report.sweep[k].max_real < -kStabilityMargin)) stable_at[k % nt] = false;
    report.sweep_clean = std::all_of(stable_at.begin(), stable_at.end(), [](bool b) { return b; });
    if (report.conditions_hold()) {
        // grid is decreasing: walk up from the smallest tau while every sample stays stable
        for (std::size_t i = nt; i-- > 0;) {
            if (!stable_at[i]) break;
            report.tau_star_estimate = tau_grid[i];
        }
    }
    return report;
}

std::vector<int> assign_nearest(const std::vector<Complex>& values, const std::vector<Complex>& targets) {
    if (values.size() != targets.size()) throw Error("assign_nearest: size mismatch");
    const std::size_t n = values.size();
    std::vector<int> best(n);
    std::iota(best.begin(), best.end(), 0);
    if (n <= 8) {
        std::vector<int> perm = best;
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) cost = std::max(cost, std::abs(values[i] - targets[static_cast<std::size_t>(perm[i])]));
            if (cost < best_cost) {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int pick = -1;
        for (std::size_t j = 0; j < n; ++j)
            if (!used[j] && (pick < 0 || std::abs(values[i] - targets[j]) < std::abs(values[i] - targets[static_cast<std::size_t>(pick)])))
                pick = static_cast<int>(j);
        used[static_cast<std::size_t>(pick)] = true;
        best[i] = pick;
    }
    return best;
}

namespace {

struct Target {
    std::string label;
    Complex value;
};

std::vector<Target> labelled(const std::string& kind, const std::vector<Complex>& values) {
    std::vector<Target> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({kind + ":" + std::to_string(i), values[i]});
    return out;
}

// Matches values against targets; one-to-one when the counts agree, nearest otherwise.
std::vector<int> match(const std::vector<Complex>& values, const std::vector<Target>& targets) {
    std::vector<Complex> t;
    for (const auto& x : targets) t.push_back(x.value);
    if (values.size() == t.size()) return assign_nearest(values, t);
    std::vector<int> out;
    for (const auto& v : values) {
        int pick = 0;
        for (std::size_t j = 1; j < t.size(); ++j)
            if (std::abs(v - t[j]) < std::abs(v - t[static_cast<std::size_t>(pick)])) pick = static_cast<int>(j);
        out.push_back(pick);
    }
    return out;
}

}  // namespace

AsymptoticsTable pole_asymptotics(const PlantSample& plant, const PlantSample& nominal,
                                  const TransferFunction& controller, const QFilterSpec& qspec,
                                  const std::vector<double>& tau_seq) {
    qspec.validate();
    if (tau_seq.size() < 3) throw Error("pole_asymptotics: need at least three tau values");
    for (std::size_t i = 0; i < tau_seq.size(); ++i) {
        if (!(tau_seq[i] > 0.0)) throw Error("pole_asymptotics: tau values must be positive");
        if (i > 0 && !(tau_seq[i] < tau_seq[i - 1])) throw Error("pole_asymptotics: tau sequence must decrease");
    }
    AsymptoticsTable table;
    const TransferFunction p = plant.transfer(), pn = nominal.transfer();
    table.pf_roots = poly_roots(fast_char_poly(qspec.a, plant.g, nominal.g));
    table.q_roots = poly_roots(fast_char_poly(qspec.a, 1.0, 1.0));
    if (p.num().degree() >= 1) table.plant_zeros = poly_roots(p.num());
    table.nominal_poles = eigenvalues(closed_loop_statespace(pn, pn, controller, TransferFunction{}).ss.A);

    std::vector<Target> fast_targets = labelled("pf", table.pf_roots);
    for (auto& t : labelled("q", table.q_roots)) fast_targets.push_back(t);
    std::vector<Target> slow_targets = labelled("zero", table.plant_zeros);
    for (auto& t : labelled("nominal", table.nominal_poles)) slow_targets.push_back(t);

    for (double tau : tau_seq) {
        QFilterSpec spec = qspec;
        spec.tau = tau;
        const auto loop = closed_loop_statespace(p, pn, controller, q_transfer(spec));
        const auto ev = eigenvalues(loop.ss.A);
        const std::size_t expected = fast_targets.size() + slow_targets.size();
        if (ev.size() != expected) {
            std::ostringstream msg;
            msg << "pole_asymptotics: " << ev.size() << " closed-loop eigenvalues, expected " << expected;
            throw Error(msg.str());
        }
        std::vector<Complex> fast, slow;
        for (const Complex& l : ev) (std::abs(l) > 0.5 / tau ? fast : slow).push_back(l);

        AsymptoticsRow row;
        row.tau = tau;
        row.fast_count = static_cast<int>(fast.size());
        row.slow_count = static_cast<int>(slow.size());
        row.count_mismatch = fast.size() != fast_targets.size();

        std::vector<Complex> scaled;
        for (const Complex& l : fast) scaled.push_back(tau * l);
        const auto fast_match = match(scaled, fast_targets);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            const Target& t = fast_targets[static_cast<std::size_t>(fast_match[i])];
            const double err = std::abs(scaled[i] - t.value);
            row.fast_error = std::max(row.fast_error, err);
            if (t.label.rfind("pf:", 0) == 0) row.pf_error = std::max(row.pf_error, err);
            table.points.push_back({tau, fast[i], PoleClass::fast, t.label, t.value, err});
        }
        const auto slow_match = match(slow, slow_targets);
        for (std::size_t i = 0; i < slow.size(); ++i) {
            const Target& t = slow_targets[static_cast<std::size_t>(slow_match[i])];
            const double err = std::abs(slow[i] - t.value);
            row.slow_error = std::max(row.slow_error, err);
            table.points.push_back({tau, slow[i], PoleClass::slow, t.label, t.value, err});
        }
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace dob
