#include "dob/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "dob/error.hpp"

namespace dob {

Polynomial::Polynomial() : coeffs_{0.0} {}

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

Polynomial Polynomial::constant(double c) { return Polynomial{c}; }

Polynomial Polynomial::monomial(int k, double c) {
    std::vector<double> v(static_cast<std::size_t>(k) + 1, 0.0);
    v.back() = c;
    return Polynomial(std::move(v));
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots) {
    std::vector<Complex> acc{Complex{1.0}};
    for (const Complex& r : roots) {
        std::vector<Complex> next(acc.size() + 1, Complex{0.0});
        for (std::size_t k = 0; k < acc.size(); ++k) {
            next[k + 1] += acc[k];
            next[k] -= r * acc[k];
        }
        acc = std::move(next);
    }
    std::vector<double> re(acc.size());
    std::transform(acc.begin(), acc.end(), re.begin(), [](Complex c) { return c.real(); });
    return Polynomial(std::move(re));
}

void Polynomial::trim() {
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(0.0);
}

int Polynomial::degree() const {
    return is_zero() ? kZeroDegree : static_cast<int>(coeffs_.size()) - 1;
}

bool Polynomial::is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

double Polynomial::operator[](int k) const {
    if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<std::size_t>(k)];
}

double Polynomial::max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

double Polynomial::operator()(double s) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Complex Polynomial::operator()(Complex s) const {
    Complex acc{0.0};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return Polynomial{};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::shifted(double shift) const {
    // Horner in polynomial arithmetic: p(s + c)
    const Polynomial lin{shift, 1.0};
    Polynomial acc;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * lin + Polynomial::constant(*it);
    return acc;
}

Polynomial Polynomial::scaled_argument(double c) const {
    std::vector<double> v = coeffs_;
    double f = 1.0;
    for (double& x : v) {
        x *= f;
        f *= c;
    }
    return Polynomial(std::move(v));
}

Polynomial Polynomial::monic() const {
    if (is_zero()) throw Error("monic(): zero polynomial");
    std::vector<double> v = coeffs_;
    const double lead = v.back();
    for (double& x : v) x /= lead;
    return Polynomial(std::move(v));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> v(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t k = 0; k < a.coeffs_.size(); ++k) v[k] += a.coeffs_[k];
    for (std::size_t k = 0; k < b.coeffs_.size(); ++k) v[k] += b.coeffs_[k];
    return Polynomial(std::move(v));
}

Polynomial operator-(const Polynomial& p) {
    std::vector<double> v = p.coeffs_;
    for (double& x : v) x = -x;
    return Polynomial(std::move(v));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return Polynomial{};
    std::vector<double> v(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) v[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(v));
}

Polynomial operator*(double c, const Polynomial& p) {
    std::vector<double> v = p.coeffs_;
    for (double& x : v) x *= c;
    return Polynomial(std::move(v));
}

Polynomial::DivMod Polynomial::divmod(const Polynomial& divisor) const {
    if (divisor.is_zero()) throw Error("polynomial division by zero");
    const int dd = divisor.degree();
    if (is_zero() || degree() < dd) return {Polynomial{}, *this};
    std::vector<double> rem = coeffs_;
    std::vector<double> quot(static_cast<std::size_t>(degree() - dd) + 1, 0.0);
    for (int k = degree() - dd; k >= 0; --k) {
        const double c = rem[static_cast<std::size_t>(k + dd)] / divisor.leading();
        quot[static_cast<std::size_t>(k)] = c;
        for (int j = 0; j <= dd; ++j) rem[static_cast<std::size_t>(k + j)] -= c * divisor[j];
        rem[static_cast<std::size_t>(k + dd)] = 0.0;
    }
    rem.resize(static_cast<std::size_t>(std::max(dd, 1)));
    return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
}

std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.degree() < 1) throw Error("no roots defined");
    const auto& c = p.coeffs();
    std::size_t zeros = 0;
    while (c[zeros] == 0.0) ++zeros;
    std::vector<Complex> roots(zeros, Complex{0.0});

    const Polynomial reduced(std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(zeros), c.end()));
    const int n = reduced.degree();
    if (n >= 1) {
        // Rescale s = sigma t so the companion matrix is roughly balanced.
        const double sigma = std::pow(std::abs(reduced[0] / reduced.leading()), 1.0 / n);
        const Polynomial scaled = reduced.scaled_argument(sigma).monic();
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) companion(i, n - 1) = -scaled[i];
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
        if (solver.info() != Eigen::Success) throw Error("poly_roots: eigenvalue iteration failed");
        const Polynomial dp = reduced.derivative();
        for (int i = 0; i < n; ++i) {
            Complex r = solver.eigenvalues()[i] * sigma;
            const Complex d = dp(r);
            if (std::abs(d) > 0.0) {
                const Complex polished = r - reduced(r) / d;
                if (std::isfinite(polished.real()) && std::isfinite(polished.imag()) &&
                    std::abs(reduced(polished)) < std::abs(reduced(r)))
                    r = polished;
            }
            roots.push_back(r);
        }
    }
    return roots;
}

double max_real_root(const Polynomial& p) {
    double m = -std::numeric_limits<double>::infinity();
    for (const Complex& r : poly_roots(p)) m = std::max(m, r.real());
    return m;
}

bool is_hurwitz(const Polynomial& p, double margin) {
    if (p.is_zero()) throw Error("is_hurwitz: zero polynomial");
    if (p.degree() < 1) throw Error("is_hurwitz: degree must be >= 1");
    return max_real_root(p) < -margin;
}

std::vector<double> routh_first_column(const Polynomial& p) {
    if (p.degree() < 1) throw Error("routh_first_column: degree must be >= 1");
    const int n = p.degree();
    const double sign = p.leading() > 0.0 ? 1.0 : -1.0;
    const std::size_t width = static_cast<std::size_t>(n) / 2 + 1;
    // Rows hold coefficients in descending powers, two rows seeded from p.
    std::vector<double> prev(width, 0.0), cur(width, 0.0);
    for (int k = 0; k <= n; ++k) {
        const double c = sign * p[n - k];
        if (k % 2 == 0)
            prev[static_cast<std::size_t>(k / 2)] = c;
        else
            cur[static_cast<std::size_t>(k / 2)] = c;
    }
    std::vector<double> first{prev[0], cur[0]};
    for (int row = 2; row <= n; ++row) {
        std::vector<double> next(width, 0.0);
        if (cur[0] == 0.0) {
            // Degenerate array: the remaining entries carry no sign information.
            first.resize(static_cast<std::size_t>(n) + 1, 0.0);
            return first;
        }
        for (std::size_t j = 0; j + 1 < width; ++j)
            next[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0];
        first.push_back(next[0]);
        prev = std::move(cur);
        cur = std::move(next);
    }
    first.resize(static_cast<std::size_t>(n) + 1);
    return first;
}

bool is_hurwitz_routh(const Polynomial& p, double margin) {
    if (p.is_zero()) throw Error("is_hurwitz_routh: zero polynomial");
    if (p.degree() < 1) throw Error("is_hurwitz_routh: degree must be >= 1");
    const Polynomial q = margin == 0.0 ? p : p.shifted(-margin);
    const double sign = q.leading() > 0.0 ? 1.0 : -1.0;
    for (double c : q.coeffs())
        if (sign * c <= 0.0) return false;
    for (double c : routh_first_column(q))
        if (c <= 0.0) return false;
    return true;
}

}  // namespace dob
