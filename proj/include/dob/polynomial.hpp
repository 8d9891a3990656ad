#pragma once

#include <complex>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace dob {

using Complex = std::complex<double>;

/// Real polynomial in s, coefficients stored in ascending degree:
/// coeffs()[k] multiplies s^k. Trailing zeros are trimmed on construction,
/// the zero polynomial is stored as {0}.
class Polynomial {
public:
    /// degree() of the zero polynomial.
    static constexpr int kZeroDegree = std::numeric_limits<int>::min();

    Polynomial();
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial constant(double c);
    /// s^k
    static Polynomial monomial(int k, double c = 1.0);
    /// prod (s - r) over the given roots; complex roots must come in conjugate pairs.
    static Polynomial from_roots(std::span<const Complex> roots);

    [[nodiscard]] const std::vector<double>& coeffs() const { return coeffs_; }
    [[nodiscard]] int degree() const;
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] double leading() const { return coeffs_.back(); }
    [[nodiscard]] double operator[](int k) const;
    [[nodiscard]] double max_abs_coeff() const;

    [[nodiscard]] double operator()(double s) const;
    [[nodiscard]] Complex operator()(Complex s) const;

    [[nodiscard]] Polynomial derivative() const;
    /// p(s + shift)
    [[nodiscard]] Polynomial shifted(double shift) const;
    /// p(c s)
    [[nodiscard]] Polynomial scaled_argument(double c) const;
    /// Copy with leading coefficient 1. Only for comparisons; never applied in place.
    [[nodiscard]] Polynomial monic() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double c, const Polynomial& p);
    friend Polynomial operator-(const Polynomial& p);
    friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

    struct DivMod;
    /// Euclidean division, divisor must be nonzero.
    [[nodiscard]] DivMod divmod(const Polynomial& divisor) const;

private:
    void trim();
    std::vector<double> coeffs_;
};

struct Polynomial::DivMod {
    Polynomial quotient;
    Polynomial remainder;
};

/// All deg(p) roots with multiplicity. Companion-matrix eigenvalues followed by a
/// single Newton correction per root (kept only when it lowers |p(root)|).
/// Throws dob::Error("no roots defined") for degree < 1.
std::vector<Complex> poly_roots(const Polynomial& p);

/// Routh array first column for p(s - margin); p must have degree >= 1.
std::vector<double> routh_first_column(const Polynomial& p);

/// Root-based Hurwitz test: every root has real part < -margin.
bool is_hurwitz(const Polynomial& p, double margin = 0.0);

/// Routh-array Hurwitz test with the same contract as is_hurwitz.
bool is_hurwitz_routh(const Polynomial& p, double margin = 0.0);

/// Largest real part over the roots of p (degree >= 1).
double max_real_root(const Polynomial& p);

}  // namespace dob
