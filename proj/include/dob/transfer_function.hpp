#pragma once

#include <span>
#include <vector>

#include "dob/polynomial.hpp"

namespace dob {

/// SISO rational transfer function num(s)/den(s). Common factors are never
/// cancelled; internal-stability questions go through the state-space path.
class TransferFunction {
public:
    TransferFunction();  // 0/1
    TransferFunction(Polynomial num, Polynomial den);

    static TransferFunction gain(double k);

    [[nodiscard]] const Polynomial& num() const { return num_; }
    [[nodiscard]] const Polynomial& den() const { return den_; }

    [[nodiscard]] bool is_zero() const { return num_.is_zero(); }
    /// deg(den) - deg(num); a zero transfer function reports a large sentinel.
    [[nodiscard]] int relative_degree() const;
    [[nodiscard]] bool is_proper() const { return relative_degree() >= 0; }
    [[nodiscard]] bool is_strictly_proper() const { return relative_degree() >= 1; }

    /// Direct evaluation at a complex frequency (no pole check).
    [[nodiscard]] Complex operator()(Complex s) const;

    friend TransferFunction operator+(const TransferFunction& a, const TransferFunction& b);
    friend TransferFunction operator-(const TransferFunction& a, const TransferFunction& b);
    friend TransferFunction operator*(const TransferFunction& a, const TransferFunction& b);
    friend TransferFunction operator-(const TransferFunction& a);

    /// den/num; throws dob::Error on a zero transfer function.
    [[nodiscard]] TransferFunction inverse() const;

private:
    Polynomial num_;
    Polynomial den_;
};

enum class TfOp { add, mul, neg, inv };

/// Block-diagram arithmetic on exact polynomials; `b` is ignored for neg/inv.
TransferFunction tf_arith(const TransferFunction& a, const TransferFunction& b, TfOp kind);

/// G(j w) for every w. Throws dob::Error naming w when j w is (numerically) a pole.
std::vector<Complex> freq_response(const TransferFunction& tf, std::span<const double> omegas);

/// n points log-spaced over [lo, hi].
std::vector<double> logspace(double lo, double hi, int n);

}  // namespace dob
