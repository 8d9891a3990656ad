#include "dob/transfer_function.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dob/error.hpp"

namespace dob {

TransferFunction::TransferFunction() : num_{0.0}, den_{1.0} {}

TransferFunction::TransferFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw Error("transfer function denominator is the zero polynomial");
}

TransferFunction TransferFunction::gain(double k) { return {Polynomial{k}, Polynomial{1.0}}; }

int TransferFunction::relative_degree() const {
    if (num_.is_zero()) return std::numeric_limits<int>::max() / 2;
    return den_.degree() - num_.degree();
}

Complex TransferFunction::operator()(Complex s) const { return num_(s) / den_(s); }

TransferFunction operator+(const TransferFunction& a, const TransferFunction& b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
}

TransferFunction operator-(const TransferFunction& a) { return {-a.num_, a.den_}; }

TransferFunction operator-(const TransferFunction& a, const TransferFunction& b) { return a + (-b); }

TransferFunction operator*(const TransferFunction& a, const TransferFunction& b) {
    return {a.num_ * b.num_, a.den_ * b.den_};
}

TransferFunction TransferFunction::inverse() const {
    if (num_.is_zero()) throw Error("inverse of a zero transfer function");
    return {den_, num_};
}

TransferFunction tf_arith(const TransferFunction& a, const TransferFunction& b, TfOp kind) {
    switch (kind) {
        case TfOp::add: return a + b;
        case TfOp::mul: return a * b;
        case TfOp::neg: return -a;
        case TfOp::inv: return a.inverse();
    }
    throw Error("tf_arith: unknown operation");
}

std::vector<Complex> freq_response(const TransferFunction& tf, std::span<const double> omegas) {
    std::vector<Complex> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        const Complex s{0.0, w};
        const Complex d = tf.den()(s);
        // Scale of the terms that could cancel inside den(jw).
        double scale = 0.0;
        double wk = 1.0;
        for (double c : tf.den().coeffs()) {
            scale += std::abs(c) * wk;
            wk *= std::abs(w);
        }
        if (std::abs(d) <= 1e-13 * scale) {
            std::ostringstream msg;
            msg << "freq_response: pole on the imaginary axis at omega = " << w;
            throw Error(msg.str());
        }
        out.push_back(tf.num()(s) / d);
    }
    return out;
}

std::vector<double> logspace(double lo, double hi, int n) {
    if (n < 1 || lo <= 0.0 || hi <= 0.0) throw Error("logspace: need n >= 1 and positive bounds");
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
    return v;
}

}  // namespace dob
