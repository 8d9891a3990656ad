#pragma once

#include <string>
#include <vector>

namespace dob {

/// Test signal for r, d, n and the nonlinear disturbances.
struct SignalSpec {
    enum class Kind { zero, step, sinusoid, sum };

    Kind kind = Kind::zero;
    double amplitude = 0.0;
    double frequency = 0.0;   // rad/s, sinusoid only
    double start_time = 0.0;  // step only
    std::vector<SignalSpec> components;

    static SignalSpec zero() { return {}; }
    static SignalSpec step(double amplitude, double start_time = 0.0);
    static SignalSpec sinusoid(double amplitude, double frequency);
    static SignalSpec sum(std::vector<SignalSpec> components);

    void validate() const;
    [[nodiscard]] double operator()(double t) const;
    /// Upper bound on |s(t)| over all t.
    [[nodiscard]] double bound() const;
};

const char* to_string(SignalSpec::Kind k);
SignalSpec::Kind signal_kind_from_string(const std::string& s);

}  // namespace dob
