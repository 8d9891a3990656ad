#include "dob/signal.hpp"

#include <cmath>

#include "dob/error.hpp"

namespace dob {

SignalSpec SignalSpec::step(double amplitude, double start_time) {
    SignalSpec s;
    s.kind = Kind::step;
    s.amplitude = amplitude;
    s.start_time = start_time;
    return s;
}

SignalSpec SignalSpec::sinusoid(double amplitude, double frequency) {
    SignalSpec s;
    s.kind = Kind::sinusoid;
    s.amplitude = amplitude;
    s.frequency = frequency;
    return s;
}

SignalSpec SignalSpec::sum(std::vector<SignalSpec> components) {
    SignalSpec s;
    s.kind = Kind::sum;
    s.components = std::move(components);
    return s;
}

void SignalSpec::validate() const {
    if (!std::isfinite(amplitude)) throw Error("signal: amplitude must be finite");
    switch (kind) {
        case Kind::zero: break;
        case Kind::step:
            if (!std::isfinite(start_time)) throw Error("signal: start_time must be finite");
            break;
        case Kind::sinusoid:
            if (!(frequency > 0.0) || !std::isfinite(frequency)) throw Error("signal: sinusoid frequency must be > 0");
            break;
        case Kind::sum:
            if (components.empty()) throw Error("signal: sum needs at least one component");
            for (const auto& c : components) c.validate();
            break;
    }
}

double SignalSpec::operator()(double t) const {
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::step: return t >= start_time ? amplitude : 0.0;
        case Kind::sinusoid: return amplitude * std::sin(frequency * t);
        case Kind::sum: {
            double v = 0.0;
            for (const auto& c : components) v += c(t);
            return v;
        }
    }
    return 0.0;
}

double SignalSpec::bound() const {
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::step:
        case Kind::sinusoid: return std::abs(amplitude);
        case Kind::sum: {
            double v = 0.0;
            for (const auto& c : components) v += c.bound();
            return v;
        }
    }
    return 0.0;
}

const char* to_string(SignalSpec::Kind k) {
    switch (k) {
        case SignalSpec::Kind::zero: return "zero";
        case SignalSpec::Kind::step: return "step";
        case SignalSpec::Kind::sinusoid: return "sinusoid";
        case SignalSpec::Kind::sum: return "sum";
    }
    return "zero";
}

SignalSpec::Kind signal_kind_from_string(const std::string& s) {
    if (s == "zero") return SignalSpec::Kind::zero;
    if (s == "step") return SignalSpec::Kind::step;
    if (s == "sinusoid") return SignalSpec::Kind::sinusoid;
    if (s == "sum") return SignalSpec::Kind::sum;
    throw Error("signal: unknown kind '" + s + "'");
}

}  // namespace dob
