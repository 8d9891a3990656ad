#pragma once

#include <json.hpp>
#include <string>

#include "dob/benchmarks.hpp"
#include "dob/linear_sim.hpp"
#include "dob/nonlinear.hpp"

namespace dob::io {

using Json = nlohmann::ordered_json;

/// Malformed configuration; the message starts with the offending field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Strict object reader: every key must be consumed, missing required keys and
/// type mismatches name the field path.
class Reader {
public:
    Reader(const Json& j, std::string path);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] const Json& raw(const std::string& key);
    [[nodiscard]] std::string child(const std::string& key) const { return path_ + "." + key; }

    double number(const std::string& key);
    double number_or(const std::string& key, double fallback);
    long integer(const std::string& key);
    long integer_or(const std::string& key, long fallback);
    bool boolean_or(const std::string& key, bool fallback);
    std::string string(const std::string& key);
    std::vector<double> numbers(const std::string& key);

    /// Throws on keys that were never read.
    void finish() const;

private:
    const Json& j_;
    std::string path_;
    std::vector<std::string> used_;
    const Json& get(const std::string& key);
};

Json parse_file(const std::string& path);
Json parse_text(const std::string& text, const std::string& origin);

double as_number(const Json& j, const std::string& path);
std::vector<double> as_numbers(const Json& j, const std::string& path);

Interval interval_from(const Json& j, const std::string& path);
Json to_json(const Interval& i);
std::vector<Interval> intervals_from(const Json& j, const std::string& path);
Json to_json(const std::vector<Interval>& v);

GainInterval gains_from(const Json& j, const std::string& path);
Json to_json(const GainInterval& g);

QFilterSpec qfilter_from(const Json& j, const std::string& path);
Json to_json(const QFilterSpec& q);

TransferFunction transfer_from(const Json& j, const std::string& path);
Json to_json(const TransferFunction& tf);

PlantSample sample_from(const Json& j, const std::string& path);
Json to_json(const PlantSample& s);

PlantFamily family_from(const Json& j, const std::string& path);
Json to_json(const PlantFamily& f);

SignalSpec signal_from(const Json& j, const std::string& path);
Json to_json(const SignalSpec& s);

Field field_from(const Json& j, const std::string& path);
Json to_json(const Field& f);

NormalFormPlant plant_from(const Json& j, const std::string& path);
Json to_json(const NormalFormPlant& p);

NominalModel nominal_from(const Json& j, const std::string& path);
Json to_json(const NominalModel& n);

BaselineController controller_from(const Json& j, const std::string& path);
Json to_json(const BaselineController& c);

Envelope envelope_from(const Json& j, const std::string& path);
Json to_json(const Envelope& e);

InitialState initial_from(const Json& j, const std::string& path);
Json to_json(const InitialState& s);

/// Tau grid as a JSON array or a string "start:stop:log10" (one point per decade)
/// or "v1,v2,...".
std::vector<double> tau_list_from(const Json& j, const std::string& path);
std::vector<double> parse_tau_list(const std::string& text, const std::string& path);

Json complex_json(const Complex& c);

}  // namespace dob::io
