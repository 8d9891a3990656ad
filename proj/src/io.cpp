#include "dob/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dob::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

const char* type_name(const Json& j) { return j.type_name(); }

}  // namespace

Reader::Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, std::string("expected an object, got ") + type_name(j_));
}

bool Reader::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const Json& Reader::get(const std::string& key) {
    if (!j_.contains(key)) fail(child(key), "missing field");
    used_.push_back(key);
    return j_.at(key);
}

const Json& Reader::raw(const std::string& key) { return get(key); }

double Reader::number(const std::string& key) { return as_number(get(key), child(key)); }

double Reader::number_or(const std::string& key, double fallback) {
    if (!j_.contains(key)) return fallback;
    return number(key);
}

long Reader::integer(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number_integer()) fail(child(key), std::string("expected an integer, got ") + type_name(v));
    return v.get<long>();
}

long Reader::integer_or(const std::string& key, long fallback) {
    if (!j_.contains(key)) return fallback;
    return integer(key);
}

bool Reader::boolean_or(const std::string& key, bool fallback) {
    if (!j_.contains(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_boolean()) fail(child(key), std::string("expected a boolean, got ") + type_name(v));
    return v.get<bool>();
}

std::string Reader::string(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_string()) fail(child(key), std::string("expected a string, got ") + type_name(v));
    return v.get<std::string>();
}

std::vector<double> Reader::numbers(const std::string& key) { return as_numbers(get(key), child(key)); }

void Reader::finish() const {
    for (const auto& [key, value] : j_.items()) {
        if (value.is_null()) continue;
        if (std::find(used_.begin(), used_.end(), key) == used_.end()) fail(child(key), "unknown field");
    }
}

Json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

Json parse_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin + ": invalid JSON (" + e.what() + ")");
    }
}

double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, std::string("expected a number, got ") + type_name(j));
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

std::vector<double> as_numbers(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, std::string("expected an array of numbers, got ") + type_name(j));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Interval interval_from(const Json& j, const std::string& path) {
    const auto v = as_numbers(j, path);
    if (v.size() != 2) fail(path, "expected [lower, upper]");
    if (v[0] > v[1]) fail(path, "lower > upper");
    return {v[0], v[1]};
}

Json to_json(const Interval& i) { return Json::array({i.lower, i.upper}); }

std::vector<Interval> intervals_from(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of [lower, upper] pairs");
    std::vector<Interval> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(interval_from(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Json to_json(const std::vector<Interval>& v) {
    Json out = Json::array();
    for (const auto& i : v) out.push_back(to_json(i));
    return out;
}

GainInterval gains_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    GainInterval g{r.number("g_lower"), r.number("g_upper"), r.number("g_star")};
    r.finish();
    try {
        g.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return g;
}

Json to_json(const GainInterval& g) { return {{"g_lower", g.g_lower}, {"g_upper", g.g_upper}, {"g_star", g.g_star}}; }

QFilterSpec qfilter_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    QFilterSpec q;
    q.nu = static_cast<int>(r.integer("nu"));
    q.a = r.numbers("a");
    q.tau = r.number_or("tau", 0.1);
    r.finish();
    try {
        q.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return q;
}

Json to_json(const QFilterSpec& q) { return {{"nu", q.nu}, {"a", q.a}, {"tau", q.tau}}; }

TransferFunction transfer_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    const auto num = r.numbers("num");
    const auto den = r.numbers("den");
    r.finish();
    if (num.empty() || den.empty()) fail(path, "num and den need at least one coefficient");
    try {
        return {Polynomial(num), Polynomial(den)};
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

Json to_json(const TransferFunction& tf) {
    return {{"num", tf.num().coeffs()}, {"den", tf.den().coeffs()}};
}

PlantSample sample_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    PlantSample s;
    s.alpha = r.numbers("alpha");
    s.beta = r.has("beta") ? r.numbers("beta") : std::vector<double>{};
    s.g = r.number("g");
    r.finish();
    if (s.alpha.empty()) fail(path + ".alpha", "need at least one coefficient");
    if (s.beta.size() >= s.alpha.size()) fail(path + ".beta", "need fewer beta than alpha coefficients");
    return s;
}

Json to_json(const PlantSample& s) { return {{"alpha", s.alpha}, {"beta", s.beta}, {"g", s.g}}; }

PlantFamily family_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    PlantFamily f;
    f.n = static_cast<int>(r.integer("n"));
    f.nu = static_cast<int>(r.integer("nu"));
    f.alpha_bounds = intervals_from(r.raw("alpha"), r.child("alpha"));
    f.beta_bounds = r.has("beta") ? intervals_from(r.raw("beta"), r.child("beta")) : std::vector<Interval>{};
    f.gain = gains_from(r.raw("gains"), r.child("gains"));
    r.finish();
    try {
        f.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return f;
}

Json to_json(const PlantFamily& f) {
    return {{"n", f.n}, {"nu", f.nu}, {"alpha", to_json(f.alpha_bounds)}, {"beta", to_json(f.beta_bounds)},
            {"gains", to_json(f.gain)}};
}

SignalSpec signal_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    SignalSpec s;
    try {
        s.kind = signal_kind_from_string(r.string("kind"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(path + ".kind", e.what());
    }
    switch (s.kind) {
        case SignalSpec::Kind::zero: break;
        case SignalSpec::Kind::step:
            s.amplitude = r.number("amplitude");
            s.start_time = r.number_or("start_time", 0.0);
            break;
        case SignalSpec::Kind::sinusoid:
            s.amplitude = r.number("amplitude");
            s.frequency = r.number("frequency");
            break;
        case SignalSpec::Kind::sum: {
            const Json& c = r.raw("components");
            if (!c.is_array()) fail(path + ".components", "expected an array");
            for (std::size_t i = 0; i < c.size(); ++i)
                s.components.push_back(signal_from(c[i], path + ".components[" + std::to_string(i) + "]"));
            break;
        }
    }
    r.finish();
    try {
        s.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return s;
}

Json to_json(const SignalSpec& s) {
    Json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case SignalSpec::Kind::zero: break;
        case SignalSpec::Kind::step:
            j["amplitude"] = s.amplitude;
            j["start_time"] = s.start_time;
            break;
        case SignalSpec::Kind::sinusoid:
            j["amplitude"] = s.amplitude;
            j["frequency"] = s.frequency;
            break;
        case SignalSpec::Kind::sum: {
            Json c = Json::array();
            for (const auto& x : s.components) c.push_back(to_json(x));
            j["components"] = c;
            break;
        }
    }
    return j;
}

Field field_from(const Json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return field_catalog(j.get<std::string>());
        } catch (const Error& e) {
            fail(path, e.what());
        }
    }
    if (j.is_number()) return Field::constant(as_number(j, path));
    Reader r(j, path);
    Field f;
    const Json& terms = r.raw("terms");
    if (!terms.is_array()) fail(r.child("terms"), "expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = r.child("terms") + "[" + std::to_string(i) + "]";
        Reader t(terms[i], tp);
        Monomial m;
        m.coef = t.number("coef");
        if (t.has("range")) m.range = interval_from(t.raw("range"), t.child("range"));
        if (t.has("vars")) {
            const Json& v = t.raw("vars");
            if (!v.is_object()) fail(t.child("vars"), "expected an object of variable powers");
            for (const auto& [name, power] : v.items()) {
                if (!power.is_number_integer() || power.get<int>() < 0)
                    fail(t.child("vars") + "." + name, "expected a non-negative integer power");
                try {
                    m.powers.emplace_back(VarRef::parse(name), power.get<int>());
                } catch (const Error& e) {
                    fail(t.child("vars") + "." + name, e.what());
                }
            }
        }
        t.finish();
        f.terms.push_back(std::move(m));
    }
    if (r.has("clip")) f.clip = interval_from(r.raw("clip"), r.child("clip"));
    r.finish();
    return f;
}

Json to_json(const Field& f) {
    Json terms = Json::array();
    for (const auto& m : f.terms) {
        Json t{{"coef", m.coef}};
        if (m.range) t["range"] = to_json(*m.range);
        Json vars = Json::object();
        for (const auto& [ref, p] : m.powers) vars[ref.name()] = p;
        t["vars"] = vars;
        terms.push_back(t);
    }
    Json j{{"terms", terms}};
    if (f.clip) j["clip"] = to_json(*f.clip);
    return j;
}

namespace {

std::vector<Field> fields_from(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of fields");
    std::vector<Field> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(field_from(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Json fields_json(const std::vector<Field>& v) {
    Json out = Json::array();
    for (const auto& f : v) out.push_back(to_json(f));
    return out;
}

template <typename F>
auto validated(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

}  // namespace

NormalFormPlant plant_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    NormalFormPlant p;
    p.nu = static_cast<int>(r.integer("nu"));
    p.n = static_cast<int>(r.integer("n"));
    p.f = field_from(r.raw("f"), r.child("f"));
    p.g = field_from(r.raw("g"), r.child("g"));
    p.h = r.has("h") ? fields_from(r.raw("h"), r.child("h")) : std::vector<Field>{};
    p.d = r.has("d") ? signal_from(r.raw("d"), r.child("d")) : SignalSpec{};
    if (r.has("dz")) {
        const Json& dz = r.raw("dz");
        if (!dz.is_array()) fail(r.child("dz"), "expected an array of signals");
        for (std::size_t i = 0; i < dz.size(); ++i)
            p.dz.push_back(signal_from(dz[i], r.child("dz") + "[" + std::to_string(i) + "]"));
    }
    p.g_lower = r.number("g_lower");
    p.g_upper = r.number("g_upper");
    r.finish();
    validated(path, [&] {
        p.validate();
        return 0;
    });
    return p;
}

Json to_json(const NormalFormPlant& p) {
    Json dz = Json::array();
    for (const auto& s : p.dz) dz.push_back(to_json(s));
    return {{"nu", p.nu},          {"n", p.n},          {"f", to_json(p.f)},         {"g", to_json(p.g)},
            {"h", fields_json(p.h)}, {"d", to_json(p.d)}, {"dz", dz},                  {"g_lower", p.g_lower},
            {"g_upper", p.g_upper}};
}

NominalModel nominal_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    NominalModel n;
    n.f_n = field_from(r.raw("f_n"), r.child("f_n"));
    n.g_n = field_from(r.raw("g_n"), r.child("g_n"));
    n.h_n = r.has("h_n") ? fields_from(r.raw("h_n"), r.child("h_n")) : std::vector<Field>{};
    r.finish();
    return n;
}

Json to_json(const NominalModel& n) {
    return {{"f_n", to_json(n.f_n)}, {"g_n", to_json(n.g_n)}, {"h_n", fields_json(n.h_n)}};
}

BaselineController controller_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    BaselineController c;
    c.m = static_cast<int>(r.integer("m"));
    c.Pi = r.has("Pi") ? fields_from(r.raw("Pi"), r.child("Pi")) : std::vector<Field>{};
    c.pi = field_from(r.raw("pi"), r.child("pi"));
    r.finish();
    validated(path, [&] {
        c.validate();
        return 0;
    });
    return c;
}

Json to_json(const BaselineController& c) { return {{"m", c.m}, {"Pi", fields_json(c.Pi)}, {"pi", to_json(c.pi)}}; }

Envelope envelope_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    Envelope e;
    auto box = [&](const char* key) {
        return r.has(key) ? intervals_from(r.raw(key), r.child(key)) : std::vector<Interval>{};
    };
    e.x = box("x");
    e.z = box("z");
    e.eta = box("eta");
    e.M_d = r.number_or("M_d", 0.0);
    e.M_dz = r.number_or("M_dz", 0.0);
    e.s0_x = box("s0_x");
    e.s0_z = box("s0_z");
    e.s0_eta = box("s0_eta");
    r.finish();
    return e;
}

Json to_json(const Envelope& e) {
    return {{"x", to_json(e.x)},       {"z", to_json(e.z)},       {"eta", to_json(e.eta)},
            {"M_d", e.M_d},            {"M_dz", e.M_dz},          {"s0_x", to_json(e.s0_x)},
            {"s0_z", to_json(e.s0_z)}, {"s0_eta", to_json(e.s0_eta)}};
}

InitialState initial_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    InitialState s;
    s.x = r.numbers("x");
    s.z = r.has("z") ? r.numbers("z") : std::vector<double>{};
    s.eta = r.has("eta") ? r.numbers("eta") : std::vector<double>{};
    if (r.has("zbar")) s.zbar = r.numbers("zbar");
    if (r.has("q")) s.q = r.numbers("q");
    if (r.has("p")) s.p = r.numbers("p");
    r.finish();
    return s;
}

Json to_json(const InitialState& s) {
    Json j{{"x", s.x}, {"z", s.z}, {"eta", s.eta}};
    if (s.zbar) j["zbar"] = *s.zbar;
    if (s.q) j["q"] = *s.q;
    if (s.p) j["p"] = *s.p;
    return j;
}

std::vector<double> parse_tau_list(const std::string& text, const std::string& path) {
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(path, "cannot parse number '" + s + "'");
        }
    };
    if (text.find(':') != std::string::npos) {
        const auto a = text.find(':'), b = text.find(':', a + 1);
        if (b == std::string::npos || text.substr(b + 1) != "log10")
            fail(path, "expected start:stop:log10");
        const double start = num(text.substr(0, a)), stop = num(text.substr(a + 1, b - a - 1));
        if (!(start > 0.0) || !(stop > 0.0)) fail(path, "grid bounds must be positive");
        const double l0 = std::log10(start), l1 = std::log10(stop);
        const int steps = static_cast<int>(std::lround(std::abs(l1 - l0)));
        const double dir = l1 < l0 ? -1.0 : 1.0;
        for (int k = 0; k <= steps; ++k) out.push_back(std::pow(10.0, l0 + dir * k));
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (!item.empty()) out.push_back(num(item));
    }
    return out;
}

std::vector<double> tau_list_from(const Json& j, const std::string& path) {
    if (j.is_string()) return parse_tau_list(j.get<std::string>(), path);
    return as_numbers(j, path);
}

Json complex_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

}  // namespace dob::io
