#include "dob/field.hpp"

#include <algorithm>
#include <cmath>

#include "dob/error.hpp"

namespace dob {

VarRef VarRef::parse(const std::string& name) {
    if (name == "y") return {Kind::y, 0};
    static const std::pair<const char*, Kind> prefixes[] = {
        {"eta", Kind::eta}, {"dz", Kind::dz}, {"x", Kind::x}, {"z", Kind::z}};
    for (const auto& [prefix, kind] : prefixes) {
        const std::string p = prefix;
        if (name.rfind(p, 0) != 0) continue;
        const std::string digits = name.substr(p.size());
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
            break;
        const int i = std::stoi(digits);
        if (i < 1) break;
        return {kind, i - 1};
    }
    throw Error("unknown variable '" + name + "' (expected x#, z#, dz#, eta# or y)");
}

std::string VarRef::name() const {
    switch (kind) {
        case Kind::x: return "x" + std::to_string(index + 1);
        case Kind::z: return "z" + std::to_string(index + 1);
        case Kind::dz: return "dz" + std::to_string(index + 1);
        case Kind::eta: return "eta" + std::to_string(index + 1);
        case Kind::y: return "y";
    }
    return "y";
}

Field Field::constant(double c) {
    Field f;
    f.add(c);
    return f;
}

Field& Field::add(double coef, std::vector<std::pair<std::string, int>> powers, std::optional<Interval> range) {
    Monomial m;
    m.coef = coef;
    m.range = range;
    for (auto& [name, p] : powers) {
        if (p < 0) throw Error("field: negative power for " + name);
        m.powers.emplace_back(VarRef::parse(name), p);
    }
    terms.push_back(std::move(m));
    return *this;
}

namespace {

double lookup(const VarRef& r, const Vars& v) {
    auto at = [&](std::span<const double> s) {
        if (static_cast<std::size_t>(r.index) >= s.size()) throw Error("field: variable " + r.name() + " out of range");
        return s[static_cast<std::size_t>(r.index)];
    };
    switch (r.kind) {
        case VarRef::Kind::x: return at(v.x);
        case VarRef::Kind::z: return at(v.z);
        case VarRef::Kind::dz: return at(v.dz);
        case VarRef::Kind::eta: return at(v.eta);
        case VarRef::Kind::y: return v.y;
    }
    return 0.0;
}

}  // namespace

double Field::operator()(const Vars& v) const {
    double sum = 0.0;
    for (const auto& m : terms) {
        double term = m.coef;
        for (const auto& [ref, p] : m.powers) {
            const double base = lookup(ref, v);
            for (int k = 0; k < p; ++k) term *= base;
        }
        sum += term;
    }
    if (clip) sum = std::clamp(sum, clip->lower, clip->upper);
    return sum;
}

Field Field::sampled(std::mt19937_64& rng) const {
    Field out = *this;
    for (auto& m : out.terms)
        if (m.range) m.coef = m.range->lower + (m.range->upper - m.range->lower) * std::generate_canonical<double, 53>(rng);
    return out;
}

bool Field::uncertain() const {
    return std::any_of(terms.begin(), terms.end(), [](const Monomial& m) { return m.range && !m.range->degenerate(); });
}

void Field::validate(const std::string& what, std::vector<std::pair<VarRef::Kind, int>> allowed) const {
    if (clip && !(clip->lower <= clip->upper)) throw Error(what + ": clip interval with lower > upper");
    for (const auto& m : terms) {
        if (!std::isfinite(m.coef)) throw Error(what + ": non-finite coefficient");
        if (m.range && !(m.range->lower <= m.range->upper)) throw Error(what + ": coefficient range with lower > upper");
        for (const auto& [ref, p] : m.powers) {
            const auto it = std::find_if(allowed.begin(), allowed.end(), [&](const auto& a) { return a.first == ref.kind; });
            if (it == allowed.end() || (ref.kind != VarRef::Kind::y && ref.index >= it->second))
                throw Error(what + ": variable " + ref.name() + " is not available here");
        }
    }
}

Field field_catalog(const std::string& name) {
    if (name == "zero") return Field{};
    if (name == "one") return Field::constant(1.0);
    throw Error("unknown catalog field '" + name + "'");
}

}  // namespace dob
