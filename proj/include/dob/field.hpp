#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dob/robust_analysis.hpp"

namespace dob {

/// Variable reference inside a polynomial field: x1, z2, dz1, eta3 or y.
struct VarRef {
    enum class Kind { x, z, dz, eta, y };
    Kind kind = Kind::x;
    int index = 0;  // zero-based; unused for y

    static VarRef parse(const std::string& name);
    [[nodiscard]] std::string name() const;
    friend bool operator==(const VarRef&, const VarRef&) = default;
};

/// Point at which a field is evaluated. Nominal fields read z-bar through z.
struct Vars {
    std::span<const double> x;
    std::span<const double> z;
    std::span<const double> dz;
    std::span<const double> eta;
    double y = 0.0;
};

struct Monomial {
    double coef = 0.0;
    std::optional<Interval> range;  // uncertainty interval for coef
    std::vector<std::pair<VarRef, int>> powers;
};

/// Multivariate polynomial with optional output clipping.
struct Field {
    std::vector<Monomial> terms;
    std::optional<Interval> clip;

    static Field constant(double c);
    /// Adds coef * product(vars[i]^pow[i]).
    Field& add(double coef, std::vector<std::pair<std::string, int>> powers = {},
               std::optional<Interval> range = std::nullopt);

    [[nodiscard]] double operator()(const Vars& v) const;
    /// Copy with every ranged coefficient redrawn uniformly from its range.
    [[nodiscard]] Field sampled(std::mt19937_64& rng) const;
    [[nodiscard]] bool uncertain() const;
    /// Throws dob::Error naming `what` if a variable is outside the allowed kinds or dimensions.
    void validate(const std::string& what, std::vector<std::pair<VarRef::Kind, int>> allowed) const;
};

/// Named built-in fields: "zero", "one".
Field field_catalog(const std::string& name);

}  // namespace dob
