#pragma once

#include <stdexcept>
#include <string>

namespace dob {

/// Raised for contract violations on inputs (bad shapes, degenerate polynomials,
/// properness, out-of-family nominal models, ...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dob
