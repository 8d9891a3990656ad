#include "dob/trace.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "dob/error.hpp"

namespace dob {

SimulationTrace::SimulationTrace(std::vector<std::string> names)
    : names_(std::move(names)), columns_(names_.size()) {}

void SimulationTrace::append(double t, const std::vector<double>& row) {
    if (row.size() != names_.size()) throw Error("trace: row width does not match the column count");
    t_.push_back(t);
    for (std::size_t i = 0; i < row.size(); ++i) columns_[i].push_back(row[i]);
}

bool SimulationTrace::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& SimulationTrace::column(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error("trace: no column '" + name + "'");
    return columns_[static_cast<std::size_t>(it - names_.begin())];
}

void SimulationTrace::write_csv(std::ostream& os) const {
    os << "t";
    for (const auto& n : names_) os << ',' << n;
    os << '\n' << std::setprecision(12);
    for (std::size_t k = 0; k < t_.size(); ++k) {
        os << t_[k];
        for (const auto& c : columns_) os << ',' << c[k];
        os << '\n';
    }
}

}  // namespace dob
