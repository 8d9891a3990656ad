#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dob {

/// Uniformly sampled time series with named columns.
class SimulationTrace {
public:
    SimulationTrace() = default;
    explicit SimulationTrace(std::vector<std::string> names);

    void append(double t, const std::vector<double>& row);

    [[nodiscard]] const std::vector<double>& t() const { return t_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] bool has(const std::string& name) const;
    [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
    [[nodiscard]] std::size_t size() const { return t_.size(); }

    void write_csv(std::ostream& os) const;

private:
    std::vector<std::string> names_;
    std::vector<double> t_;
    std::vector<std::vector<double>> columns_;
};

}  // namespace dob
