// Check report structure shared by the verification checks and the CLI.
#ifndef DEGLAP_REPORT_HPP
#define DEGLAP_REPORT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deglap/grid.hpp"

namespace deglap {

struct CheckReport {
    std::string name;          ///< inequality id
    std::string statement;     ///< human-readable form of the checked inequality
    bool passed = false;
    double empirical_C = 0.0;  ///< smallest constant observed over the sweep
    nlohmann::json witness = nlohmann::json::object();
    nlohmann::json sweep = nlohmann::json::object();
    std::uint64_t seed = 0;
    int grid_nx = 0, grid_ny = 0;
    double grid_h = 0.0;
    std::vector<std::string> conventions;
    std::string notes;

    void set_grid(const Grid2D& g) {
        grid_nx = g.nx;
        grid_ny = g.ny;
        grid_h = g.h;
    }
    nlohmann::json to_json(const std::string& config_hash = "") const;
};

/// Aggregate CSV, one row per check.
std::string check_summary_csv(std::span<const CheckReport> reports,
                              const std::string& config_hash);

} // namespace deglap

#endif
