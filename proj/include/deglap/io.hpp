// Artifact IO: CSV field round-trips (17 significant digits), JSON domain
// specs, atomic file writes and config hashing.
#ifndef DEGLAP_IO_HPP
#define DEGLAP_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "deglap/grid.hpp"

namespace deglap {

struct SymMat2;
struct MatrixWeightField;

/// Writes content to path via a temp file in the same directory plus rename.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// FNV-1a 64-bit over raw bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest-exact decimal for a double is overkill here; the contract is 17
/// significant digits, which round-trips any IEEE double.
std::string format_double(double v);

std::string scalar_field_csv(const ScalarField& f, const std::string& config_hash);
ScalarField parse_scalar_field_csv(const std::string& text);

std::string vector_field_csv(const VectorField& f, const std::string& config_hash);
VectorField parse_vector_field_csv(const std::string& text);

std::string matrix_field_csv(const MatrixWeightField& f, const std::string& config_hash);
MatrixWeightField parse_matrix_field_csv(const std::string& text);

struct CurveRow {
    double lambda = 0.0;
    double mass = 0.0;
};
std::string curve_csv(const std::vector<CurveRow>& rows, const std::string& config_hash);
std::vector<CurveRow> parse_curve_csv(const std::string& text);

/// Loads {"type":"rect"|"lipschitz","nx","ny","h","origin",...} documents.
/// Unknown keys are rejected.
DomainMask domain_from_json_text(const std::string& text);
std::string domain_to_json_text(const DomainMask& mask);

} // namespace deglap

#endif
