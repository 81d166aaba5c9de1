// Shared small types and error helpers.
#ifndef DEGLAP_COMMON_HPP
#define DEGLAP_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace deglap {

/// Thrown when a configuration file or argument set is malformed.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a computation cannot produce a meaningful result
/// (non-convergence, singular data, empty averages).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double t) const { return {x * t, y * t}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double t, Vec2 v) { return v * t; }

} // namespace deglap

#endif
