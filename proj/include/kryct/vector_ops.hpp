#pragma once

// Small dense-vector kernels used by the solvers. Reductions are sequential
// left-to-right double accumulation so repeated runs give bit-identical
// results regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "types.hpp"

namespace kryct {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw ConfigError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(double c, std::span<double> x) {
    for (double& v : x) v *= c;
}

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline std::vector<double> sub(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("sub: length mismatch");
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

}  // namespace kryct
