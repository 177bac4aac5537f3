#pragma once

// Shared test scaffolding: dense matricization of matrix-free operators (the
// independent oracle most solver tests compare against), random data, and a
// couple of small reusable geometries.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include <kryct/kryct.hpp>

namespace testutil {

/// Materialise a LinearMap column by column through apply().
inline Eigen::MatrixXd dense_from_apply(const kryct::LinearMap& map) {
    Eigen::MatrixXd m(map.range_size(), map.domain_size());
    std::vector<double> e(map.domain_size(), 0.0);
    for (std::size_t j = 0; j < map.domain_size(); ++j) {
        e[j] = 1.0;
        const auto col = map.apply(e);
        for (std::size_t i = 0; i < col.size(); ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        e[j] = 0.0;
    }
    return m;
}

/// Materialise the operator the adjoint actually implements, row by row.
inline Eigen::MatrixXd dense_from_adjoint(const kryct::LinearMap& map) {
    Eigen::MatrixXd m(map.range_size(), map.domain_size());
    std::vector<double> e(map.range_size(), 0.0);
    for (std::size_t i = 0; i < map.range_size(); ++i) {
        e[i] = 1.0;
        const auto row = map.apply_adjoint(e);
        for (std::size_t j = 0; j < row.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        e[i] = 0.0;
    }
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

/// Relative adjoint-identity gap |<Ax,y> - <x,A'y>| / |<Ax,y>| on random data.
inline double adjoint_gap(const kryct::LinearMap& map, std::mt19937& rng) {
    const auto x = random_vector(map.domain_size(), rng);
    const auto y = random_vector(map.range_size(), rng);
    const double lhs = kryct::dot(map.apply(x), y);
    const double rhs = kryct::dot(x, map.apply_adjoint(y));
    return std::abs(lhs - rhs) / std::max(1e-300, std::abs(lhs));
}

/// A LinearMap backed by an explicit Eigen matrix; lets solver runs on the
/// matrix-free operator be replayed against its matricization.
class DenseMap final : public kryct::LinearMap {
  public:
    using kryct::LinearMap::apply;
    using kryct::LinearMap::apply_adjoint;

    explicit DenseMap(Eigen::MatrixXd m) : m_(std::move(m)) {}

    std::size_t domain_size() const override { return static_cast<std::size_t>(m_.cols()); }
    std::size_t range_size() const override { return static_cast<std::size_t>(m_.rows()); }

    void apply(std::span<const double> x, std::span<double> out) const override {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), m_.cols());
        Eigen::Map<Eigen::VectorXd> ov(out.data(), m_.rows());
        ov = m_ * xv;
    }
    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        Eigen::Map<const Eigen::VectorXd> yv(y.data(), m_.rows());
        Eigen::Map<Eigen::VectorXd> ov(out.data(), m_.cols());
        ov = m_.transpose() * yv;
    }

    const Eigen::MatrixXd& matrix() const { return m_; }

  private:
    Eigen::MatrixXd m_;
};

/// Normal-equations least-squares solution, fully dense.
inline Eigen::VectorXd dense_lsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return (a.transpose() * a).ldlt().solve(a.transpose() * b);
}

/// Small but asymmetric cone-beam geometry exercising offsets and anisotropic
/// pitches.
inline kryct::ConeBeamGeometry tiny_geometry(std::size_t n_angles = 8, int nu = 10, int nv = 9) {
    kryct::ConeBeamGeometry g;
    g.dso = 40.0;
    g.dsd = 90.0;
    g.detector = {nu, nv, 1.6, 1.9};
    g.offset_u = 0.7;
    g.offset_v = -0.5;
    for (std::size_t i = 0; i < n_angles; ++i)
        g.angles.push_back(2.0 * std::numbers::pi * static_cast<double>(i) /
                           static_cast<double>(n_angles));
    return g;
}

inline kryct::GridSpec tiny_grid(int nx = 4, int ny = 4, int nz = 4) {
    return kryct::GridSpec::centered({nx, ny, nz}, {1.0, 1.1, 0.9});
}

}  // namespace testutil
