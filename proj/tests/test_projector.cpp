#include <catch2/catch_amalgamated.hpp>

#include "oracle_helpers.hpp"

using namespace kryct;

TEST_CASE("axis-aligned ray crosses every voxel with its exact spacing") {
    GridSpec grid = GridSpec::centered({16, 8, 8}, {1.0, 2.0, 2.0});
    RayPath p = trace_ray({-100.0, 0.3, 0.4}, {100.0, 0.3, 0.4}, grid);
    REQUIRE(p.voxels.size() == 16);
    for (double len : p.lengths) CHECK_THAT(len, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(p.total_length(), Catch::Matchers::WithinAbs(16.0, 1e-12));
    // voxels advance along +x contiguously
    for (std::size_t i = 1; i < p.voxels.size(); ++i) CHECK(p.voxels[i] == p.voxels[i - 1] + 1);
}

TEST_CASE("intersection lengths always sum to the box chord") {
    GridSpec grid = GridSpec::centered({7, 9, 11}, {1.2, 0.7, 1.0});
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> pos(-6.0, 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double t = ang(rng);
        const Vec3 src{40.0 * std::cos(t), 40.0 * std::sin(t), pos(rng) * 0.5};
        const Vec3 dst{pos(rng) * 0.2, pos(rng) * 0.2, pos(rng) * 0.4};
        RayPath p = trace_ray(src, dst, grid);
        const double chord = (p.t_exit - p.t_entry) * vec_norm(dst - src);
        CHECK_THAT(p.total_length(), Catch::Matchers::WithinAbs(chord, 1e-9));
        for (double len : p.lengths) CHECK(len > 0.0);
    }
}

TEST_CASE("rays that miss the volume produce empty paths") {
    GridSpec grid = GridSpec::centered({8, 8, 8}, {1.0, 1.0, 1.0});
    CHECK(trace_ray({-20, 30, 0}, {20, 30, 0}, grid).voxels.empty());
    CHECK(trace_ray({-20, 0, 9}, {20, 0, 9}, grid).voxels.empty());
    // parallel to a face, exactly on its plane: treated as a miss, not a crash
    CHECK(trace_ray({-20, 4.0, 0}, {20, 4.0, 0}, grid).voxels.empty());
}

TEST_CASE("boundary-grazing rays stay consistent") {
    GridSpec grid = GridSpec::centered({8, 8, 8}, {1.0, 1.0, 1.0});
    // along a voxel-plane inside the volume: lengths non-negative, chord exact
    RayPath p = trace_ray({-20.0, 1.0, 0.5}, {20.0, 1.0, 0.5}, grid);
    const double chord = (p.t_exit - p.t_entry) * 40.0;
    CHECK_THAT(p.total_length(), Catch::Matchers::WithinAbs(chord, 1e-9));
    // diagonal through voxel corners
    RayPath d = trace_ray({-10, -10, -10}, {10, 10, 10}, grid);
    const double dchord = (d.t_exit - d.t_entry) * vec_norm(Vec3{20, 20, 20});
    CHECK_THAT(d.total_length(), Catch::Matchers::WithinAbs(dchord, 1e-9));
    for (double len : d.lengths) CHECK(len > 0.0);
}

TEST_CASE("forward projection of a uniform volume returns ray chords") {
    GridSpec grid = testutil::tiny_grid(6, 6, 6);
    ConeBeamGeometry g = testutil::tiny_geometry(4, 8, 8);
    std::vector<double> ones(grid.dims.count(), 2.5);
    std::vector<double> proj(g.ray_count());
    project_forward(ones, grid, g, proj);
    std::size_t idx = 0;
    for (std::size_t ia = 0; ia < g.n_angles(); ++ia)
        for (int iv = 0; iv < g.detector.nv; ++iv)
            for (int iu = 0; iu < g.detector.nu; ++iu, ++idx) {
                RayPath p = trace_ray(source_position(g, ia),
                                      detector_pixel_center(g, ia, iu, iv), grid);
                CHECK_THAT(proj[idx],
                           Catch::Matchers::WithinAbs(2.5 * p.total_length(), 1e-10));
            }
}

TEST_CASE("forward and back projection are an exact adjoint pair") {
    ConeBeamProjector a(testutil::tiny_grid(5, 6, 4), testutil::tiny_geometry(7, 9, 8));
    std::mt19937 rng(22);
    for (int trial = 0; trial < 5; ++trial) CHECK(testutil::adjoint_gap(a, rng) < 1e-6);
}

TEST_CASE("projector matricization: adjoint matrix is the exact transpose") {
    ConeBeamProjector a(testutil::tiny_grid(), testutil::tiny_geometry(3, 6, 5));
    const Eigen::MatrixXd fwd = testutil::dense_from_apply(a);
    const Eigen::MatrixXd adj = testutil::dense_from_adjoint(a);
    CHECK((fwd - adj).cwiseAbs().maxCoeff() < 1e-14);
    // the matrix is non-trivial and non-negative
    CHECK(fwd.cwiseAbs().maxCoeff() > 0.0);
    CHECK(fwd.minCoeff() >= 0.0);
}

TEST_CASE("row and column sums from ones-products match the dense matrix") {
    ConeBeamProjector a(testutil::tiny_grid(), testutil::tiny_geometry(3, 6, 5));
    const Eigen::MatrixXd m = testutil::dense_from_apply(a);
    const auto row = a.apply(std::vector<double>(a.domain_size(), 1.0));
    const auto col = a.apply_adjoint(std::vector<double>(a.range_size(), 1.0));
    for (std::size_t i = 0; i < row.size(); ++i)
        CHECK_THAT(row[i], Catch::Matchers::WithinAbs(
                               m.row(static_cast<Eigen::Index>(i)).sum(), 1e-12));
    for (std::size_t j = 0; j < col.size(); ++j)
        CHECK_THAT(col[j], Catch::Matchers::WithinAbs(
                               m.col(static_cast<Eigen::Index>(j)).sum(), 1e-12));
}

TEST_CASE("repeated projector evaluations are bit-identical") {
    ConeBeamProjector a(testutil::tiny_grid(6, 5, 6), testutil::tiny_geometry(5));
    std::mt19937 rng(23);
    const auto x = testutil::random_vector(a.domain_size(), rng);
    const auto y = testutil::random_vector(a.range_size(), rng);
    const auto ax = a.apply(x);
    const auto aty = a.apply_adjoint(y);
    for (int i = 0; i < 3; ++i) {
        CHECK(a.apply(x) == ax);
        CHECK(a.apply_adjoint(y) == aty);
    }
}

TEST_CASE("a source inside the volume is a configuration error") {
    GridSpec grid = GridSpec::centered({32, 32, 32}, {10.0, 10.0, 10.0});
    ConeBeamGeometry g = testutil::tiny_geometry(4);   // dso 40 < half-extent 160
    CHECK_THROWS_AS(ConeBeamProjector(grid, g), ConfigError);
    std::vector<double> vol(grid.dims.count(), 0.0), proj(g.ray_count());
    CHECK_THROWS_AS(project_forward(vol, grid, g, proj), ConfigError);
    CHECK_THROWS_AS(project_adjoint(proj, grid, g, vol), ConfigError);
}

TEST_CASE("angle subsampling keeps floor(i*n/k) and reslices the data") {
    CHECK(subsample_indices(10, 4) == std::vector<std::size_t>{0, 2, 5, 7});
    CHECK(subsample_indices(180, 180).size() == 180);
    CHECK(subsample_indices(7, 1) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(subsample_indices(5, 6), ConfigError);
    CHECK_THROWS_AS(subsample_indices(5, 0), ConfigError);

    ProjectionSet full(testutil::tiny_geometry(10));
    std::mt19937 rng(24);
    full.data = testutil::random_vector(full.data.size(), rng);
    ProjectionSet sub = subsample_angles(full, 4);
    REQUIRE(sub.geometry.n_angles() == 4);
    const std::size_t per = full.geometry.rays_per_angle();
    const std::vector<std::size_t> keep{0, 2, 5, 7};
    for (std::size_t i = 0; i < keep.size(); ++i) {
        CHECK(sub.geometry.angles[i] == full.geometry.angles[keep[i]]);
        for (std::size_t r = 0; r < per; ++r)
            CHECK(sub.data[i * per + r] == full.data[keep[i] * per + r]);
    }
}

TEST_CASE("projector rejects mismatched buffer sizes") {
    ConeBeamProjector a(testutil::tiny_grid(), testutil::tiny_geometry(2));
    std::vector<double> x(a.domain_size() + 1), out(a.range_size());
    CHECK_THROWS_AS(a.apply(x, out), ConfigError);
}
