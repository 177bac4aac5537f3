#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "oracle_helpers.hpp"

using namespace kryct;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("kryct_core_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("volume uses x-fastest flat indexing") {
    Volume v = Volume::centered({3, 4, 5});
    REQUIRE(v.data.size() == 60);
    v.at(1, 2, 3) = 7.0;
    CHECK(v.data[1 + 3 * (2 + 4 * 3)] == 7.0);
    CHECK(v.index(2, 3, 4) == v.data.size() - 1);
}

TEST_CASE("centered grids surround the rotation axis symmetrically") {
    GridSpec g = GridSpec::centered({8, 6, 4}, {1.0, 2.0, 3.0});
    CHECK(g.origin.x == -4.0);
    CHECK(g.origin.y == -6.0);
    CHECK(g.origin.z == -6.0);
    CHECK(g.max_corner().x == 4.0);
    CHECK(g.max_corner().y == 6.0);
    CHECK(g.max_corner().z == 6.0);
}

TEST_CASE("validation rejects malformed volumes and geometries") {
    CHECK_THROWS_AS((GridSpec{{0, 4, 4}}).validate(), ConfigError);
    CHECK_THROWS_AS((GridSpec{{4, 4, 4}, {1.0, 0.0, 1.0}}).validate(), ConfigError);

    Volume v = Volume::centered({2, 2, 2});
    v.data[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v.data[3] = 0.0;
    v.data.pop_back();
    CHECK_THROWS_AS(v.validate(), ConfigError);

    ConeBeamGeometry g = testutil::tiny_geometry();
    g.dsd = g.dso;   // detector at the source
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = testutil::tiny_geometry();
    g.angles.clear();
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = testutil::tiny_geometry();
    g.detector.pu = -1.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("dot and norm2 agree with a dense linear algebra library") {
    std::mt19937 rng(11);
    const auto a = testutil::random_vector(257, rng);
    const auto b = testutil::random_vector(257, rng);
    Eigen::Map<const Eigen::VectorXd> av(a.data(), 257), bv(b.data(), 257);
    CHECK_THAT(dot(a, b), Catch::Matchers::WithinRel(av.dot(bv), 1e-13));
    CHECK_THAT(norm2(a), Catch::Matchers::WithinRel(av.norm(), 1e-13));
    CHECK_THROWS_AS(dot(a, std::vector<double>(11, 0.0)), ConfigError);
}

TEST_CASE("reductions are reproducible across repeated evaluation") {
    std::mt19937 rng(12);
    const auto a = testutil::random_vector(10001, rng);
    const double first = dot(a, a);
    for (int i = 0; i < 5; ++i) CHECK(dot(a, a) == first);
}

TEST_CASE("identity and diagonal maps matricize as expected") {
    std::mt19937 rng(13);
    IdentityMap id(5);
    CHECK(testutil::dense_from_apply(id).isIdentity(0.0));

    const auto w = testutil::random_vector(6, rng);
    DiagonalMap diag(w);
    const auto m = testutil::dense_from_apply(diag);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(m(i, j) == (i == j ? w[static_cast<size_t>(i)] : 0.0));
    // self-adjoint
    CHECK(testutil::dense_from_adjoint(diag) == m);
}

TEST_CASE("composed maps multiply and their adjoints transpose") {
    std::mt19937 rng(14);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(7, 5);
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(5, 4);
    auto am = std::make_shared<testutil::DenseMap>(a);
    auto bm = std::make_shared<testutil::DenseMap>(b);
    auto ab = compose(am, bm);
    CHECK(testutil::dense_from_apply(*ab).isApprox(a * b, 1e-14));
    CHECK(testutil::dense_from_adjoint(*ab).isApprox(a * b, 1e-14));
    CHECK(testutil::adjoint_gap(*ab, rng) < 1e-12);
    CHECK_THROWS_AS(compose(bm, am), ConfigError);
}

TEST_CASE("stacked maps concatenate scaled blocks over a shared domain") {
    std::mt19937 rng(15);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 4);
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(3, 4);
    auto stack = stack_maps({{2.0, std::make_shared<testutil::DenseMap>(a)},
                             {0.5, std::make_shared<testutil::DenseMap>(b)}});
    Eigen::MatrixXd expected(9, 4);
    expected << 2.0 * a, 0.5 * b;
    CHECK(testutil::dense_from_apply(*stack).isApprox(expected, 1e-14));
    CHECK(testutil::dense_from_adjoint(*stack).isApprox(expected, 1e-14));
    CHECK(testutil::adjoint_gap(*stack, rng) < 1e-12);
    CHECK(stack->block_offset(1) == 6);

    auto mismatched = std::make_shared<testutil::DenseMap>(Eigen::MatrixXd::Random(3, 5));
    CHECK_THROWS_AS(
        stack_maps({{1.0, std::make_shared<testutil::DenseMap>(a)}, {1.0, mismatched}}),
        ConfigError);
    CHECK_THROWS_AS(stack_maps({}), ConfigError);
}

TEST_CASE("maps reject wrongly sized spans") {
    IdentityMap id(5);
    std::vector<double> small(4), out(5);
    CHECK_THROWS_AS(id.apply(small, out), ConfigError);
    CHECK_THROWS_AS(id.apply(small), ConfigError);
}

TEST_CASE("volume round trip through disk is byte-stable") {
    const fs::path dir = temp_dir();
    Volume v = Volume::centered({5, 4, 3}, {0.8, 1.0, 1.3});
    std::mt19937 rng(16);
    v.data = testutil::random_vector(v.data.size(), rng);

    write_volume(dir / "vol", v);
    const Volume back = read_volume(dir / "vol");
    CHECK(back.dims == v.dims);
    CHECK(back.spacing == v.spacing);
    CHECK(back.origin == v.origin);

    // float32 on disk: a second write of the loaded volume is identical bytes
    write_volume(dir / "vol2", back);
    CHECK(file_bytes(dir / "vol.raw") == file_bytes(dir / "vol2.raw"));
    // and accurate to float precision against the original
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(v.data[i])));
}

TEST_CASE("projection round trip preserves geometry") {
    const fs::path dir = temp_dir();
    ProjectionSet p(testutil::tiny_geometry(5));
    std::mt19937 rng(17);
    p.data = testutil::random_vector(p.data.size(), rng, 0.0, 3.0);
    write_projections(dir / "proj", p);
    const ProjectionSet back = read_projections(dir / "proj");
    CHECK(back.geometry.dso == p.geometry.dso);
    CHECK(back.geometry.dsd == p.geometry.dsd);
    CHECK(back.geometry.detector.nu == p.geometry.detector.nu);
    CHECK(back.geometry.detector.pv == p.geometry.detector.pv);
    CHECK(back.geometry.offset_u == p.geometry.offset_u);
    CHECK(back.geometry.angles == p.geometry.angles);
    for (std::size_t i = 0; i < p.data.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(p.data[i])));
}

TEST_CASE("io rejects mismatched and damaged files") {
    const fs::path dir = temp_dir();
    Volume v = Volume::centered({4, 4, 4});
    write_volume(dir / "vol", v);

    // a volume is not a projection stack
    CHECK_THROWS_AS(read_projections(dir / "vol"), ConfigError);

    // truncated payload
    fs::resize_file(dir / "vol.raw", 7);
    CHECK_THROWS_AS(read_volume(dir / "vol"), ConfigError);

    // garbage metadata
    std::ofstream(dir / "vol.meta.json") << "{not json";
    CHECK_THROWS_AS(read_volume(dir / "vol"), ConfigError);

    // missing entirely
    CHECK_THROWS_AS(read_volume(dir / "nope"), ConfigError);

    // non-finite content never reaches disk
    v.data[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(write_volume(dir / "bad", v), ConfigError);
}

TEST_CASE("pgm slices are deterministic and carry the P5 header") {
    const fs::path dir = temp_dir();
    Volume v = Volume::centered({6, 5, 4});
    std::mt19937 rng(18);
    v.data = testutil::random_vector(v.data.size(), rng, 0.0, 1.0);
    write_pgm_slice(dir / "a.pgm", v, 2, 0.0, 1.0);
    write_pgm_slice(dir / "b.pgm", v, 2, 0.0, 1.0);
    const std::string bytes = file_bytes(dir / "a.pgm");
    CHECK(bytes == file_bytes(dir / "b.pgm"));
    CHECK(bytes.rfind("P5\n6 5\n255\n", 0) == 0);
    CHECK(bytes.size() == std::string("P5\n6 5\n255\n").size() + 30);
    CHECK_THROWS_AS(write_pgm_slice(dir / "c.pgm", v, 9, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(write_pgm_slice(dir / "c.pgm", v, 0, 1.0, 1.0), ConfigError);
}

TEST_CASE("csv float formatting is locale-free and stable") {
    CHECK(format_csv(1.0) == "1");
    CHECK(format_csv(0.125) == "0.125");
    CHECK(format_csv(-3.25e-9) == "-3.25e-09");
    CHECK(format_csv(1.0 / 3.0) == "0.333333333");
}
