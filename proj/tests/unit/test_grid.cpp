#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "ttp/fd_check.hpp"
#include "ttp/grid.hpp"
#include "ttp/providers.hpp"

using namespace ttp;

namespace {

GridGeometry cube(int n, double lo, double hi)
{
    GridGeometry g;
    g.dims = {n, n, n};
    g.origin = Vec3::Constant(lo);
    g.spacing = Vec3::Constant((hi - lo) / (n - 1));
    return g;
}

// Samples an arbitrary function of position onto grid records.
template <class F>
std::vector<GridRecord> fill(const GridGeometry& g, F f)
{
    std::vector<GridRecord> out;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) out.push_back(f(g.node(i, j, k)));
    return out;
}

std::shared_ptr<GridField> sampled(const FieldProvider& p, const GridGeometry& g, Interpolation interp)
{
    std::stringstream ss;
    write_grid(ss, p, g);
    return read_grid(ss, interp);
}

const std::string small_header = "TTPGRID 1\ndims 2 2 2\norigin 0 0 0\nspacing 1 1 1\nfields V p1hat\n";

} // namespace

class GridInterpolation : public ::testing::TestWithParam<Interpolation> {};

TEST_P(GridInterpolation, ReproducesConstantsExactly)
{
    const auto uni = builtin_registry().make("uniform", {{"vx", 0.3}, {"vy", -1.25}, {"vz", 2.0}, {"p1hat", 0.75}});
    const auto grid = sampled(*uni, cube(5, -1, 1), GetParam());
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const Vec3 r = test::random_in(Box{Vec3::Constant(-1), Vec3::Constant(1)}, rng);
        const FluidSample s = grid->sample(r, 0);
        EXPECT_NEAR((s.V - Vec3(0.3, -1.25, 2.0)).norm(), 0.0, 1e-14);
        EXPECT_NEAR(s.p1hat, 0.75, 1e-14);
        EXPECT_LT(s.gradV.norm(), 1e-13);
        EXPECT_LT(s.grad_p1hat.norm(), 1e-13);
    }
}

TEST_P(GridInterpolation, ReproducesLinearVelocityGradient)
{
    const GridGeometry g = cube(6, -1, 2);
    const auto grid = std::make_shared<GridField>(
        g, fill(g, [](const Vec3& r) { return GridRecord{Vec3(r.x(), 0, 0), 1.0}; }), GetParam());
    std::mt19937_64 rng(2);
    Mat3 want = Mat3::Zero();
    want(0, 0) = 1.0;
    for (int i = 0; i < 50; ++i) {
        const Vec3 r = test::random_in(Box{Vec3::Constant(-0.5), Vec3::Constant(1.5)}, rng);
        const FluidSample s = grid->sample(r, 0);
        EXPECT_LT((s.gradV - want).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(s.V.x(), r.x(), 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(Both, GridInterpolation,
                         ::testing::Values(Interpolation::tricubic, Interpolation::trilinear));

TEST(GridField, RigidRotationVorticityAtUnitRadius)
{
    const auto rot = builtin_registry().make("rigid_rotation");
    const auto grid = sampled(*rot, cube(65, -2, 2), Interpolation::tricubic);
    const FluidSample s = grid->sample(Vec3(1, 0, 0), 0);
    EXPECT_LT((s.xi - Vec3(0, 0, 2)).norm(), 1e-6);
    // Pressure is quadratic, which the tricubic interpolant reproduces.
    EXPECT_LT((s.hess_p1hat - rot->sample(Vec3(1, 0, 0), 0).hess_p1hat).norm(), 1e-9);
}

TEST(GridField, TricubicMatchesQuadraticPressureOffNodes)
{
    const auto rot = builtin_registry().make("rigid_rotation");
    const auto grid = sampled(*rot, cube(9, -2, 2), Interpolation::tricubic);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        // Includes boundary cells, where the stencil uses extrapolated ghosts.
        const Vec3 r = test::random_in(Box{Vec3::Constant(-2), Vec3::Constant(2)}, rng);
        const FluidSample a = grid->sample(r, 0), b = rot->sample(r, 0);
        EXPECT_NEAR(a.p1hat, b.p1hat, 1e-12);
        EXPECT_LT((a.grad_p1hat - b.grad_p1hat).norm(), 1e-11);
        EXPECT_LT((a.hess_p1hat - b.hess_p1hat).norm(), 1e-10);
    }
}

TEST(GridField, TaylorGreenInterpolationConverges)
{
    const auto tg = builtin_registry().make("taylor_green_steady");
    const Vec3 r(1.13, 2.27, 0.41);
    const FluidSample exact = tg->sample(r, 0);
    double prev = 0.0;
    for (int n : {17, 33, 65}) {
        GridGeometry g = cube(n, 0, 3.2);
        const auto grid = sampled(*tg, g, Interpolation::tricubic);
        const double err = (grid->sample(r, 0).V - exact.V).norm();
        if (prev > 0.0) EXPECT_LT(err, prev / 6.0);  // third order
        prev = err;
    }
}

TEST(GridField, TrilinearHessianHasNoDiagonalAndIsFlagged)
{
    const auto rot = builtin_registry().make("rigid_rotation");
    const auto grid = sampled(*rot, cube(9, -2, 2), Interpolation::trilinear);
    const FluidSample s = grid->sample(Vec3(0.3, 0.4, 0.1), 0);
    EXPECT_EQ(s.hess_p1hat.diagonal(), Vec3::Zero());
    EXPECT_TRUE(grid->descriptor().hessian_discontinuous);
    EXPECT_FALSE(grid->descriptor().time_dependent);
    EXPECT_EQ(s.dt_grad_p1hat, Vec3::Zero());
}

TEST(GridField, OutOfDomainNamesTheBounds)
{
    const auto rot = builtin_registry().make("rigid_rotation");
    const auto grid = sampled(*rot, cube(5, -2, 2), Interpolation::tricubic);
    try {
        grid->sample(Vec3(2.5, 0, 0), 0);
        FAIL() << "expected OutOfDomain";
    } catch (const OutOfDomain& e) {
        EXPECT_NE(std::string(e.what()).find("[-2, 2]"), std::string::npos) << e.what();
    }
    EXPECT_THROW(fd_verify_derivatives(*grid, Vec3(1.9999, 0, 0), 0, 1e-3), OutOfDomain);
}

TEST(GridField, NegativeInterpolatedPressureRejected)
{
    GridGeometry g = cube(3, 0, 2);
    auto recs = fill(g, [](const Vec3&) { return GridRecord{Vec3::Zero(), 1.0}; });
    recs[13].p1hat = -0.5;  // centre node
    const GridField grid(g, recs, Interpolation::trilinear);
    EXPECT_THROW(grid.sample(Vec3(1, 1, 1), 0), NegativePressure);
    EXPECT_NO_THROW(grid.sample(Vec3(0, 0, 0), 0));
}

TEST(GridField, FromNodesRequiresUniformSpacing)
{
    std::vector<GridRecord> recs(2 * 2 * 3);
    EXPECT_NO_THROW(GridField::from_nodes({{{0, 1}, {0, 2}, {0, 0.5, 1}}}, recs, Interpolation::trilinear));
    EXPECT_THROW(GridField::from_nodes({{{0, 1}, {0, 2}, {0, 0.4, 1}}}, recs, Interpolation::trilinear),
                 NonUniformSpacing);
}

TEST(GridField, TooFewNodesForStencil)
{
    GridGeometry g = cube(2, 0, 1);
    EXPECT_THROW(GridField(g, std::vector<GridRecord>(8), Interpolation::tricubic), ValidationError);
    EXPECT_NO_THROW(GridField(g, std::vector<GridRecord>(8, GridRecord{Vec3::Zero(), 1.0}), Interpolation::trilinear));
}

TEST(GridFile, WriteThenLoadRoundTripsExactly)
{
    test::TempDir dir;
    const auto tg = builtin_registry().make("taylor_green");
    GridGeometry g;
    g.dims = {4, 3, 5};
    g.origin = Vec3(0.1, -0.2, 0.3);
    g.spacing = Vec3(0.25, 0.5, 0.125);
    {
        std::ofstream f(dir.file("tg.grid"));
        write_grid(f, *tg, g, 0.5);
    }
    const auto grid = load_grid(dir.file("tg.grid"));
    EXPECT_EQ(grid->geometry().dims, g.dims);
    EXPECT_EQ(grid->geometry().origin, g.origin);
    EXPECT_EQ(grid->geometry().spacing, g.spacing);
    ASSERT_EQ(grid->records().size(), g.node_count());
    const FluidSample s = tg->sample(g.node(2, 1, 3), 0.5);
    const GridRecord& rec = grid->records()[(3 * 3 + 1) * 4 + 2];
    EXPECT_EQ(rec.V, s.V);
    EXPECT_EQ(rec.p1hat, s.p1hat);
}

TEST(GridFile, HeaderIsBitExact)
{
    const auto uni = builtin_registry().make("uniform");
    std::stringstream ss;
    GridGeometry g;
    g.dims = {2, 2, 2};
    g.origin = Vec3(0, 0, 0);
    g.spacing = Vec3(1, 1, 1);
    write_grid(ss, *uni, g);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 13u);
    EXPECT_EQ(lines[0], "TTPGRID 1");
    EXPECT_EQ(lines[1], "dims 2 2 2");
    EXPECT_EQ(lines[2], "origin 0 0 0");
    EXPECT_EQ(lines[3], "spacing 1 1 1");
    EXPECT_EQ(lines[4], "fields V p1hat");
    EXPECT_EQ(lines[5], "1 0 0 1");
}

TEST(GridFile, ParseErrors)
{
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_grid(in, Interpolation::trilinear);
    };
    std::string records;
    for (int i = 0; i < 8; ++i) records += "0 0 0 1\n";
    EXPECT_NO_THROW(parse(small_header + records));
    EXPECT_THROW(parse("TTPGRID 2\ndims 2 2 2\norigin 0 0 0\nspacing 1 1 1\nfields V p1hat\n" + records), ParseError);
    EXPECT_THROW(parse("TTPGRID 1\ndims 2 2\norigin 0 0 0\nspacing 1 1 1\nfields V p1hat\n" + records), ParseError);
    EXPECT_THROW(parse("TTPGRID 1\ndims 2 2 0\norigin 0 0 0\nspacing 1 1 1\nfields V p1hat\n" + records), ParseError);
    EXPECT_THROW(parse("TTPGRID 1\ndims 2 2 2\norigin 0 x 0\nspacing 1 1 1\nfields V p1hat\n" + records), ParseError);
    EXPECT_THROW(parse("TTPGRID 1\ndims 2 2 2\norigin 0 0 0\nspacing 1 -1 1\nfields V p1hat\n" + records), ParseError);
    EXPECT_THROW(parse("TTPGRID 1\ndims 2 2 2\norigin 0 0 0\nspacing 1 1 1\nfields V p\n" + records), ParseError);
    EXPECT_THROW(parse(small_header + records.substr(8)), ParseError);         // one record short
    EXPECT_THROW(parse(small_header + records + "0 0 0 1\n"), ParseError);      // one record extra
    EXPECT_THROW(parse(small_header + records + "0 0\n"), ParseError);          // truncated record
    EXPECT_THROW(parse(small_header + "0 0 zero 1\n" + records), ParseError);  // bad token
    EXPECT_THROW(parse("TTPGRID 1\n"), ParseError);
    EXPECT_THROW(load_grid("/nonexistent/path.grid"), ParseError);
}
