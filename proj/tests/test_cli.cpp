#include <cstring>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <polyscat/cli.hpp>

using namespace polyscat;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path freshDir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("polyscat_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json squareScene(double contrast = 0.3, int n = 64)
{
    return {{"label", "sq"}, {"dimension", 2}, {"polytopes", json::array({{{"kind", "rectangle"}, {"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}}})},
            {"contrast", {{"kind", "constant"}, {"value", contrast}}}, {"k", 2.0}, {"omega", {1, 0}},
            {"grid", {{"lo", {-1, -1}}, {"n", n}}}, {"R", 1.0}};
}

} // namespace

TEST(Scene, ParsesAndValidates)
{
    const auto s = io::sceneFromJson(squareScene());
    EXPECT_EQ(s.polytopes.size(), 1u);
    EXPECT_NEAR(s.grid.h, 2.0 / 64, 1e-15);
    auto bad = squareScene();
    bad["schema"] = 2;
    EXPECT_THROW(io::sceneFromJson(bad), io::IoError);
    bad = squareScene();
    bad["grid"]["lo"] = {-0.4, -0.4};
    EXPECT_THROW(io::sceneFromJson(bad), io::IoError);
    bad = squareScene();
    bad["R"] = 0.5;
    EXPECT_THROW(io::sceneFromJson(bad), io::IoError);
    bad = squareScene();
    bad["contrast"]["kind"] = "spline";
    EXPECT_THROW(io::sceneFromJson(bad), io::IoError);
    bad = squareScene();
    bad["k"] = -1.0;
    EXPECT_THROW(io::sceneFromJson(bad), io::IoError);
}

TEST(Scene, PolytopeRoundTrip)
{
    const auto P = geom::Polytope::polygon({{-0.5, -0.4, 0}, {0.55, -0.3, 0}, {0.0, 0.6, 0}});
    const auto Q = io::polytopeFromJson(io::polytopeToJson(P), 2);
    EXPECT_EQ(geom::hausdorffDistance(P, Q), 0.0);
}

TEST(Calibration, JsonRoundTripAndRangeChecks)
{
    rellich::Calibration c;
    c.k = 2.0;
    c.c1 = 0.5;
    c.c2 = 0.125;
    c.C = 1.3;
    c.seed = 9;
    c.trials = 10;
    const auto d = io::calibrationFromJson(io::calibrationToJson(c));
    EXPECT_EQ(d.c1, c.c1);
    EXPECT_EQ(d.C, c.C);
    auto j = io::calibrationToJson(c);
    j["c1"] = 1.5;
    EXPECT_THROW(io::calibrationFromJson(j), io::IoError);
    j = io::calibrationToJson(c);
    j.erase("C");
    EXPECT_THROW(io::calibrationFromJson(j), io::IoError);
}

TEST(Manifest, HashIgnoresOutputPathThreadsAndForce)
{
    cli::RunManifest a;
    a.command = "solve";
    a.scenes = {squareScene()};
    a.seed = 1;
    cli::RunManifest b = a;
    b.outDir = "/elsewhere";
    b.threads = 8;
    b.force = true;
    EXPECT_EQ(a.hash(), b.hash());
    b.seed = 2;
    EXPECT_NE(a.hash(), b.hash());
    b = a;
    b.tolerances["gmres"] = 1e-6;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Manifest, LoadsManifestWithRelativeScenes)
{
    const auto dir = freshDir("manifest");
    fs::create_directories(dir);
    std::ofstream(dir / "s.json") << squareScene().dump();
    std::ofstream(dir / "m.json") << json{{"seed", 5}, {"scenes", {"s.json", squareScene(0.1)}}, {"tolerances", {{"gmres", 1e-9}}}}.dump();
    cli::RunManifest m;
    cli::loadSceneFile(m, dir / "m.json");
    EXPECT_EQ(m.scenes.size(), 2u);
    EXPECT_EQ(*m.seed, 5u);
    EXPECT_EQ(m.gmresTol(), 1e-9);
    EXPECT_THROW(cli::loadSceneFile(m, dir / "missing.json"), io::IoError);
    fs::remove_all(dir);
}

TEST(Output, RefusesOverwriteWithoutForce)
{
    const auto dir = freshDir("output");
    io::OutputSet a(dir, "abc", false);
    a.addText("x.txt", "hello\n");
    a.commit();
    EXPECT_NE(slurp(dir / "x.txt").find("manifest_hash abc"), std::string::npos);
    io::OutputSet b(dir, "abc", false);
    b.addText("x.txt", "again\n");
    EXPECT_THROW(b.commit(), io::IoError);
    io::OutputSet c(dir, "abc", true);
    c.addText("x.txt", "again\n");
    EXPECT_NO_THROW(c.commit());
    fs::remove_all(dir);
}

TEST(Commands, SeedIsMandatory)
{
    cli::RunManifest m;
    m.command = "solve";
    m.scenes = {squareScene()};
    m.outDir = freshDir("noseed");
    EXPECT_THROW(cli::run(m), io::IoError);
    m.command = "frobnicate";
    m.seed = 1;
    EXPECT_THROW(cli::run(m), io::IoError);
}

TEST(Commands, SolveZeroSceneGivesZeroFarField)
{
    cli::RunManifest m;
    m.command = "solve";
    m.seed = 1;
    m.scenes = {{{"label", "empty"}, {"contrast", {{"kind", "zero"}}}, {"grid", {{"lo", {-1, -1}}, {"n", 32}}}}};
    m.outDir = freshDir("zero");
    const auto r = cli::cmdSolve(m);
    EXPECT_EQ(r.exitCode, cli::Ok);
    std::ifstream in(m.outDir / "empty_farfield.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# manifest_hash " + m.hash());
    std::getline(in, line);
    EXPECT_EQ(line, "theta,re,im");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_NE(line.find(",0.0,0.0"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 64);
    fs::remove_all(m.outDir);
}

TEST(Commands, SolveIsDeterministicAcrossThreadCounts)
{
    cli::RunManifest m;
    m.command = "solve";
    m.seed = 3;
    m.scenes = {squareScene(0.3), squareScene(0.1)};
    m.scenes[1]["label"] = "sq2";
    m.outDir = freshDir("det1");
    cli::cmdSolve(m);
    auto m2 = m;
    m2.threads = 2;
    m2.outDir = freshDir("det2");
    cli::cmdSolve(m2);
    for (const auto& f : {"sq_farfield.csv", "sq2_farfield.csv", "solve.json", "sq_solve.json"})
        EXPECT_EQ(slurp(m.outDir / f), slurp(m2.outDir / f)) << f;
    fs::remove_all(m.outDir);
    fs::remove_all(m2.outDir);
}

TEST(Commands, ParallelForPropagatesFailures)
{
    std::vector<int> hit(20, 0);
    cli::parallelFor(hit.size(), 3, [&](std::size_t i) { hit[i] = 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 20);
    EXPECT_THROW(cli::parallelFor(5, 2, [](std::size_t i) { if (i == 3) throw NumericalError("boom"); }), NumericalError);
}

TEST(Commands, ErrorJsonShape)
{
    const auto j = cli::errorJson("domain", "bad cone");
    EXPECT_EQ(j["error"]["type"], "domain");
    EXPECT_EQ(j["error"]["message"], "bad cone");
}

TEST(Suites, GeometryConesAndSpecialFunctionsPass)
{
    EXPECT_TRUE(cli::geometrySuite(1, 200, 30).passed);
    EXPECT_TRUE(cli::coneTransformSuite(2, 50).passed);
    EXPECT_TRUE(cli::specialFunctionSuite().passed);
}

TEST(Export, FieldBinaryIsLittleEndianComplex64)
{
    const auto g = fields::Grid::cells(2, {-1, -1, 0}, 0.5, 4);
    fields::WaveField u(g, 2.0, fields::Role::Total);
    u.values[1] = cplx(1.0, -2.0);
    const auto bytes = io::fieldBinary(u);
    ASSERT_EQ(bytes.size(), g.size() * 8);
    float re, im;
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(bytes[8 + i]);
    const std::uint32_t bitsRe = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(bytes[12 + i]);
    const std::uint32_t bitsIm = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
    std::memcpy(&re, &bitsRe, 4);
    std::memcpy(&im, &bitsIm, 4);
    EXPECT_EQ(re, 1.0f);
    EXPECT_EQ(im, -2.0f);
    const auto side = io::fieldSidecar(u, "u.bin");
    EXPECT_EQ(side["extent"][0], 4);
    EXPECT_EQ(side["format"], "complex64-le");
}

TEST(Export, SliceAndTauSweepCsv)
{
    const auto g = fields::Grid::cells(2, {-1, -1, 0}, 0.5, 4);
    fields::WaveField u(g, 2.0, fields::Role::Total);
    const auto [h, rows] = io::fieldSliceCsv(u, 0.0);
    EXPECT_EQ(h, "x,re,im");
    EXPECT_EQ(rows.size(), 4u);

    const auto ladder = cli::cgoLadder(2, 64, 3, 2.0, 0.3);
    const auto [th, trows] = io::tauSweepCsv(ladder);
    EXPECT_EQ(th, "tau,im_rho,norm_p,slope_so_far");
    ASSERT_EQ(trows.size(), 3u);
    EXPECT_EQ(trows[0].back(), ',');
}

TEST(Commands, SolveExportsFieldsOnRequest)
{
    cli::RunManifest m;
    m.command = "solve";
    m.seed = 1;
    m.scenes = {squareScene(0.3, 32)};
    m.experiment = {{"exportFields", true}};
    m.outDir = freshDir("fields");
    cli::cmdSolve(m);
    EXPECT_EQ(fs::file_size(m.outDir / "sq_total.bin"), 32u * 32u * 8u);
    EXPECT_TRUE(fs::exists(m.outDir / "sq_total.json"));
    EXPECT_TRUE(fs::exists(m.outDir / "sq_total_slice.csv"));
    fs::remove_all(m.outDir);
}
