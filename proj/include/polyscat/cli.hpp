#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cgo.hpp"
#include "geom.hpp"
#include "io.hpp"
#include "rellich.hpp"
#include "solver.hpp"
#include "specfun.hpp"
#include "stability.hpp"

namespace polyscat::cli {

using io::json;
namespace fs = std::filesystem;

inline constexpr const char* kOutRootEnv = "POLYSCAT_OUT_ROOT";

enum ExitCode : int { Ok = 0, SuiteFailed = 1, UsageError = 2, InputError = 3, NumericFailure = 4 };

struct RunManifest {
    std::string command;
    std::vector<json> scenes;
    std::optional<fs::path> calibrationPath;
    json calibration;            // file contents, part of the hash
    fs::path outDir;
    std::optional<unsigned long long> seed;
    json tolerances = json::object();
    json experiment = json::object();
    int threads = 1;
    bool force = false;

    double gmresTol() const { return tolerances.value("gmres", 1e-8); }

    // Everything that determines the outputs; the output path, thread count
    // and --force are deliberately left out.
    json canonical() const
    {
        return {{"command", command}, {"scenes", scenes}, {"seed", seed ? json(*seed) : json(nullptr)},
                {"calibration", calibration}, {"tolerances", tolerances}, {"experiment", experiment}};
    }
    std::string hash() const { return io::hexHash(io::fnv1a(canonical().dump())); }
};

inline fs::path defaultOutRoot()
{
    const char* env = std::getenv(kOutRootEnv);
    return env && *env ? fs::path(env) : fs::path("polyscat-out");
}

inline json errorJson(const std::string& type, const std::string& message)
{
    return {{"error", {{"type", type}, {"message", message}}}};
}

// A file holding {"scenes": [...]} (plus optional seed, tolerances, experiment,
// calibration) is a manifest; anything else is a single scene.
inline void loadSceneFile(RunManifest& m, const fs::path& p)
{
    const json j = io::readJsonFile(p);
    if (j.is_object() && j.contains("scenes")) {
        for (const auto& s : j.at("scenes")) m.scenes.push_back(s.is_string() ? io::readJsonFile(p.parent_path() / s.get<std::string>()) : s);
        if (!m.seed && j.contains("seed")) m.seed = j.at("seed").get<unsigned long long>();
        if (j.contains("tolerances")) m.tolerances.update(j.at("tolerances"));
        if (j.contains("experiment")) m.experiment = j.at("experiment");
        if (!m.calibrationPath && j.contains("calibration")) m.calibrationPath = p.parent_path() / j.at("calibration").get<std::string>();
    } else {
        m.scenes.push_back(j);
    }
}

inline void loadCalibration(RunManifest& m)
{
    if (m.calibrationPath) m.calibration = io::readJsonFile(*m.calibrationPath);
}

// Runs f(i) for i < count on up to `threads` workers; results stay indexed.
inline void parallelFor(std::size_t count, int threads, const std::function<void(std::size_t)>& f)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, threads > 0 ? threads : 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failureLock;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(failureLock);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct Outcome {
    int exitCode = Ok;
    std::vector<fs::path> files;
    json summary = json::object();
};

inline void requireSeed(const RunManifest& m)
{
    if (!m.seed) throw io::IoError("a seed is required (--seed or \"seed\" in the manifest)");
}

inline std::string safeLabel(std::string s)
{
    for (auto& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return s;
}

// ---------------------------------------------------------------------------
// solve

inline Outcome cmdSolve(const RunManifest& m)
{
    requireSeed(m);
    if (m.scenes.empty()) throw io::IoError("solve needs at least one scene");
    std::vector<io::Scene> scenes;
    for (const auto& s : m.scenes) scenes.push_back(io::sceneFromJson(s));
    std::vector<std::optional<solver::ScatteringSolution>> sols(scenes.size());
    std::vector<std::string> errors(scenes.size());
    solver::SolverOptions opt;
    opt.tol = m.gmresTol();
    parallelFor(scenes.size(), m.threads, [&](std::size_t i) {
        try {
            sols[i] = solver::solveForward(scenes[i].makeContrast(), scenes[i].k, scenes[i].omega, scenes[i].makeGrid(), opt);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    io::OutputSet out(m.outDir, m.hash(), m.force);
    Outcome res;
    json list = json::array();
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string base = safeLabel(scenes[i].label);
        json r = {{"label", scenes[i].label}, {"k", scenes[i].k}, {"dimension", scenes[i].dimension}};
        if (!sols[i]) {
            r["error"] = errors[i];
            res.exitCode = NumericFailure;
        } else {
            const auto& s = *sols[i];
            const auto [header, rows] = io::farFieldCsv(s.farField);
            out.addCsv(base + "_farfield.csv", header, rows);
            r["iterations"] = s.iterations;
            r["residual"] = s.residual;
            r["far_field_l2"] = s.farField.l2Norm();
            r["inf_abs_total"] = s.infAbsTotal;
            r["grid"] = {{"n", s.grid().extent[0]}, {"h", s.grid().h}};
            if (m.experiment.value("exportFields", false)) {
                out.addBinary(base + "_total.bin", io::fieldBinary(s.total));
                out.addJson(base + "_total.json", io::fieldSidecar(s.total, base + "_total.bin"));
                const auto [sh, srows] = io::fieldSliceCsv(s.total, 0.0);
                out.addCsv(base + "_total_slice.csv", sh, srows);
            }
        }
        out.addJson(base + "_solve.json", r);
        list.push_back(r);
    }
    out.addJson("solve.json", {{"command", "solve"}, {"scenes", list}});
    res.files = out.commit();
    res.summary = list;
    return res;
}

// ---------------------------------------------------------------------------
// calibrate

inline rellich::Calibration calibrationFor(const RunManifest& m, double k, int dim)
{
    if (!m.calibration.is_null()) {
        auto c = io::calibrationFromJson(m.calibration);
        if (std::abs(c.k - k) > 1e-12 || c.dim != dim) throw io::IoError("calibration file is for a different wavenumber or dimension");
        return c;
    }
    requireSeed(m);
    return rellich::calibrate(k, dim, *m.seed, m.experiment.value("trials", 400));
}

inline Outcome cmdCalibrate(const RunManifest& m)
{
    requireSeed(m);
    double k = m.experiment.value("k", 2.0), R = 1.0;
    int dim = m.experiment.value("dimension", 2);
    if (!m.scenes.empty()) {
        const auto s = io::sceneFromJson(m.scenes.front());
        k = s.k;
        R = s.R;
        dim = s.dimension;
    }
    const int trials = m.experiment.value("trials", 400);
    const auto cal = rellich::calibrate(k, dim, *m.seed, trials);
    const double B0 = m.experiment.value("B0", 1.25);
    const double nuMax = std::max(0.5, std::ceil(2 * rellich::kE * B0 * k * R) / 2.0 + 10.0);
    const auto cert = specfun::certifyHankelBounds(k * R, 2 * B0 * k * R, nuMax);
    io::OutputSet out(m.outDir, m.hash(), m.force);
    out.addJson("calibration.json", io::calibrationToJson(cal));
    out.addJson("hankel_certificates.json", {{"certificates", json::array({io::certificateToJson(cert)})}});
    Outcome res;
    res.exitCode = cert.violated ? NumericFailure : Ok;
    res.files = out.commit();
    res.summary = io::calibrationToJson(cal);
    return res;
}

// ---------------------------------------------------------------------------
// verify suites

struct SuiteResult {
    std::string name;
    bool passed = false;
    json detail = json::object();
};

inline SuiteResult geometrySuite(unsigned long long seed, int pairs2D = 1000, int pairs3D = 100)
{
    SuiteResult r{"geometry"};
    std::mt19937_64 rng(seed);
    int bad2 = 0, bad3 = 0, parallel = 0;
    for (int i = 0; i < pairs2D; ++i) {
        const auto P = geom::randomConvexPolygon(rng, 1.0), Q = geom::randomConvexPolygon(rng, 1.0);
        const auto q = geom::checkQangle(P, Q);
        if (!q.ok) ++bad2;
        if (q.parallelCase) ++parallel;
    }
    for (int i = 0; i < pairs3D; ++i) {
        const auto P = geom::randomCuboid(rng, 1.0), Q = geom::randomCuboid(rng, 1.0);
        if (!geom::checkQangle(P, Q).ok) ++bad3;
    }
    r.detail = {{"pairs2D", pairs2D}, {"violations2D", bad2}, {"parallelCases", parallel}, {"pairs3D", pairs3D}, {"violations3D", bad3}};
    r.passed = bad2 == 0 && bad3 == 0;
    return r;
}

// Random admissible (cone, zeta) pairs: Re zeta points against the cone axis.
template <class Rng>
std::pair<geom::PolyCone, CVec> randomConeCase(Rng& rng, int dim)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    if (dim == 2) {
        const double t0 = 2 * pi * u(rng), open = 0.3 + (pi - 0.6) * u(rng);
        auto K = geom::PolyCone::polyhedral({0, 0, 0}, {{std::cos(t0), std::sin(t0), 0}, {std::cos(t0 + open), std::sin(t0 + open), 0}}, 2);
        const Vec re = -(0.5 + u(rng)) * K.axis;
        const Vec im{0.7 * g(rng), 0.7 * g(rng), 0.0};
        return {K, toComplex(re, im)};
    }
    const Vec a = normalized({g(rng), g(rng), g(rng)});
    const auto [b, c] = geom::detail::orthoFrame(a);
    std::vector<Vec> gens;
    for (int j = 0; j < 3; ++j) {
        const double phi = 2 * pi * j / 3 + 0.3 * (u(rng) - 0.5), s = 0.3 + 1.2 * u(rng);
        gens.push_back(normalized(a + s * (std::cos(phi) * b + std::sin(phi) * c)));
    }
    auto K = geom::PolyCone::polyhedral({0, 0, 0}, gens, 3);
    const Vec re = -(0.5 + u(rng)) * a;
    const Vec im{0.5 * g(rng), 0.5 * g(rng), 0.5 * g(rng)};
    return {K, toComplex(re, im)};
}

inline SuiteResult coneTransformSuite(unsigned long long seed, int cases = 200)
{
    SuiteResult r{"cone-transforms"};
    std::mt19937_64 rng(seed);
    json perDim = json::object();
    bool ok = true;
    for (int dim : {2, 3}) {
        double worst = 0.0;
        for (int i = 0; i < cases; ++i) {
            const auto [K, z] = randomConeCase(rng, dim);
            const cplx closed = cgo::coneLaplace(K, z).value;
            const cplx quad = cgo::coneLaplaceQuadrature(K, z, 96);
            worst = std::max(worst, std::abs(closed - quad) / std::abs(closed));
        }
        perDim[std::to_string(dim) + "D"] = {{"cases", cases}, {"maxRelativeError", worst}};
        ok = ok && worst <= 1e-6;
    }
    r.detail = perDim;
    r.passed = ok;
    return r;
}

struct OrthogonalityCase {
    double k = 2.0;
    double contrast = 0.3;
    double offset = 0.1;
    double tau = 20.0;
    double h = 0.1;
    Vec omega{1, 0, 0};
    int n = 512;   // cells across [-1, 1]^2
};

struct OrthogonalityRun {
    stability::OrthogonalityReport coarse, fine;
    double reduction = 0.0;
};

inline stability::OrthogonalityReport orthogonalityAt(const OrthogonalityCase& c, int n)
{
    const auto P = geom::Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    const auto Pp = stability::shrunkSquare(c.offset);
    const auto V = fields::ContrastField::constant(P, c.contrast), Vp = fields::ContrastField::constant(Pp, c.contrast);
    const auto grid = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / n, n);
    const auto A = solver::solveForward(V, c.k, c.omega, grid, 1e-10);
    const auto B = solver::solveForward(Vp, c.k, c.omega, grid, 1e-10);
    const Vec xc{0.5, 0.5, 0};
    const auto Q = geom::PolyCone::spherical(xc, {-1, -1, 0}, 3 * pi / 8, 2);
    const auto u0 = cgo::buildCgo(V, c.k, cgo::buildDirection(Q, c.k, c.tau), grid);
    return stability::checkOrthogonality(V, A, B.total, u0, Q, c.h);
}

inline OrthogonalityRun orthogonalityRefinement(const OrthogonalityCase& c)
{
    OrthogonalityRun r;
    r.coarse = orthogonalityAt(c, c.n);
    r.fine = orthogonalityAt(c, 2 * c.n);
    r.reduction = r.fine.relativeMismatch > 0 ? r.coarse.relativeMismatch / r.fine.relativeMismatch : std::numeric_limits<double>::infinity();
    return r;
}

// Seeded variations of the square configuration.
inline std::vector<OrthogonalityCase> orthogonalityConfigurations(unsigned long long seed, int count)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<OrthogonalityCase> out{OrthogonalityCase{}};
    while (static_cast<int>(out.size()) < count) {
        OrthogonalityCase c;
        c.contrast = 0.1 + 0.3 * u(rng);
        c.offset = 0.08 + 0.1 * u(rng);
        c.tau = 10.0 + 20.0 * u(rng);
        const double t = pi * (u(rng) - 0.5);
        c.omega = {std::cos(t), std::sin(t), 0.0};
        out.push_back(c);
    }
    return out;
}

inline SuiteResult orthogonalitySuite(unsigned long long seed, int configurations = 1, int n = 512)
{
    SuiteResult r{"orthogonality"};
    r.passed = true;
    json runs = json::array();
    for (auto c : orthogonalityConfigurations(seed, configurations)) {
        c.n = n;
        const auto run = orthogonalityRefinement(c);
        const bool ok = run.coarse.relativeMismatch <= 0.02 && run.reduction >= 1.8;
        r.passed = r.passed && ok;
        runs.push_back({{"contrast", c.contrast}, {"offset", c.offset}, {"tau", c.tau}, {"relativeMismatch", run.coarse.relativeMismatch},
                        {"refinedMismatch", run.fine.relativeMismatch}, {"reduction", run.reduction}, {"ok", ok}});
    }
    r.detail = {{"runs", runs}};
    return r;
}

struct ThreeBallsStats {
    int trials = 0;
    int outsideInterval = 0;
    int inequalityViolations = 0;
    int chainViolations = 0;
    double betaMin = 1.0, betaMax = 0.0;
};

// Fresh trials against a calibration, plus chains of balls on normalized fields.
inline ThreeBallsStats threeBallsTrials(const rellich::Calibration& cal, unsigned long long seed, int trials = 100, int chains = 20)
{
    ThreeBallsStats s;
    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        const auto r = rellich::randomThreeBallsTrial(cal, rng);
        ++s.trials;
        if (!r.betaDefined || r.betaFit < cal.betaLow() || r.betaFit > cal.betaHigh()) ++s.outsideInterval;
        if (r.betaDefined) {
            s.betaMin = std::min(s.betaMin, r.betaFit);
            s.betaMax = std::max(s.betaMax, r.betaFit);
        }
        if (r.lhs() > r.rhs(cal.c2, cal.C)) ++s.inequalityViolations;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < chains; ++c) {
        const auto waves = rellich::PlaneWaveSum::random(cal.dim, cal.k, 20, rng);
        const Vec a{u(rng) - 0.5, u(rng) - 0.5, cal.dim == 3 ? u(rng) - 0.5 : 0.0};
        const rellich::AnchoredField field(waves, a);
        const double r = cal.Rm / 8;
        const Vec dir = normalized(Vec{u(rng) - 0.5, u(rng) - 0.5, cal.dim == 3 ? u(rng) - 0.5 : 0.0});
        const auto path = rellich::straightChain(a, a + (4 * r) * dir, r);
        // Normalize so that sup |w| <= 1 on every outer ball of the chain: T = 1.
        double sup = 0.0;
        for (const auto& x : path.centers) sup = std::max(sup, rellich::supOnBall(std::cref(field), cal.dim, x, 4 * r));
        const rellich::FieldFn w = [&field, sup](const Vec& x) { return field(x) / sup; };
        const auto res = rellich::propagateChain(w, cal.dim, path, 1.0, cal);
        if (!res.sound) ++s.chainViolations;
    }
    return s;
}

inline SuiteResult threeSpheresSuite(const rellich::Calibration& cal, unsigned long long seed)
{
    SuiteResult r{"three-spheres"};
    const auto s = threeBallsTrials(cal, seed);
    r.detail = {{"calibration", io::calibrationToJson(cal)}, {"trials", s.trials}, {"betaMin", s.betaMin}, {"betaMax", s.betaMax},
                {"intervalLow", cal.betaLow()}, {"intervalHigh", cal.betaHigh()}, {"outsideInterval", s.outsideInterval},
                {"inequalityViolations", s.inequalityViolations}, {"chainViolations", s.chainViolations}};
    r.passed = s.outsideInterval == 0 && s.inequalityViolations == 0 && s.chainViolations == 0;
    return r;
}

inline SuiteResult specialFunctionSuite()
{
    SuiteResult r{"special-functions"};
    double wr = 0.0;
    for (double nu : {0.0, 0.5, 1.0, 2.5, 7.0, 15.5})
        for (double z : {0.3, 1.0, 4.0, 12.0, 30.0}) {
            const auto b = specfun::besselJY(nu, z);
            wr = std::max(wr, std::abs((b.J * b.dY - b.dJ * b.Y) * pi * z / 2.0 - 1.0));
        }
    double ratio = 0.0;
    for (auto [z1, z2, nm] : {std::tuple{1.0, 10.0, 50.0}, std::tuple{0.5, 4.0, 20.0}, std::tuple{2.0, 5.0, 10.0}}) {
        const auto a = specfun::certifyHankelBounds(z1, z2, nm, 65), b = specfun::certifyHankelBounds(z1, z2, nm, 129);
        ratio = std::max(ratio, std::abs(b.C / a.C - 1.0));
    }
    double gam = 0.0;
    // Both branches must agree where either could be used: series for the lower
    // part, continued fraction for the upper part, summing to Gamma(s).
    for (double s : {0.5, 1.0, 2.0, 2.5, 3.0, 4.5})
        for (double x : {s + 0.5, s + 1.0, s + 2.0, s + 4.0})
            gam = std::max(gam, std::abs(specfun::lowerGammaSeries(s, x) + specfun::upperGammaFraction(s, x) - std::tgamma(s)) / std::tgamma(s));
    r.detail = {{"wronskianMaxError", wr}, {"certificateMaxRelativeChange", ratio}, {"incompleteGammaMaxError", gam}};
    r.passed = wr <= 1e-8 && ratio <= 0.1 && gam <= 1e-10;
    return r;
}

inline Outcome cmdVerify(const RunManifest& m)
{
    requireSeed(m);
    const unsigned long long seed = *m.seed;
    const double k = m.experiment.value("k", 2.0);
    const int orthoN = m.experiment.value("orthogonalityGrid", 512);
    std::vector<std::function<SuiteResult()>> jobs{
        [&] { return geometrySuite(seed); },
        [&] { return coneTransformSuite(seed + 1); },
        [&] { return orthogonalitySuite(seed + 2, m.experiment.value("orthogonalityConfigurations", 1), orthoN); },
        [&] { return threeSpheresSuite(calibrationFor(m, k, 2), seed + 3); },
        [&] { return specialFunctionSuite(); },
    };
    std::vector<SuiteResult> results(jobs.size());
    parallelFor(jobs.size(), m.threads, [&](std::size_t i) { results[i] = jobs[i](); });
    Outcome res;
    json suites = json::array();
    bool all = true;
    for (const auto& s : results) {
        suites.push_back({{"name", s.name}, {"passed", s.passed}, {"detail", s.detail}});
        all = all && s.passed;
    }
    io::OutputSet out(m.outDir, m.hash(), m.force);
    out.addJson("verify.json", {{"command", "verify"}, {"passed", all}, {"suites", suites}});
    res.files = out.commit();
    res.summary = suites;
    res.exitCode = all ? Ok : SuiteFailed;
    return res;
}

// ---------------------------------------------------------------------------
// stability

inline stability::SupportSweepConfig sweepConfigFrom(const json& j)
{
    stability::SupportSweepConfig c;
    c.k = j.value("k", c.k);
    c.contrast = j.value("contrast", c.contrast);
    if (j.contains("offsets")) c.offsets = j.at("offsets").get<std::vector<double>>();
    c.gridLo = j.value("gridLo", c.gridLo);
    c.gridN = j.value("gridN", c.gridN);
    c.R = j.value("R", c.R);
    c.lambda = j.value("lambda", c.lambda);
    c.calibrationTrials = j.value("trials", c.calibrationTrials);
    if (j.contains("omega")) c.omega = normalized(io::toVec(j.at("omega")));
    return c;
}

inline json recordToJson(const stability::StabilityRecord& r)
{
    json j = {{"label", r.label}, {"offset", r.offset}, {"epsilon", r.epsilon}, {"hausdorff", r.hausdorff}, {"tauUsed", r.tauUsed},
              {"tauClamped", r.tauClamped}, {"boundValue", r.boundValue}, {"lnlnRatio", r.lnlnRatio}, {"regime", r.regime},
              {"rellichBound", r.rellichBound}, {"rellichMeasured", r.rellichMeasured}, {"rellichHolds", r.rellichHolds},
              {"orthogonalityMismatch", r.orthogonalityMismatch}, {"infAbsTotal", r.infAbsTotal}, {"withinBound", r.withinBound}};
    if (r.budget) {
        json t = r.budget->terms;
        j["budget"] = {{"terms", t}, {"lhs", r.budget->lhs}, {"C", r.budget->C}, {"holds", r.budget->holds()}, {"tau", r.budget->tau},
                       {"h", r.budget->h}, {"delta", r.budget->delta}, {"m", r.budget->m}, {"p", std::isfinite(r.budget->p) ? json(r.budget->p) : json("inf")}};
    }
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline std::string sweepPlotScript()
{
    return "set terminal pngcairo size 800,600\n"
           "set output 'support_sweep.png'\n"
           "set datafile separator ','\n"
           "set logscale xy\n"
           "set xlabel 'far-field difference epsilon'\n"
           "set ylabel 'Hausdorff distance'\n"
           "plot 'support_sweep.csv' using 2:3 with linespoints title 'measured', \\\n"
           "     'support_sweep.csv' using 2:8 with lines title 'fitted double-log bound'\n";
}

inline std::string ladderPlotScript()
{
    return "set terminal pngcairo size 800,600\n"
           "set output 'cgo_ladder.png'\n"
           "set datafile separator ','\n"
           "set logscale xy\n"
           "set xlabel '|Im rho|'\n"
           "set ylabel 'remainder norm'\n"
           "plot 'cgo_ladder.csv' using 2:3 with linespoints title 'measured'\n";
}

// Remainder decay on a dyadic tau ladder: constant contrast on a centred cube,
// decay cone at the lower corner opening towards the body.
inline std::vector<cgo::FaddeevResult> cgoLadder(int dim, int n, int rungs, double k, double contrast)
{
    const double lo = dim == 3 ? -1.0 : 0.0;
    const auto grid = fields::Grid::cells(dim, {-1, -1, lo}, 2.0 / n, n);
    const auto V = dim == 2 ? fields::ContrastField::constant(geom::Polytope::rectangle(-0.25, -0.25, 0.25, 0.25), contrast)
                            : fields::ContrastField::constant(geom::Polytope::box({-0.25, -0.25, -0.25}, {0.25, 0.25, 0.25}), contrast);
    const auto Q = geom::PolyCone::spherical({-0.25, -0.25, dim == 3 ? -0.25 : 0.0}, {1, 1, dim == 3 ? 1.0 : 0.0}, 3 * pi / 8, dim);
    std::vector<cgo::FaddeevResult> out;
    for (int j = 0; j < rungs; ++j) out.push_back(cgo::buildCgo(V, k, cgo::buildDirection(Q, k, std::pow(2.0, j)), grid).faddeev);
    return out;
}

inline std::string cornerPlotScript()
{
    return "set terminal pngcairo size 800,600\n"
           "set output 'corner_ladder.png'\n"
           "set datafile separator ','\n"
           "set logscale y\n"
           "set xlabel '|phi(x_c)|'\n"
           "set ylabel 'far-field L2 norm'\n"
           "plot 'corner_ladder.csv' using 2:3 with points pt 7 title 'measured'\n";
}

inline std::vector<stability::CornerScene> cornerScenesFrom(const RunManifest& m)
{
    std::vector<stability::CornerScene> out;
    for (const auto& j : m.scenes) {
        const auto s = io::sceneFromJson(j);
        stability::CornerScene c;
        c.label = s.label;
        c.V = s.makeContrast();
        c.corner = j.contains("corner") ? io::toVec(j.at("corner")) : (s.polytopes.empty() ? Vec{0, 0, 0} : s.polytopes.front().vertex(0));
        c.ell = j.value("ell", s.polytopes.empty() ? 1.0 : geom::admissibility(s.polytopes.front(), s.R).ell);
        c.admissible = j.value("admissible", !s.polytopes.empty() && s.contrast.kind != "zero");
        out.push_back(std::move(c));
    }
    return out.empty() ? stability::defaultCornerLadder() : out;
}

inline Outcome cmdStability(const RunManifest& m)
{
    requireSeed(m);
    io::OutputSet out(m.outDir, m.hash(), m.force);
    Outcome res;
    json summary = json::object();

    const json sweepJ = m.experiment.value("sweep", json::object());
    if (!sweepJ.is_null() && sweepJ.value("enabled", true)) {
        auto cfg = sweepConfigFrom(sweepJ);
        cfg.seed = *m.seed;
        cfg.tol = m.gmresTol();
        if (!m.calibration.is_null()) cfg.calibration = calibrationFor(m, cfg.k, 2);
        const auto r = stability::runSupportStabilityExperiment(cfg);
        json recs = json::array();
        std::vector<std::string> rows;
        bool increasing = true;
        double prev = -1.0;
        for (const auto& rec : r.records) {
            recs.push_back(recordToJson(rec));
            if (rec.error.empty()) {
                increasing = increasing && rec.epsilon > prev;
                prev = rec.epsilon;
            } else {
                increasing = false;
            }
            rows.push_back(io::num(rec.offset) + "," + io::num(rec.epsilon) + "," + io::num(rec.hausdorff) + "," + io::num(rec.lnlnRatio)
                           + "," + io::num(rec.tauUsed) + "," + io::num(rec.rellichBound) + "," + io::num(rec.rellichMeasured) + ","
                           + io::num(rec.boundValue) + "," + (rec.withinBound ? "1" : "0"));
        }
        const json body = {{"command", "stability"}, {"experiment", "support-sweep"}, {"records", recs}, {"S", r.S}, {"T", r.T},
                           {"gamma", r.gamma}, {"m", r.m}, {"fittedC", r.fittedC}, {"slope", r.slope}, {"rellichSlope", r.rellichSlope},
                           {"epsilonIncreasing", increasing}, {"calibration", io::calibrationToJson(r.calibration)}};
        out.addJson("support_sweep.json", body);
        out.addCsv("support_sweep.csv", "offset,epsilon,hausdorff,lnln,tau,rellich_bound,rellich_measured,bound,within", rows);
        out.addText("support_sweep.gp", sweepPlotScript());
        summary["sweep"] = {{"epsilonIncreasing", increasing}, {"slope", r.slope}, {"fittedC", r.fittedC}};
    }

    const json ladderJ = m.experiment.value("ladder", json::object());
    if (!ladderJ.is_null() && ladderJ.value("enabled", false)) {
        const int dim = ladderJ.value("dimension", 2);
        const auto ladder = cgoLadder(dim, ladderJ.value("n", dim == 2 ? 256 : 64), ladderJ.value("rungs", 8), ladderJ.value("k", 2.0),
                                      ladderJ.value("contrast", 0.3));
        std::vector<double> x, y;
        for (const auto& r : ladder) {
            x.push_back(std::log(r.dir.imRhoNorm()));
            y.push_back(std::log(r.normP));
        }
        const double slope = stability::fitSlope(x, y), decay = ladder.front().exponents.decay;
        const auto [header, rows] = io::tauSweepCsv(ladder);
        out.addCsv("cgo_ladder.csv", header, rows);
        out.addJson("cgo_ladder.json", {{"command", "stability"}, {"experiment", "cgo-ladder"}, {"dimension", dim}, {"slope", slope},
                                        {"requiredDecay", decay}, {"p", std::isfinite(ladder.front().exponents.p) ? json(ladder.front().exponents.p) : json("inf")}, {"beta", ladder.front().exponents.beta}});
        out.addText("cgo_ladder.gp", ladderPlotScript());
        summary["ladder"] = {{"slope", slope}, {"requiredDecay", decay}};
    }

    const json cornerJ = m.experiment.value("corner", json::object());
    if (!cornerJ.is_null() && cornerJ.value("enabled", true)) {
        const auto scenes = cornerScenesFrom(m);
        const json gj = cornerJ.value("grid", json{{"lo", {-1.0, -1.0}}, {"n", 256}});
        const Vec lo = io::toVec(gj.at("lo"));
        const int n = gj.at("n").get<int>();
        const auto grid = fields::Grid::cells(2, lo, -2.0 * lo[0] / n, n);
        stability::CornerConfig cc;
        cc.k = cornerJ.value("k", 2.0);
        cc.tol = m.gmresTol();
        const auto r = stability::runCornerLowerBoundExperiment(scenes, grid, cc);
        json recs = json::array();
        std::vector<std::string> rows;
        bool allAbove = true;
        for (const auto& rec : r.records) {
            recs.push_back({{"label", rec.label}, {"ffNorm", rec.ffNorm}, {"phiAtCorner", rec.phiAtCorner}, {"logBound", rec.logBound},
                            {"floorRatio", rec.floorRatio}, {"aboveFloor", rec.aboveFloor}, {"admissible", rec.admissible}, {"error", rec.error}});
            if (rec.admissible) allAbove = allAbove && rec.aboveFloor;
            rows.push_back(rec.label + "," + io::num(rec.phiAtCorner) + "," + io::num(rec.ffNorm) + "," + io::num(rec.floorRatio) + ","
                           + io::num(rec.logBound));
        }
        out.addJson("corner_ladder.json", {{"command", "stability"}, {"experiment", "corner-ladder"}, {"records", recs},
                                           {"noiseFloor", r.noiseFloor}, {"zeroNorm", r.zeroNorm}, {"fittedC", r.fittedC},
                                           {"gamma", r.gamma}, {"S", r.S}, {"allAboveFloor", allAbove}});
        out.addCsv("corner_ladder.csv", "label,phi,ff_norm,floor_ratio,log_bound", rows);
        out.addText("corner_ladder.gp", cornerPlotScript());
        summary["corner"] = {{"allAboveFloor", allAbove}, {"noiseFloor", r.noiseFloor}};
    }
    res.files = out.commit();
    res.summary = summary;
    return res;
}

inline Outcome run(const RunManifest& m)
{
    if (m.command == "solve") return cmdSolve(m);
    if (m.command == "calibrate") return cmdCalibrate(m);
    if (m.command == "verify") return cmdVerify(m);
    if (m.command == "stability") return cmdStability(m);
    throw io::IoError("unknown command '" + m.command + "'");
}

} // namespace polyscat::cli
