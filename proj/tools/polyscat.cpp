#include <iostream>

#include <CLI11.hpp>

#include <polyscat/cli.hpp>

namespace cli = polyscat::cli;

namespace {

int report(const std::string& type, const std::string& message, int code)
{
    std::cerr << cli::errorJson(type, message).dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Polygonal scatterers: forward solves, calibration, verification and stability experiments"};
    app.require_subcommand(1);

    std::vector<std::string> scenePaths;
    std::string out, calibration, experiment;
    unsigned long long seed = 0;
    double tol = 0.0;
    int threads = 1;
    bool force = false;

    const std::pair<const char*, const char*> commands[] = {
        {"solve", "forward scattering solves; far-field CSV per scene"},
        {"calibrate", "calibrate three-balls constants and certify Hankel bounds"},
        {"verify", "geometry, cone transform, orthogonality, three-spheres and special-function suites"},
        {"stability", "support-stability sweep, corner lower-bound ladder, CGO remainder ladder"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--scene", scenePaths, "scene or manifest JSON file")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--calibration", calibration, "calibration.json from a previous calibrate run")->check(CLI::ExistingFile);
        sub->add_option("--experiment", experiment, "JSON file with experiment settings")->check(CLI::ExistingFile);
        sub->add_option("--tol", tol, "GMRES relative tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
        sub->add_flag("--force", force, "overwrite existing outputs");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), cli::UsageError);
    }

    cli::RunManifest m;
    m.command = app.get_subcommands().front()->get_name();
    const auto* sub = app.get_subcommands().front();
    try {
        for (const auto& p : scenePaths) cli::loadSceneFile(m, p);
        if (sub->count("--seed")) m.seed = seed;
        if (sub->count("--tol")) m.tolerances["gmres"] = tol;
        if (!calibration.empty()) m.calibrationPath = calibration;
        if (!experiment.empty()) m.experiment = polyscat::io::readJsonFile(experiment);
        cli::loadCalibration(m);
        m.threads = threads;
        m.force = force;
        m.outDir = out.empty() ? cli::defaultOutRoot() / (m.command + "-" + m.hash()) : std::filesystem::path(out);
        const auto res = cli::run(m);
        for (const auto& f : res.files) std::cout << f.string() << "\n";
        return res.exitCode;
    } catch (const polyscat::io::IoError& e) {
        return report("io", e.what(), cli::UsageError);
    } catch (const polyscat::io::json::exception& e) {
        return report("io", e.what(), cli::UsageError);
    } catch (const polyscat::DomainError& e) {
        return report("domain", e.what(), cli::InputError);
    } catch (const polyscat::NumericalError& e) {
        return report("numerical", e.what(), cli::NumericFailure);
    } catch (const std::exception& e) {
        return report("internal", e.what(), cli::NumericFailure);
    }
}
