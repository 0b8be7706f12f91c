#pragma once

#include <cstdint>
#include <cstring>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgo.hpp"
#include "cgo.hpp"
#include "fields.hpp"
#include "geom.hpp"
#include "rellich.hpp"
#include "solver.hpp"
#include "specfun.hpp"
#include "vec.hpp"

namespace polyscat::io {

using nlohmann::json;

inline constexpr int kSceneSchema = 1;
inline constexpr int kReportSchema = 1;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hexHash(std::uint64_t h)
{
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// Small value conversions

inline Vec toVec(const json& j)
{
    if (!j.is_array() || j.size() < 2 || j.size() > 3) throw IoError("expected a 2- or 3-component vector");
    Vec v{j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0};
    return v;
}

inline json fromVec(const Vec& v, int dim)
{
    json j = json::array({v[0], v[1]});
    if (dim == 3) j.push_back(v[2]);
    return j;
}

// A complex number is a real or a [re, im] pair.
inline cplx toComplex(const json& j)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw IoError("expected a number or [re, im]");
}

inline json fromComplex(cplx z) { return json::array({z.real(), z.imag()}); }

// ---------------------------------------------------------------------------
// Scenes

struct GridSpec {
    Vec lo{-1, -1, -1};
    double h = 2.0 / 256;
    int n = 256;
};

struct ContrastSpec {
    std::string kind = "constant";   // constant | affine | hoelder-bump | zero
    json params = json::object();
};

struct Scene {
    std::string label = "scene";
    int dimension = 2;
    std::vector<geom::Polytope> polytopes;
    ContrastSpec contrast;
    double k = 2.0;
    Vec omega{1, 0, 0};
    GridSpec grid;
    double R = 1.0;
    json source;   // the JSON the scene came from

    fields::Grid makeGrid() const { return fields::Grid::cells(dimension, grid.lo, grid.h, grid.n); }

    // Contrast on the first polytope (zero when there is none or kind is zero).
    fields::ContrastField makeContrast() const
    {
        if (contrast.kind == "zero" || polytopes.empty()) return fields::ContrastField::zero();
        const auto& P = polytopes.front();
        const auto& p = contrast.params;
        if (contrast.kind == "constant") return fields::ContrastField::constant(P, toComplex(p.at("value")));
        if (contrast.kind == "affine") return fields::ContrastField::affine(P, toComplex(p.at("c0")), toVec(p.at("gradient")));
        if (contrast.kind == "hoelder-bump")
            return fields::ContrastField::hoelderBump(P, toComplex(p.at("c0")), toComplex(p.at("c")), toVec(p.at("x0")),
                                                      p.at("alpha").get<double>());
        throw IoError("unknown contrast kind '" + contrast.kind + "'");
    }
};

inline geom::Polytope polytopeFromJson(const json& j, int dim)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "rectangle") {
        const Vec lo = toVec(j.at("lo")), hi = toVec(j.at("hi"));
        return geom::Polytope::rectangle(lo[0], lo[1], hi[0], hi[1]);
    }
    if (kind == "polygon") {
        std::vector<Vec> v;
        for (const auto& p : j.at("vertices")) v.push_back(toVec(p));
        return geom::Polytope::polygon(std::move(v));
    }
    if (kind == "box") return geom::Polytope::box(toVec(j.at("lo")), toVec(j.at("hi")));
    if (kind == "cuboid") {
        std::vector<Vec> v;
        for (const auto& p : j.at("vertices")) v.push_back(toVec(p));
        return geom::Polytope::cuboid(std::move(v));
    }
    (void)dim;
    throw IoError("unknown polytope kind '" + kind + "'");
}

inline json polytopeToJson(const geom::Polytope& P)
{
    json v = json::array();
    for (const auto& x : P.vertices()) v.push_back(fromVec(x, P.dim()));
    return {{"kind", P.dim() == 2 ? "polygon" : "cuboid"}, {"vertices", v}};
}

// Parse and validate against geometry and grid admissibility.
inline Scene sceneFromJson(const json& j)
{
    if (!j.is_object()) throw IoError("scene must be a JSON object");
    const int schema = j.value("schema", kSceneSchema);
    if (schema != kSceneSchema) throw IoError("unsupported scene schema " + std::to_string(schema));
    Scene s;
    s.source = j;
    s.label = j.value("label", std::string("scene"));
    s.dimension = j.value("dimension", 2);
    if (s.dimension != 2 && s.dimension != 3) throw IoError("dimension must be 2 or 3");
    if (j.contains("polytopes"))
        for (const auto& p : j.at("polytopes")) {
            s.polytopes.push_back(polytopeFromJson(p, s.dimension));
            if (s.polytopes.back().dim() != s.dimension) throw IoError("polytope dimension does not match the scene");
        }
    if (j.contains("contrast")) {
        const auto& c = j.at("contrast");
        s.contrast.kind = c.at("kind").get<std::string>();
        s.contrast.params = c;
    } else {
        s.contrast.kind = "zero";
    }
    s.k = j.value("k", 2.0);
    if (!(s.k > 0.0)) throw IoError("k must be positive");
    if (j.contains("omega")) s.omega = normalized(toVec(j.at("omega")));
    if (s.dimension == 2 && s.omega[2] != 0.0) throw IoError("2D incident direction must lie in the plane");
    s.R = j.value("R", 1.0);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        s.grid.n = g.at("n").get<int>();
        s.grid.lo = toVec(g.at("lo"));
        s.grid.h = g.contains("h") ? g.at("h").get<double>() : -2.0 * s.grid.lo[0] / s.grid.n;
    }
    if (s.dimension == 2) s.grid.lo[2] = 0.0;
    // Admissibility: contrast builds, polytope fits inside the grid, circumradius below R.
    const auto V = s.makeContrast();
    const auto grid = s.makeGrid();
    for (const auto& P : s.polytopes) {
        if (P.circumradius() > s.R + 1e-12) throw IoError("polytope leaves the ball of radius R");
        for (const auto& v : P.vertices())
            for (int a = 0; a < s.dimension; ++a)
                if (v[a] <= grid.origin[a] || v[a] >= grid.upper()[a]) throw IoError("polytope leaves the grid");
    }
    (void)V;
    return s;
}

inline json readJsonFile(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("invalid JSON in " + p.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Calibration artifacts

inline json calibrationToJson(const rellich::Calibration& c)
{
    return {{"k", c.k}, {"dim", c.dim}, {"R_m", c.Rm}, {"C", c.C}, {"c1", c.c1}, {"c2", c.c2}, {"seed", c.seed}, {"trials", c.trials}};
}

inline rellich::Calibration calibrationFromJson(const json& j)
{
    rellich::Calibration c;
    try {
        c.k = j.at("k").get<double>();
        c.dim = j.value("dim", 2);
        c.Rm = j.at("R_m").get<double>();
        c.C = j.at("C").get<double>();
        c.c1 = j.at("c1").get<double>();
        c.c2 = j.at("c2").get<double>();
        c.seed = j.at("seed").get<unsigned long long>();
        c.trials = j.at("trials").get<int>();
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid calibration: ") + e.what());
    }
    if (!(c.c1 > 0.0 && c.c1 < 1.0) || !(c.C >= 1.0) || std::abs(c.c2 - c.c1 / 4) > 1e-12 * c.c1)
        throw IoError("calibration constants out of range");
    return c;
}

inline json certificateToJson(const specfun::HankelBoundCertificate& c)
{
    return {{"z1", c.z1}, {"z2", c.z2}, {"nuMax", c.nuMax}, {"C", c.C}, {"samples", c.samples}, {"inflation", c.inflation},
            {"violated", c.violated}};
}

// ---------------------------------------------------------------------------
// Output files

// Collects files and writes them only if none would clobber an existing one.
class OutputSet {
public:
    OutputSet(std::filesystem::path dir, std::string manifestHash, bool force)
        : dir_(std::move(dir)), hash_(std::move(manifestHash)), force_(force)
    {
    }

    const std::string& hash() const { return hash_; }
    const std::filesystem::path& dir() const { return dir_; }

    void addJson(const std::string& name, json body)
    {
        body["manifest_hash"] = hash_;
        body["schema"] = kReportSchema;
        files_.push_back({name, body.dump(2) + "\n"});
    }

    // CSV with a leading comment carrying the manifest hash.
    void addCsv(const std::string& name, const std::string& header, const std::vector<std::string>& rows)
    {
        std::string s = "# manifest_hash " + hash_ + "\n" + header + "\n";
        for (const auto& r : rows) s += r + "\n";
        files_.push_back({name, s});
    }

    // Raw bytes; the hash lives in a sidecar.
    void addBinary(const std::string& name, std::string bytes) { files_.push_back({name, std::move(bytes)}); }

    void addText(const std::string& name, const std::string& body, const std::string& commentPrefix = "#")
    {
        files_.push_back({name, commentPrefix + " manifest_hash " + hash_ + "\n" + body});
    }

    std::vector<std::filesystem::path> commit() const
    {
        if (!force_)
            for (const auto& f : files_)
                if (std::filesystem::exists(dir_ / f.name))
                    throw IoError("refusing to overwrite " + (dir_ / f.name).string() + " (use --force)");
        std::filesystem::create_directories(dir_);
        std::vector<std::filesystem::path> written;
        for (const auto& f : files_) {
            std::ofstream out(dir_ / f.name, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write " + (dir_ / f.name).string());
            out << f.body;
            written.push_back(dir_ / f.name);
        }
        return written;
    }

private:
    struct File {
        std::string name;
        std::string body;
    };
    std::filesystem::path dir_;
    std::string hash_;
    bool force_ = false;
    std::vector<File> files_;
};

// Shortest round-trip decimal form, so reruns give identical bytes.
inline std::string num(double x)
{
    return json(x).dump();
}

// "theta, re, im" in 2D and "theta, phi, re, im" in 3D.
inline std::pair<std::string, std::vector<std::string>> farFieldCsv(const solver::FarFieldPattern& ff)
{
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < ff.size(); ++i) {
        const Vec& d = ff.directions[i];
        std::string r;
        if (ff.dim == 2) {
            r = num(ff.angle(i));
        } else {
            const double theta = std::acos(std::clamp(d[2], -1.0, 1.0));
            double phi = std::atan2(d[1], d[0]);
            if (phi < 0) phi += 2 * pi;
            r = num(theta) + "," + num(phi);
        }
        r += "," + num(ff.values[i].real()) + "," + num(ff.values[i].imag());
        rows.push_back(r);
    }
    return {ff.dim == 2 ? "theta,re,im" : "theta,phi,re,im", rows};
}

// Flat little-endian complex64 (float re, float im) in grid index order.
inline std::string fieldBinary(const fields::WaveField& u)
{
    std::string out;
    out.reserve(u.values.size() * 8);
    auto put = [&out](float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    };
    for (const auto& v : u.values) {
        put(static_cast<float>(v.real()));
        put(static_cast<float>(v.imag()));
    }
    return out;
}

inline json fieldSidecar(const fields::WaveField& u, const std::string& binaryName)
{
    const auto& g = u.grid;
    return {{"data", binaryName}, {"format", "complex64-le"}, {"dimension", g.dim}, {"origin", fromVec(g.origin, g.dim)}, {"h", g.h},
            {"extent", json::array({g.extent[0], g.extent[1], g.extent[2]})}, {"k", u.k}, {"role", fields::roleName(u.role)},
            {"order", "x fastest"}};
}

// Slice along x through the node row nearest to the given y (and z).
inline std::pair<std::string, std::vector<std::string>> fieldSliceCsv(const fields::WaveField& u, double y, double z = 0.0)
{
    const auto& g = u.grid;
    auto row = [&](double c, int a) { return std::clamp(static_cast<int>(std::lround((c - g.origin[a]) / g.h)), 0, g.extent[a] - 1); };
    const int j = row(y, 1), l = g.dim == 3 ? row(z, 2) : 0;
    std::vector<std::string> rows;
    for (int i = 0; i < g.extent[0]; ++i) {
        const cplx v = u.values[g.index(i, j, l)];
        rows.push_back(num(g.origin[0] + i * g.h) + "," + num(v.real()) + "," + num(v.imag()));
    }
    return {"x,re,im", rows};
}

// tau, |Im rho|, ||psi||_p and the log-log slope from the first rung.
inline std::pair<std::string, std::vector<std::string>> tauSweepCsv(const std::vector<cgo::FaddeevResult>& ladder)
{
    std::vector<std::string> rows;
    double x0 = 0.0, y0 = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& r = ladder[i];
        const double x = std::log(r.dir.imRhoNorm()), y = std::log(r.normP);
        if (i == 0) {
            x0 = x;
            y0 = y;
        }
        const std::string slope = i == 0 ? "" : num((y - y0) / (x - x0));
        rows.push_back(num(r.dir.tau) + "," + num(r.dir.imRhoNorm()) + "," + num(r.normP) + "," + slope);
    }
    return {"tau,im_rho,norm_p,slope_so_far", rows};
}

} // namespace polyscat::io
