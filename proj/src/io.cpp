#include "deglap/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deglap/matrix_weight.hpp"

namespace deglap {

namespace fs = std::filesystem;

void atomic_write(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericError("atomic_write: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw NumericError("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string grid_prelude(const Grid2D& g, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config_hash=" << (config_hash.empty() ? "none" : config_hash) << "\n";
    out << "# grid nx=" << g.nx << " ny=" << g.ny << " h=" << format_double(g.h)
        << " ox=" << format_double(g.origin.x) << " oy=" << format_double(g.origin.y) << "\n";
    return out.str();
}

struct CsvBody {
    Grid2D grid;
    std::vector<std::vector<double>> rows;
};

CsvBody parse_csv(const std::string& text, const std::string& header, std::size_t ncols) {
    CsvBody body;
    std::istringstream in(text);
    std::string line;
    bool grid_seen = false, header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# grid ", 0) == 0) {
                int nx, ny;
                double h, ox, oy;
                if (std::sscanf(line.c_str(), "# grid nx=%d ny=%d h=%lf ox=%lf oy=%lf", &nx,
                                &ny, &h, &ox, &oy) == 5) {
                    body.grid = make_grid(nx, ny, h, {ox, oy});
                    grid_seen = true;
                }
            }
            continue;
        }
        if (!header_seen) {
            if (line != header)
                throw ConfigError("csv: expected header '" + header + "', got '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<double> vals;
        std::istringstream row(line);
        std::string tok;
        while (std::getline(row, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() != ncols) throw ConfigError("csv: malformed row '" + line + "'");
        body.rows.push_back(std::move(vals));
    }
    if (!header_seen) throw ConfigError("csv: missing header row");
    if (!grid_seen && ncols > 2) throw ConfigError("csv: missing grid metadata line");
    return body;
}

} // namespace

std::string scalar_field_csv(const ScalarField& f, const std::string& config_hash) {
    std::ostringstream out;
    out << grid_prelude(f.grid, config_hash) << "i,j,value\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i)
            out << i << ',' << j << ',' << format_double(f.at(i, j)) << "\n";
    return out.str();
}

ScalarField parse_scalar_field_csv(const std::string& text) {
    const CsvBody body = parse_csv(text, "i,j,value", 3);
    ScalarField f(body.grid);
    for (const auto& r : body.rows) {
        const int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]);
        require(body.grid.in_lattice(i, j), "scalar csv: cell index out of range");
        f.at(i, j) = r[2];
    }
    return f;
}

std::string vector_field_csv(const VectorField& f, const std::string& config_hash) {
    std::ostringstream out;
    out << grid_prelude(f.grid, config_hash) << "i,j,fx,fy\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) {
            const Vec2 v = f.at(i, j);
            out << i << ',' << j << ',' << format_double(v.x) << ',' << format_double(v.y)
                << "\n";
        }
    return out.str();
}

VectorField parse_vector_field_csv(const std::string& text) {
    const CsvBody body = parse_csv(text, "i,j,fx,fy", 4);
    VectorField f(body.grid);
    for (const auto& r : body.rows) {
        const int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]);
        require(body.grid.in_lattice(i, j), "vector csv: cell index out of range");
        f.set(i, j, {r[2], r[3]});
    }
    return f;
}

std::string matrix_field_csv(const MatrixWeightField& f, const std::string& config_hash) {
    std::ostringstream out;
    out << grid_prelude(f.grid, config_hash) << "i,j,p11,p12,p22\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) {
            const SymMat2& m = f.at(i, j);
            out << i << ',' << j << ',' << format_double(m.a11) << ',' << format_double(m.a12)
                << ',' << format_double(m.a22) << "\n";
        }
    return out.str();
}

MatrixWeightField parse_matrix_field_csv(const std::string& text) {
    const CsvBody body = parse_csv(text, "i,j,p11,p12,p22", 5);
    MatrixWeightField f(body.grid);
    for (const auto& r : body.rows) {
        const int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]);
        require(body.grid.in_lattice(i, j), "matrix csv: cell index out of range");
        f.at(i, j) = SymMat2{r[2], r[3], r[4]};
    }
    measure_lambda(f);
    return f;
}

std::string curve_csv(const std::vector<CurveRow>& rows, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config_hash=" << (config_hash.empty() ? "none" : config_hash) << "\n";
    out << "lambda,mass\n";
    for (const CurveRow& r : rows)
        out << format_double(r.lambda) << ',' << format_double(r.mass) << "\n";
    return out.str();
}

std::vector<CurveRow> parse_curve_csv(const std::string& text) {
    const CsvBody body = parse_csv(text, "lambda,mass", 2);
    std::vector<CurveRow> rows;
    rows.reserve(body.rows.size());
    for (const auto& r : body.rows) rows.push_back({r[0], r[1]});
    return rows;
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& what) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(what + ": unknown key '" + it.key() + "'");
    }
}

} // namespace

DomainMask domain_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("domain json: parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("domain json: document must be an object");
    check_keys(doc, {"type", "nx", "ny", "h", "origin", "profile", "kappa", "r0"},
               "domain json");
    for (const char* k : {"type", "nx", "ny", "h"})
        if (!doc.contains(k)) throw ConfigError(std::string("domain json: missing key '") + k + "'");
    const std::string type = doc["type"].get<std::string>();
    const int nx = doc["nx"].get<int>();
    const int ny = doc["ny"].get<int>();
    const double h = doc["h"].get<double>();
    Vec2 origin;
    if (doc.contains("origin")) {
        const auto& o = doc["origin"];
        if (!o.is_array() || o.size() != 2)
            throw ConfigError("domain json: origin must be [x, y]");
        origin = {o[0].get<double>(), o[1].get<double>()};
    }
    try {
        if (type == "rect") {
            for (const char* k : {"profile", "kappa", "r0"})
                if (doc.contains(k))
                    throw ConfigError(std::string("domain json: key '") + k +
                                      "' is not valid for type rect");
            return make_rect_domain(nx, ny, h, origin);
        }
        if (type == "lipschitz") {
            for (const char* k : {"profile", "kappa", "r0"})
                if (!doc.contains(k))
                    throw ConfigError(std::string("domain json: missing key '") + k + "'");
            LipschitzSpec spec;
            spec.kappa = doc["kappa"].get<double>();
            spec.r0 = doc["r0"].get<double>();
            spec.profile = doc["profile"].get<std::vector<double>>();
            return make_lipschitz_domain(make_grid(nx, ny, h, origin), spec);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("domain json: ") + e.what());
    }
    throw ConfigError("domain json: type must be 'rect' or 'lipschitz'");
}

std::string domain_to_json_text(const DomainMask& mask) {
    json doc;
    doc["type"] = mask.lipschitz ? "lipschitz" : "rect";
    doc["nx"] = mask.grid.nx;
    doc["ny"] = mask.grid.ny;
    doc["h"] = mask.grid.h;
    doc["origin"] = {mask.grid.origin.x, mask.grid.origin.y};
    if (mask.lipschitz) {
        doc["kappa"] = mask.lipschitz->kappa;
        doc["r0"] = mask.lipschitz->r0;
        doc["profile"] = mask.lipschitz->profile;
    }
    return doc.dump(2) + "\n";
}

} // namespace deglap
