#include "mgpc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include <Eigen/Geometry>

#include "mgpc/error.hpp"

namespace mgpc {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::argument: return "argument error";
    case ErrorCode::format: return "format error";
    case ErrorCode::validation: return "validation error";
    case ErrorCode::geometry: return "geometry error";
    case ErrorCode::numerical: return "numerical error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::calibration: return "calibration error";
    case ErrorCode::undefined_metric: return "undefined metric";
    case ErrorCode::oracle: return "oracle error";
    }
    return "error";
}

namespace {

double raw_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

} // namespace

TriangleMesh::TriangleMesh(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    const std::size_t nv = vertices_.size();
    if (nv == 0 || triangles_.empty()) {
        fail(ErrorCode::validation, "mesh has no vertices or no triangles");
    }

    Eigen::Vector3d lo = vertices_[0], hi = vertices_[0];
    for (const auto& p : vertices_) {
        if (!p.allFinite()) {
            fail(ErrorCode::validation, "mesh has a non-finite vertex coordinate");
        }
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag2 = (hi - lo).squaredNorm();

    vertex_areas_.assign(nv, 0.0);
    std::map<Edge, int> edge_use;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (VertexId v : tri) {
            if (v >= nv) {
                fail(ErrorCode::validation, "triangle " + std::to_string(t) + " references vertex " +
                                                std::to_string(v) + " of a " + std::to_string(nv) +
                                                "-vertex mesh");
            }
        }
        const double area = raw_triangle_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(area > 1e-14 * diag2)) {
            fail(ErrorCode::validation, "degenerate triangle " + std::to_string(t) + " (" +
                                            std::to_string(tri[0]) + ", " + std::to_string(tri[1]) +
                                            ", " + std::to_string(tri[2]) + ")");
        }
        for (VertexId v : tri) {
            vertex_areas_[v] += area / 3.0;
        }
        total_area_ += area;
        for (int k = 0; k < 3; ++k) {
            VertexId a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) {
                std::swap(a, b);
            }
            if (++edge_use[{a, b}] > 2) {
                fail(ErrorCode::validation, "non-manifold edge (" + std::to_string(a) + ", " +
                                                std::to_string(b) + ") has more than two triangles");
            }
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        if (vertex_areas_[v] <= 0.0) {
            fail(ErrorCode::validation, "vertex " + std::to_string(v) + " is not referenced by any triangle");
        }
    }

    boundary_.assign(nv, false);
    neighbors_.assign(nv, {});
    edges_.reserve(edge_use.size());
    double length_sum = 0.0;
    for (const auto& [edge, count] : edge_use) {
        edges_.push_back(edge);
        length_sum += (vertices_[edge.first] - vertices_[edge.second]).norm();
        neighbors_[edge.first].push_back(edge.second);
        neighbors_[edge.second].push_back(edge.first);
        if (count == 1) {
            boundary_[edge.first] = true;
            boundary_[edge.second] = true;
        }
    }
    mean_edge_length_ = length_sum / static_cast<double>(edges_.size());
    boundary_vertex_count_ = static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), true));
    for (auto& n : neighbors_) {
        std::sort(n.begin(), n.end());
    }

    constexpr auto unset = static_cast<std::size_t>(-1);
    component_.assign(nv, unset);
    for (VertexId seed = 0; seed < nv; ++seed) {
        if (component_[seed] != unset) {
            continue;
        }
        std::queue<VertexId> frontier;
        frontier.push(seed);
        component_[seed] = component_count_;
        while (!frontier.empty()) {
            VertexId v = frontier.front();
            frontier.pop();
            for (VertexId w : neighbors_[v]) {
                if (component_[w] == unset) {
                    component_[w] = component_count_;
                    frontier.push(w);
                }
            }
        }
        ++component_count_;
    }
}

double TriangleMesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles_.at(t);
    return raw_triangle_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

// ---------------------------------------------------------------------------
// Readers

namespace {

struct Token {
    std::string text;
    std::size_t line;
};

class TokenStream {
public:
    TokenStream(const std::string& text, char comment) {
        std::istringstream in(text);
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (comment != '\0') {
                if (auto pos = line.find(comment); pos != std::string::npos) {
                    line.erase(pos);
                }
            }
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) {
                tokens_.push_back({tok, number});
            }
        }
    }

    bool done() const { return pos_ >= tokens_.size(); }
    std::size_t line() const { return done() ? (tokens_.empty() ? 0 : tokens_.back().line) : tokens_[pos_].line; }

    const Token& next(const char* what) {
        if (done()) {
            fail(ErrorCode::format, std::string("unexpected end of file while reading ") + what +
                                        " (line " + std::to_string(line()) + ")");
        }
        return tokens_[pos_++];
    }

    double next_double(const char* what) {
        const Token& t = next(what);
        char* end = nullptr;
        double value = std::strtod(t.text.c_str(), &end);
        if (end == t.text.c_str() || *end != '\0') {
            fail(ErrorCode::format, "line " + std::to_string(t.line) + ": expected a number for " + what +
                                        ", got '" + t.text + "'");
        }
        return value;
    }

    long long next_int(const char* what) {
        const Token& t = next(what);
        char* end = nullptr;
        long long value = std::strtoll(t.text.c_str(), &end, 10);
        if (end == t.text.c_str() || *end != '\0') {
            fail(ErrorCode::format, "line " + std::to_string(t.line) + ": expected an integer for " + what +
                                        ", got '" + t.text + "'");
        }
        return value;
    }

    void skip_rest_of_line(std::size_t line) {
        while (!done() && tokens_[pos_].line == line) {
            ++pos_;
        }
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

VertexId checked_index(long long raw, std::size_t line) {
    if (raw < 0) {
        fail(ErrorCode::validation, "line " + std::to_string(line) + ": negative vertex index " + std::to_string(raw));
    }
    return static_cast<VertexId>(raw);
}

} // namespace

TriangleMesh parse_off(const std::string& text) {
    TokenStream ts(text, '#');
    const Token& magic = ts.next("OFF header");
    if (magic.text != "OFF") {
        fail(ErrorCode::format, "line " + std::to_string(magic.line) + ": missing OFF header");
    }
    const long long nv = ts.next_int("vertex count");
    const long long nf = ts.next_int("face count");
    ts.next_int("edge count");
    if (nv <= 0 || nf <= 0) {
        fail(ErrorCode::format, "OFF header declares no vertices or faces");
    }
    std::vector<Eigen::Vector3d> vertices(static_cast<std::size_t>(nv));
    for (auto& p : vertices) {
        p.x() = ts.next_double("vertex x");
        p.y() = ts.next_double("vertex y");
        p.z() = ts.next_double("vertex z");
    }
    std::vector<Triangle> triangles(static_cast<std::size_t>(nf));
    for (auto& tri : triangles) {
        const std::size_t line = ts.line();
        const long long arity = ts.next_int("face arity");
        if (arity != 3) {
            fail(ErrorCode::format, "line " + std::to_string(line) + ": only triangular faces are supported (got " +
                                        std::to_string(arity) + " vertices)");
        }
        for (auto& v : tri) {
            v = checked_index(ts.next_int("face index"), line);
        }
        ts.skip_rest_of_line(line); // optional per-face colors
    }
    return TriangleMesh(std::move(vertices), std::move(triangles));
}

namespace {

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    struct Property {
        std::string name;
        bool is_list = false;
    };
    std::vector<Property> properties;
};

struct PlyParse {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Triangle> triangles;
    std::vector<std::pair<std::string, std::vector<double>>> extra;
};

PlyParse parse_ply_impl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    auto header_line = [&]() -> std::string {
        if (!std::getline(in, line)) {
            fail(ErrorCode::format, "unexpected end of PLY header (line " + std::to_string(number) + ")");
        }
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return line;
    };

    if (header_line() != "ply") {
        fail(ErrorCode::format, "line 1: missing 'ply' magic");
    }
    std::vector<PlyElement> elements;
    bool ascii = false;
    for (;;) {
        std::istringstream ls(header_line());
        std::string key;
        ls >> key;
        if (key == "end_header") {
            break;
        }
        if (key == "format") {
            std::string kind;
            ls >> kind;
            if (kind != "ascii") {
                fail(ErrorCode::format, "line " + std::to_string(number) + ": only ascii PLY is supported");
            }
            ascii = true;
        } else if (key == "element") {
            PlyElement e;
            long long count = -1;
            ls >> e.name >> count;
            if (count < 0) {
                fail(ErrorCode::format, "line " + std::to_string(number) + ": bad element declaration");
            }
            e.count = static_cast<std::size_t>(count);
            elements.push_back(e);
        } else if (key == "property") {
            if (elements.empty()) {
                fail(ErrorCode::format, "line " + std::to_string(number) + ": property before element");
            }
            std::string type;
            ls >> type;
            PlyElement::Property p;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type;
                p.is_list = true;
            }
            ls >> p.name;
            elements.back().properties.push_back(p);
        } else if (key == "comment" || key == "obj_info" || key.empty()) {
            continue;
        } else {
            fail(ErrorCode::format, "line " + std::to_string(number) + ": unknown header keyword '" + key + "'");
        }
    }
    if (!ascii) {
        fail(ErrorCode::format, "PLY header lacks 'format ascii 1.0'");
    }

    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    TokenStream ts(rest, '\0');
    auto body_line = [&]() { return number + ts.line(); };

    PlyParse out;
    bool have_vertices = false, have_faces = false;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            have_vertices = true;
            int ix = -1, iy = -1, iz = -1;
            std::vector<int> extra_slot(e.properties.size(), -1);
            for (std::size_t k = 0; k < e.properties.size(); ++k) {
                const auto& p = e.properties[k];
                if (p.is_list) {
                    fail(ErrorCode::format, "list properties on vertices are not supported");
                }
                if (p.name == "x") ix = static_cast<int>(k);
                else if (p.name == "y") iy = static_cast<int>(k);
                else if (p.name == "z") iz = static_cast<int>(k);
                else {
                    extra_slot[k] = static_cast<int>(out.extra.size());
                    out.extra.push_back({p.name, std::vector<double>(e.count)});
                }
            }
            if (ix < 0 || iy < 0 || iz < 0) {
                fail(ErrorCode::format, "PLY vertex element lacks x/y/z properties");
            }
            out.vertices.resize(e.count);
            std::vector<double> row(e.properties.size());
            for (std::size_t v = 0; v < e.count; ++v) {
                for (auto& x : row) {
                    x = ts.next_double("vertex property");
                }
                out.vertices[v] = {row[ix], row[iy], row[iz]};
                for (std::size_t k = 0; k < row.size(); ++k) {
                    if (extra_slot[k] >= 0) {
                        out.extra[extra_slot[k]].second[v] = row[k];
                    }
                }
            }
        } else if (e.name == "face") {
            have_faces = true;
            out.triangles.resize(e.count);
            for (std::size_t f = 0; f < e.count; ++f) {
                for (const auto& p : e.properties) {
                    if (!p.is_list) {
                        ts.next_double("face property");
                        continue;
                    }
                    const std::size_t line = body_line();
                    const long long arity = ts.next_int("face arity");
                    if (p.name != "vertex_indices" && p.name != "vertex_index") {
                        for (long long k = 0; k < arity; ++k) ts.next_double("face list item");
                        continue;
                    }
                    if (arity != 3) {
                        fail(ErrorCode::format, "line " + std::to_string(line) +
                                                    ": only triangular faces are supported (got " +
                                                    std::to_string(arity) + " vertices)");
                    }
                    for (auto& v : out.triangles[f]) {
                        v = checked_index(ts.next_int("face index"), line);
                    }
                }
            }
        } else {
            for (std::size_t i = 0; i < e.count; ++i) {
                for (const auto& p : e.properties) {
                    if (p.is_list) {
                        const long long n = ts.next_int("list count");
                        for (long long k = 0; k < n; ++k) ts.next_double("list item");
                    } else {
                        ts.next_double("property");
                    }
                }
            }
        }
    }
    if (!have_vertices || !have_faces) {
        fail(ErrorCode::format, "PLY file needs both vertex and face elements");
    }
    return out;
}

} // namespace

TriangleMesh parse_ply(const std::string& text) {
    auto parsed = parse_ply_impl(text);
    return TriangleMesh(std::move(parsed.vertices), std::move(parsed.triangles));
}

const std::vector<double>* PlyContents::property(const std::string& name) const {
    for (const auto& [key, values] : vertex_properties) {
        if (key == name) {
            return &values;
        }
    }
    return nullptr;
}

PlyContents read_ply_with_properties(const std::filesystem::path& path) {
    auto parsed = parse_ply_impl(read_file(path));
    PlyContents out{TriangleMesh(std::move(parsed.vertices), std::move(parsed.triangles)), std::move(parsed.extra)};
    return out;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
    const std::string text = read_file(path);
    return format == MeshFormat::off ? parse_off(text) : parse_ply(text);
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") {
        return load_mesh(path, MeshFormat::off);
    }
    if (ext == ".ply") {
        return load_mesh(path, MeshFormat::ply_ascii);
    }
    fail(ErrorCode::argument, "cannot infer mesh format from extension of " + path.string());
}

// ---------------------------------------------------------------------------

TriangleMesh normalize_coordinates(const TriangleMesh& mesh) {
    const std::size_t n = mesh.vertex_count();
    if (n < 2) {
        fail(ErrorCode::argument, "normalization needs at least two vertices");
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : mesh.vertices()) {
        mean += p;
    }
    mean /= static_cast<double>(n);
    Eigen::Vector3d var = Eigen::Vector3d::Zero();
    for (const auto& p : mesh.vertices()) {
        var += (p - mean).cwiseAbs2();
    }
    var /= static_cast<double>(n);
    const double scale = std::sqrt(var.maxCoeff());
    if (!(scale > 0.0)) {
        fail(ErrorCode::geometry, "all vertices coincide; cannot normalize");
    }
    std::vector<Eigen::Vector3d> out;
    out.reserve(n);
    for (const auto& p : mesh.vertices()) {
        out.push_back((p - mean) / scale);
    }
    return TriangleMesh(std::move(out), mesh.triangles());
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               std::span<const VertexAttribute> attributes) {
    for (const auto& a : attributes) {
        if (a.values.size() != mesh.vertex_count()) {
            fail(ErrorCode::argument, "attribute '" + a.name + "' has the wrong length");
        }
    }
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) {
        fail(ErrorCode::io, "cannot write " + path.string());
    }
    std::fprintf(f, "ply\nformat ascii 1.0\nelement vertex %zu\n", mesh.vertex_count());
    std::fprintf(f, "property double x\nproperty double y\nproperty double z\n");
    for (const auto& a : attributes) {
        std::fprintf(f, "property float %s\n", a.name.c_str());
    }
    std::fprintf(f, "element face %zu\nproperty list uchar int vertex_indices\nend_header\n", mesh.triangle_count());
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
        const auto& p = mesh.vertex(v);
        std::fprintf(f, "%.17g %.17g %.17g", p.x(), p.y(), p.z());
        for (const auto& a : attributes) {
            std::fprintf(f, " %.9g", static_cast<double>(static_cast<float>(a.values[v])));
        }
        std::fputc('\n', f);
    }
    for (const auto& t : mesh.triangles()) {
        std::fprintf(f, "3 %zu %zu %zu\n", t[0], t[1], t[2]);
    }
    if (std::fclose(f) != 0) {
        fail(ErrorCode::io, "failed writing " + path.string());
    }
}

void write_off(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) {
        fail(ErrorCode::io, "cannot write " + path.string());
    }
    std::fprintf(f, "OFF\n%zu %zu 0\n", mesh.vertex_count(), mesh.triangle_count());
    for (const auto& p : mesh.vertices()) {
        std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    }
    for (const auto& t : mesh.triangles()) {
        std::fprintf(f, "3 %zu %zu %zu\n", t[0], t[1], t[2]);
    }
    if (std::fclose(f) != 0) {
        fail(ErrorCode::io, "failed writing " + path.string());
    }
}

double average_pairwise_geodesic(const TriangleMesh& mesh, std::span<const VertexId> points,
                                 const DistanceProvider& distances) {
    if (points.size() < 2) {
        fail(ErrorCode::argument, "average pairwise distance needs at least two points");
    }
    std::vector<VertexId> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        fail(ErrorCode::argument, "duplicate vertex in point set");
    }
    if (sorted.back() >= mesh.vertex_count()) {
        fail(ErrorCode::argument, "point index out of range");
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a + 1 < points.size(); ++a) {
        const std::vector<double> field = distances(points[a]);
        for (std::size_t b = a + 1; b < points.size(); ++b) {
            sum += field.at(points[b]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

} // namespace mgpc
