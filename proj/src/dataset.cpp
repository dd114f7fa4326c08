#include "mgpc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "mgpc/error.hpp"

namespace mgpc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string context(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

unsigned long long parse_index(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
        fail(ErrorCode::format, context(path, line) + "invalid vertex id '" + text + "'");
    }
    errno = 0;
    const unsigned long long v = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE) fail(ErrorCode::format, context(path, line) + "vertex id out of range");
    return v;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        fail(ErrorCode::format, context(path, line) + "invalid number '" + text + "'");
    }
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    return out;
}

/// Reads the header row (skipping blank and '#' lines), returning its cells.
std::vector<std::string> read_header(std::istream& in, std::size_t& line_no, std::string* comment = nullptr) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            if (comment && comment->empty()) {
                const std::string tag = "# provenance:";
                if (t.rfind(tag, 0) == 0) *comment = trim(t.substr(tag.size()));
            }
            continue;
        }
        return split_csv(t);
    }
    return {};
}

} // namespace

const char* to_string(Fidelity fidelity) noexcept {
    return fidelity == Fidelity::low ? "low" : "high";
}

Fidelity fidelity_from_string(const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "low" || t == "l") return Fidelity::low;
    if (t == "high" || t == "h") return Fidelity::high;
    fail(ErrorCode::format, "unknown fidelity '" + text + "' (expected low or high)");
}

void LabeledDataset::validate(std::size_t vertex_count) const {
    std::set<std::pair<VertexId, int>> seen;
    for (const auto& e : entries) {
        if (e.vertex >= vertex_count) {
            fail(ErrorCode::validation, "dataset vertex " + std::to_string(e.vertex) + " out of range for mesh with " +
                                            std::to_string(vertex_count) + " vertices");
        }
        if (e.label != 0 && e.label != 1) {
            fail(ErrorCode::validation, "dataset label at vertex " + std::to_string(e.vertex) + " is not 0 or 1");
        }
        if (!seen.emplace(e.vertex, static_cast<int>(e.fidelity)).second) {
            fail(ErrorCode::validation, "duplicate " + std::string(to_string(e.fidelity)) + "-fidelity entry for vertex " +
                                            std::to_string(e.vertex));
        }
    }
}

std::size_t LabeledDataset::count(Fidelity fidelity) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const LabeledEntry& e) { return e.fidelity == fidelity; }));
}

std::vector<VertexId> LabeledDataset::vertices(Fidelity fidelity) const {
    std::vector<VertexId> out;
    for (const auto& e : entries) {
        if (e.fidelity == fidelity) out.push_back(e.vertex);
    }
    return out;
}

std::vector<int> LabeledDataset::labels(Fidelity fidelity) const {
    std::vector<int> out;
    for (const auto& e : entries) {
        if (e.fidelity == fidelity) out.push_back(e.label);
    }
    return out;
}

LabeledDataset LabeledDataset::from_labels(const std::vector<VertexId>& vertices, const std::vector<int>& labels,
                                           Fidelity fidelity, std::string provenance) {
    if (vertices.size() != labels.size()) fail(ErrorCode::argument, "vertex and label lists differ in length");
    LabeledDataset out;
    out.provenance = std::move(provenance);
    out.entries.reserve(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) out.entries.push_back({vertices[i], labels[i], fidelity});
    return out;
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    LabeledDataset data;
    std::size_t line_no = 0;
    const auto header = read_header(in, line_no, &data.provenance);
    if (header.size() < 2 || header[0] != "vertex_id" || header[1] != "label" ||
        (header.size() > 2 && header[2] != "fidelity")) {
        fail(ErrorCode::format, context(path, line_no) + "expected header vertex_id,label,fidelity");
    }
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split_csv(t);
        if (cells.size() != header.size()) {
            fail(ErrorCode::format, context(path, line_no) + "expected " + std::to_string(header.size()) + " columns");
        }
        LabeledEntry e;
        e.vertex = parse_index(cells[0], path, line_no);
        if (cells[1] != "0" && cells[1] != "1") {
            fail(ErrorCode::format, context(path, line_no) + "label must be 0 or 1");
        }
        e.label = cells[1] == "1" ? 1 : 0;
        if (cells.size() > 2) {
            try {
                e.fidelity = fidelity_from_string(cells[2]);
            } catch (const Error& err) {
                fail(ErrorCode::format, context(path, line_no) + err.what());
            }
        }
        data.entries.push_back(e);
    }
    if (data.provenance.empty()) data.provenance = path.filename().string();
    return data;
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
    auto out = open_output(path);
    if (!data.provenance.empty()) out << "# provenance: " << data.provenance << '\n';
    out << "vertex_id,label,fidelity\n";
    for (const auto& e : data.entries) out << e.vertex << ',' << e.label << ',' << to_string(e.fidelity) << '\n';
    if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

void write_field_ply(const std::filesystem::path& path, const TriangleMesh& mesh, const ClassProbabilityField& field) {
    const std::size_t n = mesh.vertex_count();
    if (field.size() != n) {
        fail(ErrorCode::argument, "PLY export needs a field over all " + std::to_string(n) + " vertices");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (field.vertices[i] != i) fail(ErrorCode::argument, "PLY export needs the field in vertex order");
    }
    const std::vector<double> prob(field.probability.data(), field.probability.data() + n);
    const std::vector<double> mu(field.mean.data(), field.mean.data() + n);
    const std::vector<double> var(field.variance.data(), field.variance.data() + n);
    const VertexAttribute attrs[] = {{"prob", prob}, {"mu", mu}, {"var", var}};
    write_ply(path, mesh, attrs);
}

void write_field_csv(const std::filesystem::path& path, const ClassProbabilityField& field) {
    auto out = open_output(path);
    out << "vertex_id,prob,mu,var\n";
    char buf[128];
    for (std::size_t i = 0; i < field.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", field.vertices[i], field.probability(ii),
                      field.mean(ii), field.variance(ii));
        out << buf;
    }
    if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

ClassProbabilityField read_field_ply(const std::filesystem::path& path, TriangleMesh* mesh) {
    PlyContents ply = read_ply_with_properties(path);
    const auto* prob = ply.property("prob");
    if (!prob) fail(ErrorCode::format, path.string() + ": missing per-vertex property 'prob'");
    const std::size_t n = ply.mesh.vertex_count();
    ClassProbabilityField field;
    field.vertices.resize(n);
    for (std::size_t i = 0; i < n; ++i) field.vertices[i] = i;
    field.probability = Eigen::Map<const Eigen::VectorXd>(prob->data(), static_cast<Eigen::Index>(n));
    const auto* mu = ply.property("mu");
    const auto* var = ply.property("var");
    field.mean = mu ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(mu->data(), static_cast<Eigen::Index>(n)))
                    : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    field.variance = var ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(var->data(), static_cast<Eigen::Index>(n)))
                         : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (mesh) *mesh = std::move(ply.mesh);
    return field;
}

std::vector<double> read_vertex_scalars_csv(const std::filesystem::path& path, std::size_t vertex_count) {
    auto in = open_input(path);
    std::size_t line_no = 0;
    const auto header = read_header(in, line_no);
    if (header.size() != 2 || header[0] != "vertex_id") {
        fail(ErrorCode::format, context(path, line_no) + "expected header vertex_id,<value>");
    }
    std::vector<double> values(vertex_count, 0.0);
    std::vector<bool> seen(vertex_count, false);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split_csv(t);
        if (cells.size() != 2) fail(ErrorCode::format, context(path, line_no) + "expected 2 columns");
        const auto v = parse_index(cells[0], path, line_no);
        if (v >= vertex_count) fail(ErrorCode::validation, context(path, line_no) + "vertex id out of range");
        if (seen[v]) fail(ErrorCode::validation, context(path, line_no) + "duplicate vertex id");
        seen[v] = true;
        values[v] = parse_double(cells[1], path, line_no);
    }
    const auto missing = std::find(seen.begin(), seen.end(), false);
    if (missing != seen.end()) {
        fail(ErrorCode::validation, path.string() + ": no value for vertex " +
                                        std::to_string(std::distance(seen.begin(), missing)));
    }
    return values;
}

std::vector<VertexId> read_vertex_list_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::size_t line_no = 0;
    const auto header = read_header(in, line_no);
    if (header.empty() || header[0] != "vertex_id") {
        fail(ErrorCode::format, context(path, line_no) + "expected a vertex_id column first");
    }
    std::vector<VertexId> out;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(parse_index(split_csv(t)[0], path, line_no));
    }
    return out;
}

void write_vertex_list_csv(const std::filesystem::path& path, const std::vector<VertexId>& vertices) {
    auto out = open_output(path);
    out << "vertex_id\n";
    for (auto v : vertices) out << v << '\n';
    if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

} // namespace mgpc
