#include "mgpc/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mgpc/error.hpp"

namespace mgpc {

namespace {

constexpr char model_magic[] = "MGPC-MDL1\n";
constexpr std::size_t model_magic_size = sizeof(model_magic) - 1;

} // namespace

void write_model_file(const std::filesystem::path& path, const ModelFile& model) {
    nlohmann::json header = model.header;
    header["draws_rows"] = model.draws.rows();
    header["draws_cols"] = model.draws.cols();
    const std::string text = header.dump(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out.write(model_magic, model_magic_size);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    // Row-major: one draw after another.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = model.draws;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    char magic[model_magic_size];
    in.read(magic, model_magic_size);
    if (!in || std::memcmp(magic, model_magic, model_magic_size) != 0) {
        fail(ErrorCode::format, path.string() + " is not a model file (bad magic)");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1ULL << 32)) fail(ErrorCode::format, path.string() + ": bad header length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) fail(ErrorCode::format, path.string() + ": truncated header");

    ModelFile model;
    try {
        model.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format, path.string() + ": invalid JSON header: " + e.what());
    }
    const auto rows = model.header.value("draws_rows", std::int64_t{-1});
    const auto cols = model.header.value("draws_cols", std::int64_t{-1});
    if (rows < 0 || cols < 0) fail(ErrorCode::format, path.string() + ": header lacks draws shape");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in) fail(ErrorCode::format, path.string() + ": truncated draws block");
    in.peek();
    if (!in.eof()) fail(ErrorCode::format, path.string() + ": trailing bytes after draws block");
    model.draws = rm;
    return model;
}

} // namespace mgpc
