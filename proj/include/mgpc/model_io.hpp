#pragma once

#include <filesystem>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace mgpc {

/// "MGPC-MDL1\n", u64 header length, JSON header, then the draws as
/// little-endian float64, row-major, shape taken from header draws_rows/draws_cols.
struct ModelFile {
    nlohmann::json header;
    Eigen::MatrixXd draws;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model_file(const std::filesystem::path& path);

} // namespace mgpc
