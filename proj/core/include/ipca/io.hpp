#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "ipca/errors.hpp"

namespace ipca {

// Binary matrix container. Header: magic "IPCA1", one dtype byte (0x01 =
// f64), one order byte (0x00 = row-major), one reserved zero byte, then
// rows and cols as little-endian u64. Payload: rows*cols f64, row-major,
// little-endian. Round-trips bit-exactly.

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// CSV with one header row; values written with 17 significant digits.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns, const Eigen::MatrixXd& m);
/// Reads back a CSV written by write_csv (header row skipped).
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

}  // namespace ipca
