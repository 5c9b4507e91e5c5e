#pragma once

// File formats.
//
// TNSR (binary, little-endian):
//   bytes 0-3  magic "TNSR"
//   byte  4    version, 1
//   byte  5    order N
//   bytes 6-7  reserved, zero
//   then N uint64 extents, then prod(extents) float64 values, first index fastest.
//
// CSV matrices: one row per line, comma separated, optional non-numeric header
// line. Loaded as a tensor, a CSV with M rows of D values becomes the D x M
// order-2 tensor so the samples occupy the last mode.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hyperntf/evaluation.hpp"
#include "hyperntf/tensor.hpp"

namespace hyperntf {

/// 17 significant digits ("%.17g"), which strtod reads back exactly.
std::string format_double(double value);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::string encode_tnsr(const DenseTensor& t);
DenseTensor decode_tnsr(std::string_view bytes);

void save_tensor(const DenseTensor& t, const std::filesystem::path& path);

/// Reads TNSR (detected by its magic) or CSV. With `require_nonnegative`, a
/// negative value raises DataError naming its multi-index.
DenseTensor load_tensor(const std::filesystem::path& path, bool require_nonnegative = false);

struct CsvMatrix {
  std::vector<std::string> header;
  DenseMatrix values;
};

CsvMatrix parse_csv_matrix(std::string_view text);
CsvMatrix read_csv_matrix(const std::filesystem::path& path);
std::string format_csv_matrix(const DenseMatrix& m, const std::vector<std::string>& header);

/// CSV rows = samples; an order-2 tensor in D x M layout.
DenseTensor csv_to_tensor(const DenseMatrix& rows);
/// Inverse of csv_to_tensor for order 2; the last-mode unfolding for higher orders.
DenseMatrix tensor_to_rows(const DenseTensor& t);

/// One integer label per line (optional header).
LabelVector read_labels(const std::filesystem::path& path);

struct IdxDataset {
  DenseTensor images;  ///< rows x cols x count, pixels scaled to [0, 1]
  LabelVector labels;
};

/// Returns true when the file begins with the IDX image magic 0x00000803.
bool is_idx_images(const std::filesystem::path& path);
/// Returns true when the file begins with the IDX label magic 0x00000801.
bool is_idx_labels(const std::filesystem::path& path);

/// Reads IDX image/label files. `limit` <= 0 keeps every item; below the item count a
/// seed-determined subset of `limit` items is kept in file order.
/// `labels_path` may be empty, in which case no labels are returned.
IdxDataset import_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, Index limit, std::uint64_t seed);

}  // namespace hyperntf
