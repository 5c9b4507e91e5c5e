#include "hyperntf/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "hyperntf/random.hpp"

namespace hyperntf {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void atomic_write(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                             ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(b)]))
         << (8 * b);
  return v;
}

std::uint32_t get_u32_be(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t b = 0; b < 4; ++b)
    v = (v << 8) | static_cast<unsigned char>(in[at + b]);
  return v;
}

std::string multi_index(const std::vector<Index>& dims, Index linear) {
  std::string s = "(";
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k > 0) s += ",";
    s += std::to_string(linear % dims[k]);
    linear /= dims[k];
  }
  return s + ")";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

bool parse_number(std::string_view field, double& out) {
  if (field.empty()) return false;
  // strtod accepts the 17-digit output of format_double exactly.
  std::string copy(field);
  char* end = nullptr;
  out = std::strtod(copy.c_str(), &end);
  return end == copy.c_str() + copy.size();
}

}  // namespace

std::string encode_tnsr(const DenseTensor& t) {
  if (t.order() < 1 || t.order() > 255) throw InvalidArgument("TNSR: order must be in 1..255");
  std::string out = "TNSR";
  out.push_back(1);
  out.push_back(static_cast<char>(t.order()));
  out.push_back(0);
  out.push_back(0);
  for (Index d : t.dims()) put_u64(out, static_cast<std::uint64_t>(d));
  for (Index i = 0; i < t.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(t.data()[i]));
  return out;
}

DenseTensor decode_tnsr(std::string_view bytes) {
  if (bytes.size() < 8) {
    if (bytes.size() >= 4 && bytes.substr(0, 4) != "TNSR")
      throw FormatError("TNSR: bad magic", 0);
    throw TruncationError("TNSR: header truncated", bytes.size());
  }
  if (bytes.substr(0, 4) != "TNSR") throw FormatError("TNSR: bad magic", 0);
  if (static_cast<unsigned char>(bytes[4]) != 1)
    throw FormatError("TNSR: unsupported version " +
                          std::to_string(static_cast<unsigned char>(bytes[4])),
                      4);
  const std::size_t order = static_cast<unsigned char>(bytes[5]);
  if (order == 0) throw FormatError("TNSR: order must be positive", 5);
  if (bytes[6] != 0 || bytes[7] != 0) throw FormatError("TNSR: reserved bytes not zero", 6);

  const std::size_t dims_end = 8 + 8 * order;
  if (bytes.size() < dims_end) throw TruncationError("TNSR: extents truncated", bytes.size());
  std::vector<Index> dims;
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < order; ++k) {
    const std::uint64_t d = get_u64(bytes, 8 + 8 * k);
    if (d == 0 || d > (1ULL << 40)) throw FormatError("TNSR: invalid extent", 8 + 8 * k);
    if (count > (1ULL << 40) / d) throw FormatError("TNSR: tensor too large", 8 + 8 * k);
    count *= d;
    dims.push_back(static_cast<Index>(d));
  }
  const std::uint64_t expected = dims_end + 8 * count;
  if (bytes.size() < expected)
    throw TruncationError("TNSR: payload truncated, " + std::to_string(bytes.size()) +
                              " bytes of " + std::to_string(expected),
                          bytes.size());
  if (bytes.size() > expected)
    throw TruncationError("TNSR: " + std::to_string(bytes.size() - expected) +
                              " bytes beyond the declared payload",
                          expected);
  DenseVector data(static_cast<Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    data[static_cast<Index>(i)] = std::bit_cast<double>(get_u64(bytes, dims_end + 8 * i));
  return DenseTensor(std::move(dims), std::move(data));
}

void save_tensor(const DenseTensor& t, const fs::path& path) { atomic_write(path, encode_tnsr(t)); }

DenseTensor load_tensor(const fs::path& path, bool require_nonnegative) {
  const std::string bytes = read_file(path);
  DenseTensor t = bytes.compare(0, 4, "TNSR") == 0
                      ? decode_tnsr(bytes)
                      : csv_to_tensor(parse_csv_matrix(bytes).values);
  if (require_nonnegative) {
    const Index bad = t.first_negative();
    if (bad >= 0)
      throw DataError(path.string() + ": negative entry " + format_double(t.data()[bad]) +
                          " at index " + multi_index(t.dims(), bad),
                      bad);
  }
  return t;
}

CsvMatrix parse_csv_matrix(std::string_view text) {
  CsvMatrix out;
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (cols < 0 && rows == 0 && out.header.empty()) {
      double probe = 0.0;
      if (!parse_number(fields.front(), probe)) {
        for (auto f : fields) out.header.emplace_back(f);
        continue;
      }
    }
    if (cols < 0) cols = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != cols)
      throw FormatError("CSV: line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(cols),
                        line_no);
    for (auto f : fields) {
      double v = 0.0;
      if (!parse_number(f, v))
        throw FormatError("CSV: line " + std::to_string(line_no) + ": '" + std::string(f) +
                              "' is not a number",
                          line_no);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("CSV: no data rows", line_no);
  out.values.resize(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      out.values(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return out;
}

CsvMatrix read_csv_matrix(const fs::path& path) { return parse_csv_matrix(read_file(path)); }

std::string format_csv_matrix(const DenseMatrix& m, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j > 0) out += ',';
    out += header[j];
  }
  if (!header.empty()) out += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

DenseTensor csv_to_tensor(const DenseMatrix& rows) {
  const DenseMatrix cols = rows.transpose();
  return DenseTensor({cols.rows(), cols.cols()},
                     Eigen::Map<const DenseVector>(cols.data(), cols.size()));
}

DenseMatrix tensor_to_rows(const DenseTensor& t) {
  if (t.order() == 1) return t.data();
  return unfold(t, t.order() - 1);
}

LabelVector read_labels(const fs::path& path) {
  const CsvMatrix csv = read_csv_matrix(path);
  if (csv.values.cols() != 1) throw FormatError("labels: expected one column", 1);
  LabelVector labels;
  for (Index i = 0; i < csv.values.rows(); ++i) {
    const double v = csv.values(i, 0);
    if (v < 0.0 || v != static_cast<double>(static_cast<int>(v)))
      throw FormatError("labels: row " + std::to_string(i) + " is not a non-negative integer",
                        static_cast<std::uint64_t>(i));
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

namespace {

bool has_magic(const fs::path& path, std::uint32_t magic) {
  std::ifstream in(path, std::ios::binary);
  char head[4] = {};
  if (!in.read(head, 4)) return false;
  return get_u32_be(std::string_view(head, 4), 0) == magic;
}

}  // namespace

bool is_idx_images(const fs::path& path) { return has_magic(path, 0x00000803); }

bool is_idx_labels(const fs::path& path) { return has_magic(path, 0x00000801); }

IdxDataset import_idx(const fs::path& images_path, const fs::path& labels_path, Index limit,
                      std::uint64_t seed) {
  const std::string img = read_file(images_path);
  if (img.size() < 16) throw TruncationError("IDX images: header truncated", img.size());
  if (get_u32_be(img, 0) != 0x00000803) throw FormatError("IDX images: bad magic", 0);
  const Index count = get_u32_be(img, 4);
  const Index rows = get_u32_be(img, 8);
  const Index cols = get_u32_be(img, 12);
  if (rows < 1 || cols < 1) throw FormatError("IDX images: zero image extent", 8);
  const std::size_t pixels = static_cast<std::size_t>(rows * cols);
  if (img.size() != 16 + pixels * static_cast<std::size_t>(count))
    throw TruncationError("IDX images: payload does not match the declared count",
                          std::min<std::size_t>(img.size(), 16 + pixels * static_cast<std::size_t>(count)));

  std::string lab;
  if (!labels_path.empty()) {
    lab = read_file(labels_path);
    if (lab.size() < 8) throw TruncationError("IDX labels: header truncated", lab.size());
    if (get_u32_be(lab, 0) != 0x00000801) throw FormatError("IDX labels: bad magic", 0);
    const Index label_count = get_u32_be(lab, 4);
    if (label_count != count)
      throw FormatError("IDX labels: " + std::to_string(label_count) + " labels for " +
                            std::to_string(count) + " images",
                        4);
    if (lab.size() != 8 + static_cast<std::size_t>(count))
      throw TruncationError("IDX labels: payload does not match the declared count", lab.size());
  }

  if (limit <= 0) limit = count;
  if (limit > count)
    throw InvalidArgument("import_idx: limit " + std::to_string(limit) + " outside [1, " +
                          std::to_string(count) + "]");
  std::vector<Index> keep(static_cast<std::size_t>(count));
  std::iota(keep.begin(), keep.end(), Index{0});
  if (limit < count) {
    Rng rng(seed);
    for (Index i = 0; i < limit; ++i) {
      const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(count - i)));
      std::swap(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    keep.resize(static_cast<std::size_t>(limit));
    std::sort(keep.begin(), keep.end());
  }

  IdxDataset out;
  out.images = DenseTensor({rows, cols, limit});
  for (Index s = 0; s < limit; ++s) {
    const std::size_t base = 16 + pixels * static_cast<std::size_t>(keep[static_cast<std::size_t>(s)]);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c)
        out.images({r, c, s}) =
            static_cast<unsigned char>(img[base + static_cast<std::size_t>(r * cols + c)]) / 255.0;
    if (!lab.empty())
      out.labels.push_back(static_cast<unsigned char>(lab[8 + static_cast<std::size_t>(keep[static_cast<std::size_t>(s)])]));
  }
  return out;
}

}  // namespace hyperntf
