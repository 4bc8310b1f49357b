#include "locem/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace locem {

Dataset::Dataset(Matrix points, std::vector<std::uint32_t> labels, std::uint32_t num_classes)
    : points_(std::move(points)), labels_(std::move(labels)), num_classes_(num_classes) {
  if (static_cast<std::size_t>(points_.rows()) != labels_.size())
    throw std::invalid_argument("dataset: row count does not match label count");
  if (num_classes_ == 0 && !labels_.empty())
    throw std::invalid_argument("dataset: num_classes must be positive");
  for (std::uint32_t y : labels_)
    if (y >= num_classes_) throw std::invalid_argument("dataset: label out of range");
  if (!points_.allFinite()) throw std::invalid_argument("dataset: non-finite feature value");
}

Dataset Dataset::subset(const std::vector<std::uint32_t>& rows) const {
  Matrix pts(rows.size(), points_.cols());
  std::vector<std::uint32_t> labs(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw std::invalid_argument("subset: row index out of range");
    pts.row(static_cast<Eigen::Index>(i)) = points_.row(rows[i]);
    labs[i] = labels_[rows[i]];
  }
  return Dataset(std::move(pts), std::move(labs), num_classes_);
}

namespace {

bool looks_numeric(const std::string& tok) {
  char* end = nullptr;
  std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::uint32_t> labels;
  std::string line;
  bool first = true;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto toks = split_csv_line(line);
    if (first) {
      first = false;
      if (!looks_numeric(toks.front())) continue;  // header
    }
    if (toks.size() < 2) throw IoError("dataset csv: need at least one feature and a label");
    if (dim == 0) dim = toks.size() - 1;
    if (toks.size() != dim + 1) throw IoError("dataset csv: inconsistent column count");
    std::vector<double> feats(dim);
    for (std::size_t j = 0; j < dim; ++j) feats[j] = std::stod(toks[j]);
    double lab = std::stod(toks[dim]);
    if (lab < 0 || lab != std::floor(lab)) throw IoError("dataset csv: label must be a nonnegative integer");
    rows.push_back(std::move(feats));
    labels.push_back(static_cast<std::uint32_t>(lab));
  }
  Matrix pts(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  std::uint32_t classes = 0;
  for (std::uint32_t y : labels) classes = std::max(classes, y + 1);
  if (classes == 0) classes = 1;
  return Dataset(std::move(pts), std::move(labels), classes);
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j)
      out << data.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << ',';
    out << data.label(i) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("dataset binary: truncated file");
  return v;
}

}  // namespace

void save_dataset_binary(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  write_raw(out, static_cast<std::uint32_t>(data.size()));
  write_raw(out, static_cast<std::uint32_t>(data.dim()));
  write_raw(out, data.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j)
      write_raw(out, data.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (std::uint32_t y : data.labels()) write_raw(out, y);
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  auto n = read_raw<std::uint32_t>(in);
  auto d = read_raw<std::uint32_t>(in);
  auto classes = read_raw<std::uint32_t>(in);
  Matrix pts(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) pts(i, j) = read_raw<double>(in);
  std::vector<std::uint32_t> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) labels[i] = read_raw<std::uint32_t>(in);
  return Dataset(std::move(pts), std::move(labels), classes);
}

Dataset load_dataset(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin") return load_dataset_binary(path);
  return load_dataset_csv(path);
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  std::uint32_t n = static_cast<std::uint32_t>(data.size());
  std::uint32_t d = static_cast<std::uint32_t>(data.dim());
  mix(&n, sizeof n);
  mix(&d, sizeof d);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) {
      double v = data.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      mix(&v, sizeof v);
    }
  for (std::uint32_t y : data.labels()) mix(&y, sizeof y);
  return h;
}

}  // namespace locem
