#include "pipadmm/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "pipadmm/error.hpp"

namespace pipadmm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

// Box-Muller on a 64-bit Mersenne twister; the pair's second value is cached.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * kScale;  // (0, 1]
    const double u2 = static_cast<double>(gen_() >> 11) * kScale;          // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::optional<double> parse_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') {
    token.remove_prefix(1);
    if (token.empty() || token.front() == '+' || token.front() == '-') return std::nullopt;
  }
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

Dataset read_libsvm(std::istream& in, std::optional<std::size_t> n_hint) {
  CsrMatrix csr(0);
  std::vector<double> labels;
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto fail = [&](const std::string& msg) -> ParseError {
      return ParseError("libsvm line " + std::to_string(line_no) + ": " + msg, line_no);
    };
    idx.clear();
    val.clear();
    std::size_t pos = 0;
    bool first = true;
    while (pos < view.size()) {
      while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t')) ++pos;
      if (pos >= view.size()) break;
      std::size_t end = pos;
      while (end < view.size() && view[end] != ' ' && view[end] != '\t') ++end;
      const std::string_view token = view.substr(pos, end - pos);
      pos = end;
      if (first) {
        const auto label = parse_double(token);
        if (!label || !std::isfinite(*label)) throw fail("non-numeric label '" + std::string(token) + "'");
        labels.push_back(*label);
        first = false;
        continue;
      }
      const auto colon = token.find(':');
      if (colon == std::string_view::npos) throw fail("expected idx:val, got '" + std::string(token) + "'");
      const std::string_view idx_text = token.substr(0, colon);
      std::uint64_t index = 0;
      const auto res = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      if (res.ec != std::errc() || res.ptr != idx_text.data() + idx_text.size()) {
        throw fail("non-numeric index '" + std::string(idx_text) + "'");
      }
      if (index == 0) throw fail("index 0 (indices are 1-based)");
      if (index > std::numeric_limits<std::uint32_t>::max()) throw fail("index too large");
      if (!idx.empty() && index - 1 <= idx.back()) throw fail("indices must be strictly increasing");
      const auto value = parse_double(token.substr(colon + 1));
      if (!value || !std::isfinite(*value)) throw fail("non-numeric value in '" + std::string(token) + "'");
      idx.push_back(static_cast<std::uint32_t>(index - 1));
      val.push_back(*value);
      max_index = std::max<std::size_t>(max_index, index);
    }
    if (max_index > csr.cols()) csr.set_cols(max_index);
    csr.push_row(idx, val);
  }
  if (in.bad()) throw Error("read_libsvm: stream error");
  if (n_hint && *n_hint > csr.cols()) csr.set_cols(*n_hint);
  Dataset out;
  out.matrix = std::move(csr);
  out.response = std::move(labels);
  return out;
}

Dataset read_libsvm_file(const std::string& path, std::optional<std::size_t> n_hint) {
  auto in = open_input(path);
  return read_libsvm(in, n_hint);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out << format_double(data.response[i]);
    if (data.matrix.is_sparse()) {
      const auto& s = data.matrix.sparse();
      const auto idx = s.row_indices(i);
      const auto val = s.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) out << ' ' << (idx[k] + 1) << ':' << format_double(val[k]);
    } else {
      const auto row = data.matrix.dense().row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] != 0.0) out << ' ' << (j + 1) << ':' << format_double(row[j]);
      }
    }
    out << '\n';
  }
  if (!out) throw Error("write_libsvm: stream error");
}

Dataset read_csv(std::istream& in, bool has_header, std::size_t label_column) {
  std::vector<double> values;
  std::vector<double> labels;
  std::vector<std::string> names;
  std::size_t width = 0;
  std::size_t row_no = 0;
  bool header_pending = has_header;
  std::string line;
  std::vector<std::string_view> cells;
  while (std::getline(in, line)) {
    ++row_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    cells.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      cells.push_back(trim(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) {
      width = cells.size();
      if (label_column >= width) {
        throw ParseError("csv row " + std::to_string(row_no) + ": label column " + std::to_string(label_column) +
                             " out of range for " + std::to_string(width) + " columns",
                         row_no, label_column + 1);
      }
    } else if (cells.size() != width) {
      throw ParseError("csv row " + std::to_string(row_no) + ": expected " + std::to_string(width) + " columns, got " +
                           std::to_string(cells.size()),
                       row_no, std::min(cells.size(), width) + 1);
    }
    if (header_pending) {
      header_pending = false;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c != label_column) names.emplace_back(cells[c]);
      }
      continue;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("csv row " + std::to_string(row_no) + " column " + std::to_string(c + 1) +
                             ": non-numeric cell '" + std::string(cells[c]) + "'",
                         row_no, c + 1);
      }
      if (c == label_column) {
        labels.push_back(*v);
      } else {
        values.push_back(*v);
      }
    }
  }
  if (in.bad()) throw Error("read_csv: stream error");
  Dataset out;
  const std::size_t n = width == 0 ? 0 : width - 1;
  out.matrix = DenseMatrix(labels.size(), n, std::move(values));
  out.response = std::move(labels);
  out.feature_names = std::move(names);
  return out;
}

Dataset read_csv_file(const std::string& path, bool has_header, std::size_t label_column) {
  auto in = open_input(path);
  return read_csv(in, has_header, label_column);
}

void write_csv(std::ostream& out, const Dataset& data, bool header) {
  const std::size_t n = data.cols();
  if (header) {
    out << "label";
    for (std::size_t j = 0; j < n; ++j) {
      out << ',' << (data.feature_names.size() == n ? data.feature_names[j] : "x" + std::to_string(j + 1));
    }
    out << '\n';
  }
  const DenseMatrix dense = data.matrix.to_dense();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out << format_double(data.response[i]);
    for (std::size_t j = 0; j < n; ++j) out << ',' << format_double(dense(i, j));
    out << '\n';
  }
  if (!out) throw Error("write_csv: stream error");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

SyntheticData gen_synthetic(std::uint64_t seed, std::size_t m, std::size_t p) {
  if (p < 20) throw ArgumentError("gen_synthetic: need p >= 20, got " + std::to_string(p));
  if (m < 1) throw ArgumentError("gen_synthetic: need m >= 1");
  NormalSource normal(seed);
  DenseMatrix x(m, p);
  std::vector<double> y(m);
  const double innovation = std::sqrt(0.75);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = x.row(i);
    double prev = normal.next();
    row[0] = prev;
    for (std::size_t j = 1; j < p; ++j) {
      prev = 0.5 * prev + innovation * normal.next();
      row[j] = prev;
    }
    row[0] = normal_cdf(row[0]);
    const double eps = normal.next();
    y[i] = row[5] + row[11] + row[14] + row[19] + 0.7 * row[0] * eps;
  }
  SyntheticData out;
  out.dataset.matrix = std::move(x);
  out.dataset.response = std::move(y);
  out.true_support = {5, 11, 14, 19};
  return out;
}

std::vector<std::size_t> partition_sizes(std::size_t m, int workers) {
  if (workers < 1) throw ArgumentError("partition: need at least one worker");
  const auto d = static_cast<std::size_t>(workers);
  if (d > m) throw ArgumentError("partition: " + std::to_string(d) + " workers for " + std::to_string(m) + " rows");
  std::vector<std::size_t> sizes(d, m / d);
  for (std::size_t k = 0; k < m % d; ++k) ++sizes[k];
  return sizes;
}

std::vector<DesignShard> partition(const Dataset& data, int workers) {
  if (data.response.size() != data.rows()) throw DimensionError("partition: response length differs from row count");
  const auto sizes = partition_sizes(data.rows(), workers);
  std::vector<DesignShard> shards;
  shards.reserve(sizes.size());
  std::size_t begin = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    DesignShard s;
    s.index = static_cast<int>(k + 1);
    s.matrix = data.matrix.slice_rows(begin, begin + sizes[k]);
    s.response.assign(data.response.begin() + static_cast<std::ptrdiff_t>(begin),
                      data.response.begin() + static_cast<std::ptrdiff_t>(begin + sizes[k]));
    shards.push_back(std::move(s));
    begin += sizes[k];
  }
  return shards;
}

Dataset with_intercept(const Dataset& data) {
  Dataset out;
  out.matrix = data.matrix.with_leading_ones();
  out.response = data.response;
  if (!data.feature_names.empty()) {
    out.feature_names.push_back("intercept");
    out.feature_names.insert(out.feature_names.end(), data.feature_names.begin(), data.feature_names.end());
  }
  return out;
}

Dataset with_preferred_storage(const Dataset& data) {
  Dataset out = data;
  out.matrix = data.matrix.with_preferred_storage();
  return out;
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  std::vector<Matrix> blocks;
  blocks.reserve(rows.size());
  Dataset out;
  for (std::size_t i : rows) {
    if (i >= data.rows()) throw ArgumentError("select_rows: row " + std::to_string(i) + " out of range");
    blocks.push_back(data.matrix.slice_rows(i, i + 1));
    out.response.push_back(data.response[i]);
  }
  out.matrix = blocks.empty() ? data.matrix.slice_rows(0, 0) : Matrix::vstack(blocks);
  out.feature_names = data.feature_names;
  return out;
}

Dataset sample_rows(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count >= data.rows()) return data;
  std::vector<std::size_t> all(data.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::mt19937_64 gen(seed);
  // Partial Fisher-Yates with our own index draw so the choice does not depend on the library's distributions.
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t span = all.size() - k;
    const std::size_t pick = k + static_cast<std::size_t>(gen() % span);
    std::swap(all[k], all[pick]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return select_rows(data, all);
}

}  // namespace pipadmm
