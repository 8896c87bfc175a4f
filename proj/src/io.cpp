#include "fdsense/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "fdsense/errors.hpp"

namespace fdsense::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::string where(const std::filesystem::path& path, std::size_t line, std::size_t col) {
  std::ostringstream os;
  os << path.string() << ": line " << line << ", column " << col;
  return os.str();
}

double parse_cell(std::string_view cell, const std::filesystem::path& path, std::size_t line, std::size_t col,
                  const std::string& name) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw InputError(where(path, line, col) + " (" + name + "): non-numeric cell '" + std::string(cell) + "'");
  }
  if (!std::isfinite(v)) {
    throw InputError(where(path, line, col) + " (" + name + "): non-finite cell '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");

  std::string header_line;
  if (!std::getline(in, header_line)) throw InputError(path.string() + ": empty file (missing header row)");
  if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) header_line.erase(0, 3);
  const char delim = header_line.find('\t') != std::string::npos ? '\t' : ',';

  Table t;
  for (auto h : split(header_line, delim)) t.header.emplace_back(h);
  const std::size_t cols = t.header.size();
  for (std::size_t c = 0; c < cols; ++c) {
    if (t.header[c].empty()) throw InputError(where(path, 1, c + 1) + ": empty column name");
  }

  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delim);
    if (cells.size() != cols) {
      throw InputError(where(path, line_no, std::min(cells.size(), cols) + 1) + ": ragged row, expected " +
                       std::to_string(cols) + " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) data.push_back(parse_cell(cells[c], path, line_no, c + 1, t.header[c]));
    ++rows;
  }
  if (rows == 0) throw InputError(path.string() + ": empty body (header only)");

  t.values = Eigen::Map<const RowMatrix>(data.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
  return t;
}

SampleSet load_samples(const std::filesystem::path& path, SampleOrigin origin) {
  Table t = read_table(path);
  std::optional<std::size_t> chain_col;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == "chain") {
      if (chain_col) throw InputError(path.string() + ": more than one 'chain' column");
      chain_col = c;
    }
  }
  if (!chain_col) return SampleSet(std::move(t.values), origin);

  const auto cc = static_cast<Eigen::Index>(*chain_col);
  const Eigen::Index m = t.values.rows();
  const Eigen::Index d = t.values.cols() - 1;
  if (d == 0) throw InputError(path.string() + ": no parameter columns besides 'chain'");
  std::vector<int> ids(static_cast<std::size_t>(m));
  RowMatrix draws(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double id = t.values(i, cc);
    if (id != std::floor(id) || std::abs(id) > 1e9) {
      throw InputError(where(path, static_cast<std::size_t>(i) + 2, *chain_col + 1) +
                       " (chain): chain id must be an integer");
    }
    ids[static_cast<std::size_t>(i)] = static_cast<int>(id);
    Eigen::Index k = 0;
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      if (c != cc) draws(i, k++) = t.values(i, c);
    }
  }
  return SampleSet(std::move(draws), origin, std::move(ids));
}

PrecomputedScores load_score_matrix(const std::filesystem::path& path, std::size_t expected_m,
                                    std::size_t expected_d) {
  Table t = read_table(path);
  const auto m = static_cast<std::size_t>(t.values.rows());
  const auto d = static_cast<std::size_t>(t.values.cols());
  if (m != expected_m) {
    throw InputError(path.string() + ": expected m=" + std::to_string(expected_m) + ", found " + std::to_string(m));
  }
  if (d != expected_d) {
    throw InputError(path.string() + ": expected d=" + std::to_string(expected_d) + ", found " + std::to_string(d));
  }
  return PrecomputedScores(std::move(t.values), path.filename().string());
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw InputError("cannot format number");
  return std::string(buf.data(), ptr);
}

void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& header, const RowMatrix& values) {
  if (header.size() != static_cast<std::size_t>(values.cols())) {
    throw ContractError("write_matrix: header has " + std::to_string(header.size()) + " names for " +
                        std::to_string(values.cols()) + " columns");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(i, c));
    out << '\n';
  }
  if (!out) throw InputError(path.string() + ": write failed");
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw InputError("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 0xF]);
  }
  return out;
}

}  // namespace fdsense::io
