#include "htsgd/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

constexpr std::string_view kMagic = "htsgd-checkpoint";
constexpr int kVersion = 1;

std::string expect_field(std::istream& in, std::string_view key, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint truncated before '" + std::string(key) + "'", line_no + 1);
  ++line_no;
  const auto fields = split(trim(line), ' ');
  if (fields.size() != 2 || fields[0] != key) {
    throw ParseError("checkpoint expected '" + std::string(key) + " <value>'", line_no);
  }
  return fields[1];
}

std::size_t parse_count(const std::string& text, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError("checkpoint expected a non-negative integer, got '" + text + "'", line_no);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const NetworkParams& params) {
  const auto& s = params.shape();
  out << kMagic << ' ' << kVersion << '\n';
  out << "n " << s.n << '\n' << "d " << s.d << '\n' << "l " << s.l << '\n';
  out << "bias " << (s.bias ? 1 : 0) << '\n';
  out << "mode " << to_string(s.mode) << '\n';
  out << "activation " << to_string(s.activation) << '\n';
  out << "data\n";
  const auto& theta = params.theta();
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index r = 0; r < theta.rows(); ++r) {
      if (r) out << ' ';
      out << format_double(theta(r, j));
    }
    out << '\n';
  }
}

NetworkParams read_checkpoint(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint", 1);
  ++line_no;
  {
    const auto fields = split(trim(line), ' ');
    if (fields.size() != 2 || fields[0] != kMagic) throw ParseError("not an htsgd checkpoint", line_no);
    if (fields[1] != std::to_string(kVersion)) throw ParseError("unsupported checkpoint version " + fields[1], line_no);
  }
  NetworkShape shape;
  shape.n = parse_count(expect_field(in, "n", line_no), line_no);
  shape.d = parse_count(expect_field(in, "d", line_no), line_no);
  shape.l = parse_count(expect_field(in, "l", line_no), line_no);
  const auto bias = expect_field(in, "bias", line_no);
  if (bias != "0" && bias != "1") throw ParseError("bias must be 0 or 1", line_no);
  shape.bias = bias == "1";
  try {
    shape.mode = parse_second_layer(expect_field(in, "mode", line_no));
    shape.activation = parse_activation(expect_field(in, "activation", line_no));
    shape.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what(), line_no);
  }
  if (!std::getline(in, line) || trim(line) != "data") throw ParseError("checkpoint expected 'data'", line_no + 1);
  ++line_no;

  const auto p = static_cast<Eigen::Index>(shape.unit_dim());
  Eigen::MatrixXd theta(p, static_cast<Eigen::Index>(shape.n));
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated: missing unit columns", line_no + 1);
    ++line_no;
    const auto fields = split(trim(line), ' ');
    if (static_cast<Eigen::Index>(fields.size()) != p) {
      throw ParseError("checkpoint column has " + std::to_string(fields.size()) + " values, expected " +
                           std::to_string(p),
                       line_no);
    }
    for (Eigen::Index r = 0; r < p; ++r) {
      try {
        theta(r, j) = parse_double(fields[static_cast<std::size_t>(r)]);
      } catch (const DomainError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
  }
  return NetworkParams(shape, std::move(theta));
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, params);
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace htsgd
