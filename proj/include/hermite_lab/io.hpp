#pragma once

#include "kernels.hpp"
#include "operators.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

namespace fs = std::filesystem;

// shortest round-trip text for a double; inf/nan spelled out
inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- RFC 4180 CSV -----------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\r\n";
}

// parse a whole RFC 4180 document
inline std::vector<std::vector<std::string>> csv_parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::runtime_error("csv_parse: unterminated quote");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

// ---- checksums --------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

inline std::string file_checksum(const fs::path& p) { return "fnv1a64:" + hex64(fnv1a64(read_file(p))); }

// ---- kernel fields: little-endian float64 + JSON sidecar ---------------------

namespace detail {

inline void put_f64(std::string& buf, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
}

inline double get_f64(const std::string& buf, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= std::uint64_t(static_cast<unsigned char>(buf[pos + k])) << (8 * k);
  return std::bit_cast<double>(bits);
}

inline nlohmann::json grid_json(const GridSpec& g) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : g.axes) axes.push_back({{"nodes", a.x}, {"weights", a.w}});
  return {{"d", g.d}, {"rule", to_string(g.rule)}, {"box_lo", g.box.lo}, {"box_hi", g.box.hi},
          {"resolution", g.resolution()}, {"axes", axes}, {"layout", "axis 0 fastest"}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  std::vector<Rule> axes;
  for (const auto& a : j.at("axes")) {
    Rule r;
    r.x = a.at("nodes").get<std::vector<double>>();
    r.w = a.at("weights").get<std::vector<double>>();
    axes.push_back(std::move(r));
  }
  GridSpec g = grid_from_axes(std::move(axes));
  g.box.lo = j.at("box_lo").get<std::vector<double>>();
  g.box.hi = j.at("box_hi").get<std::vector<double>>();
  return g;
}

}  // namespace detail

struct KernelField {
  double lambda = 0;
  int d = 0;
  std::string method, label;
  bool complex_values = false;
  GridSpec out, in;
  Eigen::MatrixXcd values;  // (out index, in index)
  cd branch = 1.0;
};

// base.bin holds values with the out index fastest (re, im interleaved when complex); base.json describes it
inline void write_kernel_field(const fs::path& base, const KernelField& f) {
  std::string buf;
  buf.reserve(static_cast<std::size_t>(f.values.size()) * (f.complex_values ? 16 : 8));
  for (Eigen::Index j = 0; j < f.values.cols(); ++j)
    for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
      detail::put_f64(buf, f.values(i, j).real());
      if (f.complex_values) detail::put_f64(buf, f.values(i, j).imag());
    }
  fs::path bin = base;
  bin += ".bin";
  fs::path side = base;
  side += ".json";
  write_file(bin, buf);
  nlohmann::json j{{"lambda", f.lambda},
                   {"d", f.d},
                   {"method", f.method},
                   {"label", f.label},
                   {"value_type", f.complex_values ? "complex128 (re, im)" : "float64"},
                   {"byte_order", "little"},
                   {"shape", {f.values.rows(), f.values.cols()}},
                   {"index_order", "out fastest"},
                   {"grid_out", detail::grid_json(f.out)},
                   {"grid_in", detail::grid_json(f.in)},
                   {"branch_constant", {f.branch.real(), f.branch.imag()}},
                   {"data_file", bin.filename().string()},
                   {"checksum", "fnv1a64:" + hex64(fnv1a64(buf))}};
  write_file(side, j.dump(2) + "\n");
}

inline KernelField read_kernel_field(const fs::path& base) {
  fs::path side = base;
  side += ".json";
  auto j = nlohmann::json::parse(read_file(side));
  KernelField f;
  f.lambda = j.at("lambda");
  f.d = j.at("d");
  f.method = j.at("method");
  f.label = j.at("label");
  f.complex_values = j.at("value_type").get<std::string>().rfind("complex", 0) == 0;
  f.out = detail::grid_from_json(j.at("grid_out"));
  f.in = detail::grid_from_json(j.at("grid_in"));
  f.branch = cd(j.at("branch_constant")[0].get<double>(), j.at("branch_constant")[1].get<double>());
  std::string buf = read_file(base.parent_path() / j.at("data_file").get<std::string>());
  const Eigen::Index r = j.at("shape")[0], c = j.at("shape")[1];
  const std::size_t per = f.complex_values ? 16 : 8;
  if (buf.size() != static_cast<std::size_t>(r * c) * per) throw std::runtime_error("read_kernel_field: size mismatch");
  if ("fnv1a64:" + hex64(fnv1a64(buf)) != j.at("checksum").get<std::string>())
    throw std::runtime_error("read_kernel_field: checksum mismatch");
  f.values.resize(r, c);
  std::size_t pos = 0;
  for (Eigen::Index jj = 0; jj < c; ++jj)
    for (Eigen::Index i = 0; i < r; ++i) {
      double re = detail::get_f64(buf, pos);
      double im = f.complex_values ? detail::get_f64(buf, pos + 8) : 0.0;
      f.values(i, jj) = cd(re, im);
      pos += per;
    }
  return f;
}

inline KernelField sample_kernel_field(const KernelOracle& oracle, const GridSpec& out, const GridSpec& in) {
  KernelField f;
  f.lambda = oracle.lambda;
  f.d = oracle.d;
  f.method = to_string(oracle.method);
  f.label = oracle.label;
  f.complex_values = !oracle.real_valued();
  f.out = out;
  f.in = in;
  f.branch = oracle.d >= 1 && oracle.d <= 3 && !oracle.real_valued() ? branch_constant(oracle.d) : cd(1.0);
  f.values = assemble(oracle, in, out).kernel;
  return f;
}

}  // namespace hlab
