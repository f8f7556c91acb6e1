#include "hermite_lab/io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hlab_io_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Io, CsvQuotingRoundTrip) {
  std::vector<std::vector<std::string>> rows{{"plain", "with,comma", "quote\"inside"},
                                             {"multi\nline", "", "crlf\r\nend"},
                                             {"error: bad \"thing\", again", "inf", "-0.5"}};
  std::string doc;
  for (auto& r : rows) doc += csv_line(r);
  EXPECT_EQ(csv_field("a\"b"), "\"a\"\"b\"");
  EXPECT_EQ(csv_line({"x", "y"}), "x,y\r\n");
  EXPECT_EQ(csv_parse(doc), rows);
}

TEST(Io, NumberFormattingRoundTrips) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    double v = U(rng) * std::pow(10.0, i % 30 - 15);
    EXPECT_EQ(std::stod(fmt(v)), v);
  }
  EXPECT_EQ(fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Io, Float64IsLittleEndian) {
  std::string buf;
  detail::put_f64(buf, 1.0);
  // 1.0 = 0x3FF0000000000000
  const unsigned char want[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  ASSERT_EQ(buf.size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(static_cast<unsigned char>(buf[k]), want[k]) << k;
  EXPECT_EQ(detail::get_f64(buf, 0), 1.0);
}

TEST(Io, Fnv1aReferenceValues) {
  // published FNV-1a 64 test vectors
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, KernelFieldRoundTrip) {
  auto dir = scratch("kf");
  auto g = make_grid(Box::cube(2, -3, 3), 5);
  auto h = make_grid(Box::cube(2, -2, 4), 4, RuleKind::gauss_legendre);
  auto f = sample_kernel_field(direct_oracle(10, 2), h, g);
  EXPECT_FALSE(f.complex_values);
  EXPECT_EQ(f.values.rows(), 16);
  EXPECT_EQ(f.values.cols(), 25);
  EXPECT_NEAR(f.values(3, 7).real(), projection_direct(10, h.node(3), g.node(7)), 1e-15);
  write_kernel_field(dir / "k", f);
  EXPECT_EQ(fs::file_size(dir / "k.bin"), 16u * 25u * 8u);
  auto back = read_kernel_field(dir / "k");
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(back.in.size(), g.size());
  EXPECT_EQ(back.out.weights, h.weights);
  auto side = nlohmann::json::parse(read_file(dir / "k.json"));
  EXPECT_EQ(side.at("byte_order"), "little");
  EXPECT_EQ(side.at("value_type"), "float64");
  fs::remove_all(dir);
}

TEST(Io, ComplexFieldAndChecksumMismatch) {
  auto dir = scratch("cx");
  KernelField f;
  f.lambda = 6;
  f.d = 2;
  f.method = "custom";
  f.label = "t";
  f.complex_values = true;
  f.out = f.in = make_grid(Box::cube(2, 0, 1), 2);
  f.values = Eigen::MatrixXcd::Random(4, 4);
  write_kernel_field(dir / "c", f);
  EXPECT_EQ(fs::file_size(dir / "c.bin"), 4u * 4u * 16u);
  EXPECT_EQ(read_kernel_field(dir / "c").values, f.values);
  // flip one byte
  std::string bin = read_file(dir / "c.bin");
  bin[5] ^= 1;
  write_file(dir / "c.bin", bin);
  EXPECT_THROW(read_kernel_field(dir / "c"), std::runtime_error);
  write_file(dir / "c.bin", bin.substr(8));
  EXPECT_THROW(read_kernel_field(dir / "c"), std::runtime_error);
  fs::remove_all(dir);
}
