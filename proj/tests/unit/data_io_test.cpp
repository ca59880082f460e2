#include "pipadmm/data_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pipadmm/error.hpp"
#include "test_support.hpp"

namespace pipadmm {
namespace {

Dataset parse_libsvm(const std::string& text, std::optional<std::size_t> hint = std::nullopt) {
  std::istringstream in(text);
  return read_libsvm(in, hint);
}

Dataset parse_csv(const std::string& text, bool header, std::size_t label) {
  std::istringstream in(text);
  return read_csv(in, header, label);
}

std::vector<double> dense_row(const Dataset& d, std::size_t i) {
  std::vector<double> row(d.cols(), 0.0);
  d.matrix.for_each_in_row(i, [&row](std::size_t j, double v) { row[j] = v; });
  return row;
}

// ---------------------------------------------------------------------------
// LIBSVM
// ---------------------------------------------------------------------------

TEST(Libsvm, SingleRow) {
  const auto d = parse_libsvm("+1 3:1.5 7:2\n");
  ASSERT_EQ(d.rows(), 1u);
  EXPECT_EQ(d.cols(), 7u);
  EXPECT_TRUE(d.matrix.is_sparse());
  EXPECT_EQ(d.response, std::vector<double>{1.0});
  EXPECT_EQ(dense_row(d, 0), (std::vector<double>{0, 0, 1.5, 0, 0, 0, 2.0}));
  EXPECT_EQ(d.matrix.nnz(), 2u);
}

TEST(Libsvm, EmptyFeatureList) {
  const auto d = parse_libsvm("-1\n+1 2:4\n", 5);
  ASSERT_EQ(d.rows(), 2u);
  EXPECT_EQ(d.cols(), 5u);
  EXPECT_EQ(d.response, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(dense_row(d, 0), std::vector<double>(5, 0.0));
}

TEST(Libsvm, CommentsBlankLinesAndCrlf) {
  const auto d = parse_libsvm("# header\n\n1 1:1 # trailing\r\n\n0.5 2:-3e-2\n");
  ASSERT_EQ(d.rows(), 2u);
  EXPECT_EQ(d.response, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(dense_row(d, 1), (std::vector<double>{0.0, -0.03}));
}

void expect_parse_error_at_line(const std::string& text, std::size_t line) {
  try {
    (void)parse_libsvm(text);
    FAIL() << "no error for: " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos) << e.what();
  }
}

TEST(Libsvm, Errors) {
  expect_parse_error_at_line("1 1:1\n1 0:2\n", 2);
  expect_parse_error_at_line("1 3:1 2:1\n", 1);
  expect_parse_error_at_line("1 1:1\n\n1 2:1 2:3\n", 3);
  expect_parse_error_at_line("abc 1:1\n", 1);
  expect_parse_error_at_line("1 x:1\n", 1);
  expect_parse_error_at_line("1 1:y\n", 1);
  expect_parse_error_at_line("1 1\n", 1);
  EXPECT_THROW(read_libsvm_file("/nonexistent/file.svm"), Error);
}

TEST(Libsvm, RoundTripRandomSparse) {
  std::mt19937_64 gen(41);
  const auto a = testing::random_csr(gen, 50, 30, 0.1);
  const auto b = testing::random_vector(gen, 50, -5, 5);
  const auto original = testing::make_dataset(Matrix(a), b);
  std::ostringstream out;
  write_libsvm(out, original);
  const auto back = parse_libsvm(out.str(), 30);
  ASSERT_EQ(back.rows(), 50u);
  ASSERT_EQ(back.cols(), 30u);
  EXPECT_EQ(back.response, b);
  const auto& s = back.matrix.sparse();
  EXPECT_EQ(s.row_ptr(), a.row_ptr());
  EXPECT_EQ(s.col_idx(), a.col_idx());
  EXPECT_EQ(s.values(), a.values());
}

TEST(Libsvm, WritesDenseNonzeros) {
  DenseMatrix a(2, 3, {0.0, 1.25, 0.0, -1.0, 0.0, 3.0});
  std::ostringstream out;
  write_libsvm(out, testing::make_dataset(Matrix(a), {1.0, -1.0}));
  EXPECT_EQ(out.str(), "1 2:1.25\n-1 1:-1 3:3\n");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

TEST(Csv, LabelColumnExtracted) {
  const auto d = parse_csv("1,2,3\n4,5,6\n", false, 1);
  ASSERT_EQ(d.rows(), 2u);
  ASSERT_EQ(d.cols(), 2u);
  EXPECT_FALSE(d.matrix.is_sparse());
  EXPECT_EQ(d.response, (std::vector<double>{2.0, 5.0}));
  EXPECT_EQ(dense_row(d, 0), (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(dense_row(d, 1), (std::vector<double>{4.0, 6.0}));
}

TEST(Csv, HeaderSkipped) {
  const auto d = parse_csv("y,a,b\n1,2,3\n", true, 0);
  ASSERT_EQ(d.rows(), 1u);
  EXPECT_EQ(d.response, std::vector<double>{1.0});
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(Csv, Errors) {
  try {
    (void)parse_csv("1,2,3\n4,5\n", false, 0);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    (void)parse_csv("h1,h2\n1,2\n3,oops\n", true, 0);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(parse_csv("1,2\n", false, 5), Error);
}

TEST(Csv, RoundTrip) {
  std::mt19937_64 gen(42);
  const auto a = testing::random_dense(gen, 20, 4);
  const auto b = testing::random_vector(gen, 20);
  const auto original = testing::make_dataset(Matrix(a), b);
  std::ostringstream out;
  write_csv(out, original, true);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "label,x1,x2,x3,x4");
  const auto back = parse_csv(out.str(), true, 0);
  ASSERT_EQ(back.rows(), 20u);
  ASSERT_EQ(back.cols(), 4u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(back.response[i], b[i], 1e-12);
    const auto row = dense_row(back, i);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(row[j], a(i, j), 1e-12);
  }
}

TEST(Numbers, FormatAndParse) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 123456789.0, 0.0}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(parse_double("+1"), 1.0);
  EXPECT_FALSE(parse_double("+-1").has_value());
  EXPECT_FALSE(parse_double("1.0x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.96), 0.97500210485177952, 1e-12);
  EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316300946, 1e-12);
}

TEST(Synthetic, Deterministic) {
  const auto a = gen_synthetic(7, 40, 25);
  const auto b = gen_synthetic(7, 40, 25);
  const auto c = gen_synthetic(8, 40, 25);
  EXPECT_EQ(a.dataset.response, b.dataset.response);
  EXPECT_EQ(a.dataset.matrix.dense().values(), b.dataset.matrix.dense().values());
  EXPECT_NE(a.dataset.response, c.dataset.response);
  EXPECT_EQ(a.true_support, (std::vector<std::size_t>{5, 11, 14, 19}));
  EXPECT_THROW(gen_synthetic(1, 10, 19), ArgumentError);
  EXPECT_THROW(gen_synthetic(1, 0, 30), ArgumentError);
}

class SyntheticMoments : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new SyntheticData(gen_synthetic(2025, kM, kP)); }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }
  static constexpr std::size_t kM = 5000;
  static constexpr std::size_t kP = 30;
  static SyntheticData* data_;

  static double mean(std::size_t j) {
    const auto& a = data_->dataset.matrix.dense();
    double s = 0.0;
    for (std::size_t i = 0; i < kM; ++i) s += a(i, j);
    return s / kM;
  }
  static double corr(std::size_t j, std::size_t k) {
    const auto& a = data_->dataset.matrix.dense();
    const double mj = mean(j), mk = mean(k);
    double sjk = 0.0, sjj = 0.0, skk = 0.0;
    for (std::size_t i = 0; i < kM; ++i) {
      const double dj = a(i, j) - mj, dk = a(i, k) - mk;
      sjk += dj * dk;
      sjj += dj * dj;
      skk += dk * dk;
    }
    return sjk / std::sqrt(sjj * skk);
  }
};
SyntheticData* SyntheticMoments::data_ = nullptr;

TEST_F(SyntheticMoments, FirstColumnIsUniform) {
  const auto& a = data_->dataset.matrix.dense();
  for (std::size_t i = 0; i < kM; ++i) {
    ASSERT_GT(a(i, 0), 0.0);
    ASSERT_LT(a(i, 0), 1.0);
  }
  // Uniform(0,1): sd 1/sqrt(12).
  EXPECT_NEAR(mean(0), 0.5, 3.0 * std::sqrt(1.0 / 12.0) / std::sqrt(double(kM)));
}

TEST_F(SyntheticMoments, ColumnMeansNearZero) {
  for (std::size_t j = 1; j < kP; ++j) EXPECT_NEAR(mean(j), 0.0, 3.0 / std::sqrt(double(kM))) << j;
}

TEST_F(SyntheticMoments, ArOneCorrelation) {
  EXPECT_NEAR(corr(1, 2), 0.5, 0.05);
  EXPECT_NEAR(corr(10, 11), 0.5, 0.05);
  EXPECT_NEAR(corr(10, 12), 0.25, 0.05);
  EXPECT_NEAR(corr(3, 20), 0.0, 0.05);
}

TEST_F(SyntheticMoments, ResponseFollowsModel) {
  const auto& a = data_->dataset.matrix.dense();
  const auto& y = data_->dataset.response;
  // Recover eps per row and check it is standard normal.
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < kM; ++i) {
    const double signal = a(i, 5) + a(i, 11) + a(i, 14) + a(i, 19);
    const double eps = (y[i] - signal) / (0.7 * a(i, 0));
    s += eps;
    ss += eps * eps;
  }
  const double m = s / kM;
  EXPECT_NEAR(m, 0.0, 3.0 / std::sqrt(double(kM)));
  EXPECT_NEAR(ss / kM - m * m, 1.0, 0.06);
}

// ---------------------------------------------------------------------------
// Partitioning and helpers
// ---------------------------------------------------------------------------

TEST(Partition, RemainderRule) {
  EXPECT_EQ(partition_sizes(10, 3), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(partition_sizes(10, 1), std::vector<std::size_t>{10});
  EXPECT_EQ(partition_sizes(7, 7), std::vector<std::size_t>(7, 1));
  EXPECT_THROW(partition_sizes(3, 4), ArgumentError);
  EXPECT_THROW(partition_sizes(3, 0), ArgumentError);
}

TEST(Partition, ConcatenationIsIdentity) {
  std::mt19937_64 gen(43);
  const auto data = testing::make_dataset(Matrix(testing::random_csr(gen, 23, 9, 0.3)),
                                          testing::random_vector(gen, 23));
  for (int d = 1; d <= 23; ++d) {
    const auto shards = partition(data, d);
    ASSERT_EQ(shards.size(), static_cast<std::size_t>(d));
    std::size_t row = 0;
    for (std::size_t k = 0; k < shards.size(); ++k) {
      EXPECT_EQ(shards[k].index, static_cast<int>(k + 1));
      for (std::size_t i = 0; i < shards[k].rows(); ++i, ++row) {
        EXPECT_EQ(shards[k].response[i], data.response[row]);
        std::vector<double> got(9, 0.0);
        shards[k].matrix.for_each_in_row(i, [&got](std::size_t j, double v) { got[j] = v; });
        ASSERT_EQ(got, dense_row(data, row)) << "D=" << d << " row " << row;
      }
    }
    EXPECT_EQ(row, 23u);
  }
}

TEST(Helpers, InterceptSelectAndSample) {
  DenseMatrix a(3, 2, {1, 2, 3, 4, 5, 6});
  const auto data = testing::make_dataset(Matrix(a), {10, 20, 30});
  const auto wi = with_intercept(data);
  ASSERT_EQ(wi.cols(), 3u);
  EXPECT_EQ(dense_row(wi, 1), (std::vector<double>{1, 3, 4}));
  const auto sel = select_rows(data, {2, 0});
  EXPECT_EQ(sel.response, (std::vector<double>{30, 10}));
  EXPECT_EQ(dense_row(sel, 0), (std::vector<double>{5, 6}));
  const auto all = sample_rows(data, 10, 1);
  EXPECT_EQ(all.response, data.response);
  const auto two = sample_rows(data, 2, 5);
  ASSERT_EQ(two.rows(), 2u);
  EXPECT_LT(two.response[0], two.response[1]);
  EXPECT_EQ(sample_rows(data, 2, 5).response, two.response);
}

TEST(Helpers, PreferredStorage) {
  CsrMatrix dense_like(2);
  const std::vector<std::uint32_t> idx{0, 1};
  const std::vector<double> val{1.0, 2.0};
  dense_like.push_row(idx, val);
  const auto d = with_preferred_storage(testing::make_dataset(Matrix(dense_like), {1.0}));
  EXPECT_FALSE(d.matrix.is_sparse());
  EXPECT_EQ(dense_row(d, 0), (std::vector<double>{1.0, 2.0}));
}

TEST(Files, ReadFromDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "pipadmm_data_io_test";
  std::filesystem::create_directories(dir);
  const auto svm = dir / "a.svm";
  const auto csv = dir / "a.csv";
  std::ofstream(svm) << "1 1:2\n-1 2:3\n";
  std::ofstream(csv) << "y,a\n1,2\n";
  EXPECT_EQ(read_libsvm_file(svm.string()).rows(), 2u);
  EXPECT_EQ(read_csv_file(csv.string(), true, 0).response, std::vector<double>{1.0});
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace pipadmm
