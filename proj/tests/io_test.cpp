#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "mlra/io.hpp"
#include "support.hpp"

namespace mlra {
namespace {

namespace fs = std::filesystem;

class IoFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mlra_io_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(IoFiles, MatrixRoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  const auto a = testing::random_matrix(7, 5, rng);
  io::write_matrix(path("a.mlra"), a);
  EXPECT_EQ(io::read_matrix(path("a.mlra")), a);
  EXPECT_EQ(fs::file_size(path("a.mlra")), 5u + 16u + 35u * 8u);
}

TEST_F(IoFiles, MatrixLayoutIsLittleEndian) {
  io::write_matrix(path("one.mlra"), RealMatrix::from_rows({{1.0}}));
  std::ifstream in(path("one.mlra"), std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 29u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "MLRA1");
  EXPECT_EQ(bytes[5], 1);
  EXPECT_EQ(bytes[13], 1);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(bytes[27], 0xF0);
  EXPECT_EQ(bytes[28], 0x3F);
}

TEST_F(IoFiles, BitsRoundTrip) {
  std::mt19937_64 rng(2);
  const auto b = testing::random_bits(9, 4, 0.5, rng);
  io::write_bits(path("w.mlrb"), b);
  EXPECT_EQ(io::read_bits(path("w.mlrb")), b);
}

TEST_F(IoFiles, TensorRoundTrip) {
  Tensor3 t(2, 3, 4);
  double x = 0.5;
  for (double& v : t.values()) v = (x *= -1.5);
  io::write_tensor(path("t.mlrt"), t);
  const auto r = io::read_tensor(path("t.mlrt"));
  EXPECT_EQ(r.n1(), 2u);
  EXPECT_EQ(r.n3(), 4u);
  EXPECT_TRUE(std::equal(r.values().begin(), r.values().end(), t.values().begin()));
}

TEST_F(IoFiles, ErrorsCarryPath) {
  try {
    io::read_matrix(path("missing.mlra"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), path("missing.mlra"));
  }
  io::write_bits(path("w.mlrb"), BitMatrix(2, 2));
  EXPECT_THROW(io::read_matrix(path("w.mlrb")), IoError);
  {
    std::ofstream os(path("short.mlra"), std::ios::binary);
    os.write("MLRA1", 5);
    os.write("\x02\0\0\0\0\0\0\0", 8);
  }
  EXPECT_THROW(io::read_matrix(path("short.mlra")), IoError);
  {
    std::ofstream os(path("bad.mlrb"), std::ios::binary);
    os.write("MLRB1", 5);
    os.write("\x01\0\0\0\0\0\0\0\x01\0\0\0\0\0\0\0\x07", 17);
  }
  EXPECT_THROW(io::read_bits(path("bad.mlrb")), IoError);
}

TEST(Descriptor, SingleLineAndMultiLineAgree) {
  const auto a = io::parse_mask_descriptor("banded p=4 n=64");
  const auto b = io::parse_mask_descriptor("pattern = banded\n# comment\np = 4\nn = 64\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.at("pattern"), "banded");
  EXPECT_EQ(io::mask_from_descriptor(a).bits(), make_mask(pattern::Banded{4}, 64).bits());
}

TEST(Descriptor, EveryPatternTag) {
  const char* lines[] = {"all-ones",         "diagonal",      "block-diagonal blocks=4",  "sparse t=2 seed=3",
                         "block-sparse blocks=4 t=1", "toeplitz-mod-p p=3", "banded p=2", "banded-2d p=2",
                         "monotone seed=1",  "monotone prefix=0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15"};
  for (const char* line : lines) {
    const auto w = io::mask_from_descriptor(io::parse_mask_descriptor(line), 16);
    EXPECT_EQ(w.n(), 16u) << line;
    EXPECT_EQ(pattern_tag(w.pattern()), io::parse_mask_descriptor(line).at("pattern")) << line;
  }
}

TEST(Descriptor, ExplicitSparseZeroSets) {
  const auto w = io::mask_from_descriptor(io::parse_mask_descriptor("sparse t=1 zero_sets=1;0;-;2"), 4);
  EXPECT_FALSE(w(0, 1));
  EXPECT_FALSE(w(1, 0));
  EXPECT_EQ(w.row_zero_counts()[2], 0u);
  EXPECT_FALSE(w(3, 2));
}

TEST(Descriptor, RandomPatternsFollowSeed) {
  const auto a = io::mask_from_descriptor(io::parse_mask_descriptor("sparse t=3 seed=9"), 32);
  const auto b = io::mask_from_descriptor(io::parse_mask_descriptor("sparse t=3 seed=9"), 32);
  const auto c = io::mask_from_descriptor(io::parse_mask_descriptor("sparse t=3 seed=10"), 32);
  EXPECT_EQ(a.bits(), b.bits());
  EXPECT_NE(a.bits(), c.bits());
  EXPECT_EQ(a.max_row_zeros(), 3u);
  EXPECT_EQ(a.max_col_zeros(), 3u);
}

TEST(Descriptor, ErrorsNameTheField) {
  auto field_of = [](const std::string& text, std::optional<std::size_t> n) -> std::string {
    try {
      io::mask_from_descriptor(io::parse_mask_descriptor(text), n);
    } catch (const ParameterError& e) {
      return e.field();
    }
    return "";
  };
  EXPECT_EQ(field_of("p=3", 8), "pattern");
  EXPECT_EQ(field_of("spiral", 8), "pattern");
  EXPECT_EQ(field_of("banded", 8), "p");
  EXPECT_EQ(field_of("banded p=x", 8), "p");
  EXPECT_EQ(field_of("banded p=-1", 8), "p");
  EXPECT_EQ(field_of("diagonal", std::nullopt), "n");
}

TEST(Sections, ParsesHeadersCommentsAndValues) {
  std::istringstream in("top = 1\n[sweep]\nroute = t1   # trailing\n; full comment\npatterns = diagonal | banded p=2\n\n[sweep]\nroute=a2\n");
  const auto s = io::parse_sections(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].name, "");
  EXPECT_EQ(s[0].values.at("top"), "1");
  EXPECT_EQ(s[1].values.at("route"), "t1");
  EXPECT_EQ(s[1].values.at("patterns"), "diagonal | banded p=2");
  EXPECT_EQ(s[2].values.at("route"), "a2");
}

TEST(Sections, MalformedLinesAreIoErrors) {
  std::istringstream a("[sweep\n");
  EXPECT_THROW(io::parse_sections(a), IoError);
  std::istringstream b("[sweep]\nnot a pair\n");
  EXPECT_THROW(io::parse_sections(b), IoError);
}

TEST(Lists, CountsAndReals) {
  EXPECT_EQ(io::to_counts("1, 2,3", "x"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(io::to_reals("0.1,0.25", "x"), (std::vector<double>{0.1, 0.25}));
  EXPECT_THROW(io::to_count("3.5", "x"), ParameterError);
  EXPECT_THROW(io::to_real("abc", "x"), ParameterError);
}

}  // namespace
}  // namespace mlra
