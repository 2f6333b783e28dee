#include "rinc/cli.hpp"

#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace rinc {
namespace {

using cli::run_cli;
using testutil::TempFile;

int run(std::vector<std::string> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(std::move(args), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string make_scene_xyz(TempFile& f, uint32_t width = 128, uint32_t height = 32,
                           uint64_t seed = 5) {
  const ProjectionParams params = testutil::kitti_like_params(width, height);
  write_xyz(unproject(testutil::synthetic_scene(params, seed)), f.path());
  return f.path();
}

std::vector<std::string> encode_args(const std::string& in, const std::string& out) {
  return {"encode",          in,       "-o",           out,           "--width",  "128",
          "--height",        "32",     "--np",         "8",           "--mask-v", "16",
          "--depth-v",       "16",     "--epochs",     "20",          "--seed",   "7",
          "--phi-up",        "0.05",   "--phi-down",   "-0.45"};
}

TEST(CliProject, WritesDumpAndPrintsRetention) {
  TempFile in(".xyz"), out(".rid");
  make_scene_xyz(in);
  std::string text;
  const int code = run({"project", in.path(), "-o", out.path(), "--width", "128", "--height",
                        "32", "--np", "8"},
                       &text);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(std::filesystem::exists(out.path()));
  EXPECT_NE(text.find("W=128"), std::string::npos);

  // The printed retention must match an offline recompute.
  const PointCloud cloud = read_xyz(in.path());
  const auto [ri, np] = load_range_image(out.path());
  const double expected = retention_ratio(cloud, unproject(ri));
  std::istringstream ss(text.substr(text.find("retention=") + 10));
  double printed = -1.0;
  ss >> printed;
  EXPECT_NEAR(printed, expected, 1e-6);
}

TEST(CliProject, FailsOnCorruptInput) {
  TempFile in(".bin"), out(".rid");
  std::ofstream(in.path(), std::ios::binary) << "abc";  // not a multiple of 16
  std::string err;
  EXPECT_NE(run({"project", in.path(), "-o", out.path()}, nullptr, &err), 0);
  EXPECT_NE(err.find("16"), std::string::npos);
}

TEST(CliEncodeDecodeEval, RoundTrip) {
  TempFile in(".xyz"), stream(".rinc"), rec(".xyz");
  make_scene_xyz(in);

  std::string enc_text;
  ASSERT_EQ(run(encode_args(in.path(), stream.path()), &enc_text), 0);
  ASSERT_TRUE(std::filesystem::exists(stream.path()));

  // Reported bpp equals file size * 8 / N.
  const size_t file_bits = std::filesystem::file_size(stream.path()) * 8;
  const size_t n = read_xyz(in.path()).size();
  std::istringstream bpp_ss(enc_text.substr(enc_text.find("bpp=") + 4));
  double printed_bpp = -1.0;
  bpp_ss >> printed_bpp;
  EXPECT_NEAR(printed_bpp, static_cast<double>(file_bits) / n, 1e-9);

  std::string dec_text;
  ASSERT_EQ(run({"decode", stream.path(), "-o", rec.path()}, &dec_text), 0);
  const PointCloud reconstructed = read_xyz(rec.path());
  EXPECT_GT(reconstructed.size(), 0u);

  // Decoded count equals the decoded mask's ones count.
  const DecodeResult direct = decode(cli::load_stream(stream.path()));
  EXPECT_EQ(reconstructed.size(), direct.range_image.occupied_count());

  std::string eval_text;
  ASSERT_EQ(run({"eval", in.path(), rec.path(), "--stream", stream.path()}, &eval_text), 0);
  EXPECT_NE(eval_text.find("frame,bpp,cd,retention"), std::string::npos);

  const double direct_cd = chamfer(read_xyz(in.path()), reconstructed);
  const size_t row_at = eval_text.find('\n') + 1;
  std::string row = eval_text.substr(row_at);
  // frame,bpp,cd,retention
  const size_t c1 = row.find(','), c2 = row.find(',', c1 + 1), c3 = row.find(',', c2 + 1);
  EXPECT_NEAR(std::stod(row.substr(c1 + 1, c2 - c1 - 1)), printed_bpp, 1e-6);
  EXPECT_NEAR(std::stod(row.substr(c2 + 1, c3 - c2 - 1)), direct_cd, 1e-9);
}

TEST(CliEncode, DeterministicWithSeed) {
  TempFile in(".xyz"), s1(".rinc"), s2(".rinc");
  make_scene_xyz(in);
  ASSERT_EQ(run(encode_args(in.path(), s1.path())), 0);
  ASSERT_EQ(run(encode_args(in.path(), s2.path())), 0);
  std::ifstream f1(s1.path(), std::ios::binary), f2(s2.path(), std::ios::binary);
  const std::vector<char> b1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
  const std::vector<char> b2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
  EXPECT_EQ(b1, b2);
}

TEST(CliDecode, TruncatedStreamFails) {
  TempFile in(".xyz"), stream(".rinc"), rec(".xyz");
  make_scene_xyz(in);
  ASSERT_EQ(run(encode_args(in.path(), stream.path())), 0);
  const size_t size = std::filesystem::file_size(stream.path());
  std::filesystem::resize_file(stream.path(), size / 2);
  std::string err;
  EXPECT_NE(run({"decode", stream.path(), "-o", rec.path()}, nullptr, &err), 0);
  EXPECT_NE(err.find("error"), std::string::npos);
}

TEST(CliEval, IdenticalCloudsGiveZeroCd) {
  TempFile in(".xyz");
  make_scene_xyz(in);
  std::string text;
  ASSERT_EQ(run({"eval", in.path(), in.path()}, &text), 0);
  EXPECT_NE(text.find(",0,"), std::string::npos);
}

TEST(CliEval, EmptyReconstructionFails) {
  TempFile in(".xyz"), empty(".xyz");
  make_scene_xyz(in);
  std::ofstream(empty.path()).close();
  EXPECT_NE(run({"eval", in.path(), empty.path()}), 0);
}

TEST(CliSweep, EmitsOneRowPerPointAndSelfBdIsZero) {
  TempFile in(".xyz"), csv(".csv");
  make_scene_xyz(in, 64, 16, 9);
  const std::vector<std::string> base{
      "sweep", in.path(),  "--width", "64",        "--height", "16",   "--np",
      "4",     "--epochs", "10",      "--mask-v",  "10",       "--depth-v", "12",
      "--seed", "3",       "--phi-up", "0.05",     "--phi-down", "-0.45"};

  std::vector<std::string> args = base;
  for (const char* p : {"10,12,0.0,4", "10,12,0.0,8", "12,14,0.0,16", "14,16,0.0,32"}) {
    args.push_back("--point");
    args.push_back(p);
  }
  args.push_back("-o");
  args.push_back(csv.path());
  ASSERT_EQ(run(args), 0);

  std::ifstream f(csv.path());
  std::string line;
  size_t rows = 0;
  std::getline(f, line);  // header
  EXPECT_EQ(line, "bpp,cd,retention,mask_v,depth_v,sparsity,nb");
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 4u);

  // Second run comparing against the emitted curve: bd_cd of a curve with
  // itself must be 0 (header line is skipped by the reader).
  std::vector<std::string> again = args;
  again.pop_back();
  again.pop_back();
  again.push_back("--bd-against");
  again.push_back(csv.path());
  std::string text;
  ASSERT_EQ(run(again, &text), 0);
  const size_t at = text.find("bd_cd=");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NEAR(std::stod(text.substr(at + 6)), 0.0, 1e-9);
}

TEST(CliSweep, DuplicatedConfigGivesIdenticalRows) {
  TempFile in(".xyz");
  make_scene_xyz(in, 64, 16, 9);
  std::string text;
  ASSERT_EQ(run({"sweep", in.path(), "--width", "64", "--height", "16", "--np", "4", "--epochs",
                 "8", "--seed", "3", "--phi-up", "0.05", "--phi-down", "-0.45", "--point",
                 "10,12,0.0,8", "--point", "10,12,0.0,8"},
                &text),
            0);
  std::istringstream ss(text);
  std::string header, row1, row2;
  std::getline(ss, header);
  std::getline(ss, row1);
  std::getline(ss, row2);
  EXPECT_EQ(row1, row2);
}

TEST(CliConfigFile, SuppliesValuesAndYieldsToFlags) {
  TempFile in(".xyz"), cfg(".cfg"), out(".rid");
  make_scene_xyz(in);
  std::ofstream(cfg.path()) << "width=64\nheight=16\nnp=4\n";

  // Values come from the file when no flag is given...
  std::string text;
  ASSERT_EQ(run({"project", in.path(), "-o", out.path(), "--config", cfg.path()}, &text), 0);
  EXPECT_NE(text.find("W=64 H=16"), std::string::npos);

  // ...and the command line wins when both are present.
  ASSERT_EQ(run({"project", in.path(), "-o", out.path(), "--config", cfg.path(), "--width",
                 "128", "--height", "32", "--np", "8"},
                &text),
            0);
  EXPECT_NE(text.find("W=128"), std::string::npos);
}

TEST(CliSweep, WorkerErrorsSurfaceAsExitCode) {
  TempFile in(".xyz");
  make_scene_xyz(in, 64, 16, 9);
  // nb=3 is below the supported bit depth; the failure happens inside a
  // worker thread and must come back as a normal error exit.
  std::string err;
  EXPECT_NE(run({"sweep", in.path(), "--width", "64", "--height", "16", "--np", "4", "--epochs",
                 "5", "--jobs", "2", "--point", "10,12,0.0,3", "--point", "10,12,0.0,8"},
                nullptr, &err),
            0);
  EXPECT_NE(err.find("bits"), std::string::npos);
}

TEST(Cli, NoSubcommandFails) { EXPECT_NE(run({}), 0); }

}  // namespace
}  // namespace rinc
