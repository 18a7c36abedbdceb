#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sniff/commands.hpp"

using namespace sniff;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sniff_commands_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return detail::read_file(p.string()); }

ExperimentConfig config_in(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.out = dir.string();
  return cfg;
}

}  // namespace

TEST(CmdGenerate, ByteIdenticalAndLoadable) {
  auto a = scratch("gen_a"), b = scratch("gen_b");
  std::ostringstream os;
  EXPECT_EQ(cmd_generate(config_in(a), os), 0);
  EXPECT_EQ(cmd_generate(config_in(b), os), 0);
  EXPECT_EQ(slurp(a / "model.json"), slurp(b / "model.json"));
  EXPECT_NE(os.str().find("n=16, m=10"), std::string::npos);
  auto model = load_model<double>(slurp(a / "model.json"));
  EXPECT_EQ(model.extractor.input_dim(), 32u);
}

TEST(CmdGenerate, RejectsZeroClasses) {
  auto cfg = config_in(scratch("gen_m0"));
  cfg.classes = 0;
  std::ostringstream os;
  EXPECT_THROW(cmd_generate(cfg, os), UsageError);
}

TEST(CmdAttack, DefaultModelCountsAndCsv) {
  auto dir = scratch("attack");
  auto cfg = config_in(dir);
  std::ostringstream os;
  ASSERT_EQ(cmd_generate(cfg, os), 0);
  ASSERT_EQ(cmd_attack(cfg, os), 0);
  EXPECT_NE(os.str().find("faults injected:  170 (m + n*m = 170)"), std::string::npos) << os.str();
  EXPECT_NE(os.str().find("uncached 2m + 2mn = 340"), std::string::npos);
  auto csv = slurp(dir / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 170 + 1);
  EXPECT_NE(csv.find("faults=170;expected_faults=170"), std::string::npos);
  EXPECT_EQ(csv.find("failed"), std::string::npos);

  std::string first = csv;
  ASSERT_EQ(cmd_attack(cfg, os), 0);
  EXPECT_EQ(slurp(dir / "report.csv"), first);
}

TEST(CmdAttack, ZeroStudentLayerHasZeroError) {
  auto dir = scratch("attack_zero");
  auto model = generate_synthetic<double>(1, {8, 4}, 4, 3);
  model.student.weights = Matrix<double>(4, 3);
  model.student.biases.assign(3, 0.0);
  detail::write_file(dir / "model.json", save_model(model));
  std::ostringstream os;
  ASSERT_EQ(cmd_attack(config_in(dir), os), 0);
  EXPECT_NE(os.str().find("max weight error: 0 (0000000000000000)"), std::string::npos) << os.str();
  EXPECT_NE(os.str().find("max bias error:   0 (0000000000000000)"), std::string::npos);
}

TEST(CmdAttack, Binary32FlagsPrecision) {
  auto dir = scratch("attack32");
  auto cfg = config_in(dir);
  cfg.precision = 32;
  std::ostringstream os;
  ASSERT_EQ(cmd_generate(cfg, os), 0);
  ASSERT_EQ(cmd_attack(cfg, os), 0);
  EXPECT_NE(os.str().find("binary32 (error threshold 1e-04)"), std::string::npos) << os.str();
  EXPECT_NE(slurp(dir / "report.csv").find("precision=binary32"), std::string::npos);
}

TEST(CmdInject, PrintsBothVectors) {
  auto dir = scratch("inject");
  StudentModel<double> model;
  model.extractor = identity_extractor<double>(1);
  model.student.weights = Matrix<double>(1, 2);
  model.student.weights(0, 0) = 0.0;
  model.student.weights(0, 1) = -0.25;
  model.student.biases = {0.1, -0.2};
  detail::write_file(dir / "model.json", save_model(model));
  auto cfg = config_in(dir);
  cfg.input = "1.0";

  cfg.fault = "bias:j=0:signflip";
  std::ostringstream os;
  ASSERT_EQ(cmd_inject(cfg, os), 0);
  auto clean = forward<double>(model, std::vector<double>{1.0});
  auto faulted = forward<double>(model, std::vector<double>{1.0}, bias_sign(0));
  EXPECT_NE(os.str().find("0," + describe(clean[0]) + "," + describe(faulted[0])), std::string::npos) << os.str();

  cfg.fault = "product:i=0,j=0:signflip";
  std::ostringstream os2;
  ASSERT_EQ(cmd_inject(cfg, os2), 0);
  EXPECT_NE(os2.str().find("0," + describe(clean[0]) + "," + describe(clean[0])), std::string::npos);
  EXPECT_NE(os2.str().find("1," + describe(clean[1]) + "," + describe(clean[1])), std::string::npos);

  cfg.fault = "bias:j=";
  EXPECT_THROW(cmd_inject(cfg, os2), ParseError);
}

TEST(CmdEvaluate, IdenticalModelsAndPipeline) {
  auto dir = scratch("evaluate");
  auto cfg = config_in(dir);
  std::ostringstream os;
  ASSERT_EQ(cmd_generate(cfg, os), 0);
  cfg.recovered = (dir / "model.json").string();
  ASSERT_EQ(cmd_evaluate(cfg, os), 0);
  auto acc = slurp(dir / "accuracy.csv");
  EXPECT_NE(acc.find("\n2,500,"), std::string::npos);
  EXPECT_NE(acc.find("\ninf,500,"), std::string::npos);
  auto prec = slurp(dir / "precision.csv");
  EXPECT_NE(prec.find("max_weight_abs_error,0000000000000000"), std::string::npos);

  auto dir2 = scratch("evaluate_all");
  std::ostringstream os2;
  ASSERT_EQ(cmd_all(config_in(dir2), os2), 0) << os2.str();
  auto p = slurp(dir2 / "precision.csv");
  double w, b;
  ASSERT_TRUE(parse_hex<double>(p.substr(p.find("max_weight_abs_error,") + 21, 16), w));
  ASSERT_TRUE(parse_hex<double>(p.substr(p.find("max_bias_abs_error,") + 19, 16), b));
  EXPECT_LE(w, 1e-12);
  EXPECT_LE(b, 1e-12);
}

TEST(CmdEvaluate, DimensionMismatch) {
  auto dir = scratch("evaluate_mismatch");
  auto cfg = config_in(dir);
  detail::write_file(dir / "model.json", save_model(generate_synthetic<double>(1, {8, 4}, 4, 3)));
  detail::write_file(dir / "recovered.json", save_model(generate_synthetic<double>(1, {8, 4}, 4, 2)));
  std::ostringstream os;
  EXPECT_THROW(cmd_evaluate(cfg, os), UsageError);
}

TEST(CmdAll, RepeatedRunsAreByteIdentical) {
  auto a = scratch("all_a"), b = scratch("all_b");
  std::ostringstream os;
  ASSERT_EQ(cmd_all(config_in(a), os), 0);
  ASSERT_EQ(cmd_all(config_in(b), os), 0);
  for (auto f : {"model.json", "recovered.json", "report.csv", "precision.csv", "accuracy.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Parsing, DigitsDimsInput) {
  auto d = parse_digits("0,2,inf");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[1], 2);
  EXPECT_FALSE(d[2].has_value());
  EXPECT_THROW(parse_digits("2,x"), ParseError);
  EXPECT_EQ(parse_dims("32,16"), (std::vector<std::size_t>{32, 16}));
  EXPECT_EQ(parse_input<double>("1.5, -2"), (std::vector<double>{1.5, -2}));
  EXPECT_THROW(parse_input<double>("1.5,abc"), ParseError);
}

#ifdef SNIFF_CLI_PATH
TEST(CliBinary, ConfigFileAndFlagOverride) {
  auto dir = scratch("cli");
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "seed=7\nclasses=4\ndims=10,6\nout=" << (dir / "from_file").string() << "\n";
  }
  const std::string cli = SNIFF_CLI_PATH;
  std::string cmd = cli + " generate --config " + (dir / "exp.cfg").string() + " --out " + (dir / "flag").string() +
                    " > " + (dir / "stdout.txt").string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  auto model = load_model<double>(slurp(dir / "flag" / "model.json"));
  EXPECT_EQ(model.m(), 4u);
  EXPECT_EQ(model.n(), 6u);
  EXPECT_FALSE(fs::exists(dir / "from_file"));

  cmd = cli + " generate --classes 0 --out " + (dir / "bad").string() + " 2> /dev/null";
  EXPECT_NE(std::system(cmd.c_str()), 0);
  cmd = cli + " inject --out " + (dir / "flag").string() + " --fault 'bias:j=' 2> " + (dir / "err.txt").string();
  EXPECT_NE(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir / "err.txt").find("position"), std::string::npos);
}
#endif
