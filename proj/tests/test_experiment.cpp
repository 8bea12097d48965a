#include "actinf/experiment.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <regex>

using namespace actinf;
namespace fs = std::filesystem;
using experiment::ConfigError;

namespace {

std::string read_file(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir
{
public:
  TempDir()
  {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("actinf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path & path() const { return path_; }

  fs::path write(const std::string & name, const std::string & text) const
  {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

private:
  fs::path path_;
};

std::string replace_line(std::string text, const std::string & key, const std::string & line)
{
  const std::regex re("(^|\n)" + key + " = [^\n]*");
  return std::regex_replace(text, re, "$1" + line);
}

std::string field_of(const std::string & text)
{
  try {
    experiment::parse_config(text);
  } catch (const ConfigError & e) {
    return e.field();
  }
  return "";
}

int exit_status(int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; }

}  // namespace

TEST(Config, ShippedFileMatchesBuiltInDefault)
{
  EXPECT_EQ(read_file(ACTINF_DEFAULT_CONFIG), experiment::kDefaultConfig);
}

TEST(Config, DefaultDescribesBenchmark)
{
  const auto cfg = experiment::parse_config(experiment::kDefaultConfig);
  const auto ref = testsupport::benchmark_model();
  EXPECT_EQ(cfg.model.A, ref.A);
  EXPECT_EQ(cfg.model.B, ref.B);
  EXPECT_EQ(cfg.model.C, ref.C);
  EXPECT_EQ(cfg.model.W_w, ref.W_w);
  EXPECT_EQ(cfg.model.W_v, ref.W_v);
  EXPECT_EQ(cfg.Q, Matrix::Identity(2, 2));
  EXPECT_EQ(cfg.R, Matrix::Identity(2, 2));
  EXPECT_EQ(cfg.x0, testsupport::benchmark_x0());
  EXPECT_EQ(cfg.lambdas, (std::vector<double>{1e-4, 0.1, 1.0}));
  EXPECT_EQ(cfg.horizon, 10);
  EXPECT_EQ(cfg.steps, 100);
  EXPECT_EQ(cfg.model.prior->precision(), 1e-8 * Matrix::Identity(2, 2));
}

TEST(Config, CommentsAndBlankLinesIgnored)
{
  const std::string text = std::string(experiment::kDefaultConfig) + "\n   # trailing comment\n\n";
  EXPECT_NO_THROW(experiment::parse_config(text));
  const auto cfg = experiment::parse_config(replace_line(experiment::kDefaultConfig, "out", "out = \"a#b\"  # c"));
  EXPECT_EQ(cfg.out, "a#b");
}

TEST(Config, ValidationNamesOffendingField)
{
  const std::string base = experiment::kDefaultConfig;
  EXPECT_EQ(field_of(replace_line(base, "R", "R = [[1.0, 0.0], [0.0, -1.0]]")), "R");
  EXPECT_EQ(field_of(replace_line(base, "R", "R = [[1.0, 2.0], [0.0, 1.0]]")), "R");
  EXPECT_EQ(field_of(replace_line(base, "A", "A = [[1.0, 0.1]]")), "A");
  EXPECT_EQ(field_of(replace_line(base, "B", "B = [[0.1, 0.5]]")), "B");
  EXPECT_EQ(field_of(replace_line(base, "C", "C = [[1.0]]")), "C");
  EXPECT_EQ(field_of(replace_line(base, "W_w", "W_w = [[0.0, 0.0], [0.0, 1.0]]")), "W_w");
  EXPECT_EQ(field_of(replace_line(base, "W_v", "W_v = [[1.0]]")), "W_v");
  EXPECT_EQ(field_of(replace_line(base, "Q", "Q = [[-1.0, 0.0], [0.0, 1.0]]")), "Q");
  EXPECT_EQ(field_of(replace_line(base, "x0", "x0 = [1.0]")), "x0");
  EXPECT_EQ(field_of(replace_line(base, "horizon", "horizon = 0")), "horizon");
  EXPECT_EQ(field_of(replace_line(base, "steps", "steps = 2.5")), "steps");
  EXPECT_EQ(field_of(replace_line(base, "controllers", "controllers = [\"mpc\"]")), "controllers");
  EXPECT_EQ(field_of(replace_line(base, "seeds", "seeds = [-1]")), "seeds");
  EXPECT_EQ(field_of(replace_line(base, "noise_on", "noise_on = 1")), "noise_on");
  EXPECT_EQ(field_of(base + "gamma = 3\n"), "gamma");
  EXPECT_EQ(field_of(base + "A = [[1.0]]\n"), "A");
  EXPECT_EQ(field_of(replace_line(base, "A", "A = [[1.0, 0.1], [0.0 1.0]]")), "A");
}

TEST(Config, NonPositiveLambdaRejected)
{
  const auto text = replace_line(experiment::kDefaultConfig, "lambdas", "lambdas = [0.1, 0.0]");
  try {
    experiment::parse_config(text);
    FAIL();
  } catch (const ConfigError & e) {
    EXPECT_EQ(e.field(), "lambdas");
    EXPECT_NE(std::string(e.what()).find("lambda must be > 0"), std::string::npos);
  }
}

TEST(Format, SeventeenSignificantDigits)
{
  EXPECT_EQ(experiment::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(experiment::format_double(1.0), "1");
  EXPECT_EQ(experiment::format_double(-2.5e-7), "-2.4999999999999999e-07");
  EXPECT_EQ(experiment::format_short(1e-4), "0.0001");
  EXPECT_EQ(experiment::format_short(0.1), "0.1");
}

TEST(RunCommand, DefaultConfigWritesTracesAndSummary)
{
  TempDir dir;
  std::ostringstream log, err;
  experiment::Overrides o;
  o.out = dir.path().string();
  ASSERT_EQ(experiment::run_command(ACTINF_DEFAULT_CONFIG, o, log, err), 0) << err.str();

  std::vector<std::string> names;
  for (const auto & entry : fs::directory_iterator(dir.path())) { names.push_back(entry.path().filename().string()); }
  std::sort(names.begin(), names.end());
  const std::vector<std::string> expected{"summary.csv", "trace_actinf_0.0001_0.csv", "trace_actinf_0.1_0.csv",
    "trace_actinf_1_0.csv", "trace_lqg_1_0.csv"};
  EXPECT_EQ(names, expected);

  const std::string trace = read_file(dir.path() / "trace_lqg_1_0.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,x1,x2,y1,y2,u1,u2,inst_cost,cum_cost,fe_past,fe_future,fe_total");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 101);

  const std::string summary = read_file(dir.path() / "summary.csv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 5);
  EXPECT_NE(summary.find("lqg,1,0,true,100,"), std::string::npos);
}

TEST(RunCommand, RerunIsByteIdentical)
{
  TempDir a, b;
  std::ostringstream log, err;
  experiment::Overrides o;
  o.out = a.path().string();
  ASSERT_EQ(experiment::run_command(ACTINF_DEFAULT_CONFIG, o, log, err), 0);
  o.out = b.path().string();
  ASSERT_EQ(experiment::run_command(ACTINF_DEFAULT_CONFIG, o, log, err), 0);
  for (const auto & entry : fs::directory_iterator(a.path())) {
    EXPECT_EQ(read_file(entry.path()), read_file(b.path() / entry.path().filename())) << entry.path();
  }
}

TEST(RunCommand, OverridesTakePrecedence)
{
  TempDir dir;
  const auto cfg = dir.write("c.cfg", replace_line(replace_line(experiment::kDefaultConfig, "steps", "steps = 3"),
                                        "lambdas", "lambdas = [1.0]"));
  std::ostringstream log, err;
  experiment::Overrides o;
  o.out       = (dir.path() / "out").string();
  o.seed      = 9;
  o.noise_off = true;
  ASSERT_EQ(experiment::run_command(cfg, o, log, err), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "trace_lqg_1_9.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "trace_actinf_1_9.csv"));
  const std::string summary = read_file(dir.path() / "out" / "summary.csv");
  EXPECT_NE(summary.find("actinf,1,9,false,3,"), std::string::npos);

  // Noise-free rows do not depend on the seed.
  o.seed = 10;
  o.out  = (dir.path() / "out10").string();
  ASSERT_EQ(experiment::run_command(cfg, o, log, err), 0);
  EXPECT_EQ(read_file(dir.path() / "out" / "trace_lqg_1_9.csv"), read_file(dir.path() / "out10" / "trace_lqg_1_10.csv"));
}

TEST(RunCommand, InvalidConfigExitsTwo)
{
  TempDir dir;
  const auto cfg = dir.write("bad.cfg", replace_line(experiment::kDefaultConfig, "R", "R = [[0.0, 0.0], [0.0, 1.0]]"));
  std::ostringstream log, err;
  EXPECT_EQ(experiment::run_command(cfg, {}, log, err), 2);
  EXPECT_NE(err.str().find("R"), std::string::npos);
}

TEST(RunCommand, DivergenceExitsThree)
{
  TempDir dir;
  auto text = replace_line(experiment::kDefaultConfig, "A", "A = [[1e200, 0.0], [0.0, 1e200]]");
  text = replace_line(text, "controllers", "controllers = [\"none\"]");
  const auto cfg = dir.write("div.cfg", text);
  std::ostringstream log, err;
  experiment::Overrides o;
  o.out = (dir.path() / "out").string();
  EXPECT_EQ(experiment::run_command(cfg, o, log, err), 3);
  EXPECT_NE(err.str().find("diverged"), std::string::npos);
}

TEST(CheckCommand, DefaultPasses)
{
  std::ostringstream log, err;
  EXPECT_EQ(experiment::check_command(ACTINF_DEFAULT_CONFIG, log, err), 0) << err.str();
  EXPECT_NE(log.str().find("max P_k deviation="), std::string::npos);
  const auto cfg = experiment::load_config(ACTINF_DEFAULT_CONFIG);
  const auto est = Gaussian::from_precision(cfg.x0, Matrix::Identity(2, 2));
  for (double lambda : cfg.lambdas) {
    const auto d = experiment::oracle_deviation(cfg.model, cfg.goal_family().with_lambda(lambda), cfg.horizon, est);
    EXPECT_LT(d.schedule, 1e-8);
    EXPECT_LT(d.control, 1e-8);
  }
}

TEST(CheckCommand, ImpossibleToleranceFails)
{
  std::ostringstream log, err;
  EXPECT_EQ(experiment::check_command(ACTINF_DEFAULT_CONFIG, log, err, -1.0), 1);
}

TEST(Cli, ExitCodes)
{
  TempDir dir;
  const std::string cli = ACTINF_CLI;
  const auto quiet = " >" + (dir.path() / "stdout").string() + " 2>" + (dir.path() / "stderr").string();

  EXPECT_EQ(exit_status(std::system((cli + " check " + ACTINF_DEFAULT_CONFIG + quiet).c_str())), 0);

  const auto bad_a = dir.write("a.cfg", replace_line(experiment::kDefaultConfig, "A", "A = [[1.0, 0.1, 0.0]]"));
  EXPECT_EQ(exit_status(std::system((cli + " check " + bad_a.string() + quiet).c_str())), 2);

  const auto zero = dir.write("l.cfg", replace_line(experiment::kDefaultConfig, "lambdas", "lambdas = [0]"));
  EXPECT_EQ(exit_status(std::system((cli + " check " + zero.string() + quiet).c_str())), 2);
  EXPECT_NE(read_file(dir.path() / "stderr").find("lambda must be > 0"), std::string::npos);

  const auto bad_r = dir.write("r.cfg", replace_line(experiment::kDefaultConfig, "R", "R = [[1.0, 0.0], [0.0, -1.0]]"));
  EXPECT_EQ(exit_status(std::system((cli + " run " + bad_r.string() + quiet).c_str())), 2);
  EXPECT_NE(read_file(dir.path() / "stderr").find("R"), std::string::npos);

  const auto small = dir.write("s.cfg", replace_line(experiment::kDefaultConfig, "steps", "steps = 2"));
  const auto out = (dir.path() / "o").string();
  EXPECT_EQ(exit_status(std::system((cli + " run " + small.string() + " --noise-off --seed 4 --out " + out + quiet).c_str())), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "trace_actinf_0.1_4.csv"));
  EXPECT_NE(read_file(fs::path(out) / "summary.csv").find(",4,false,2,"), std::string::npos);
}
