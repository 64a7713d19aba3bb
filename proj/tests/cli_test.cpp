#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(NEXTTERM_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "nextterm_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, SynthTrainEvalPredict) {
  ASSERT_EQ(run("synth --seed 1 --students 300 --catalog-size 16 --out " + path("t.csv") + " --truth " + path("truth.json"))
                .exit_code,
            0);
  EXPECT_TRUE(fs::exists(path("truth.json")));

  const auto ingest = run("ingest --seed 1 --data " + path("t.csv") + " --out " + path("ds.json"));
  ASSERT_EQ(ingest.exit_code, 0);
  EXPECT_NE(ingest.out.find("examples=300"), std::string::npos) << ingest.out;

  const auto tr = run("train --seed 1 --data " + path("t.csv") + " --out " + path("ck.json") + " --report " +
                      path("report.jsonl") + " --hidden 8 --combo 4 --merge 8 --max-epochs 3 --patience 2 --quiet");
  ASSERT_EQ(tr.exit_code, 0);
  EXPECT_NE(tr.out.find("validation_auc="), std::string::npos) << tr.out;
  EXPECT_NE(tr.out.find("checkpoint="), std::string::npos) << tr.out;
  EXPECT_TRUE(fs::exists(path("report.jsonl")));

  const auto ev = run("eval --seed 1 --data " + path("t.csv") + " --model " + path("ck.json") + " --tier-size 3 --grid-json " +
                      path("grid.json"));
  ASSERT_EQ(ev.exit_code, 0) << ev.out;
  EXPECT_NE(ev.out.find("validation_auc="), std::string::npos);
  EXPECT_NE(ev.out.find("gpa_baseline_validation_auc="), std::string::npos);
  EXPECT_NE(ev.out.find("band,count,hard,medium,easy"), std::string::npos);

  std::ofstream(path("history.json"))
      << R"([{"period":"2010-1","grades":[{"course":"C00","grade":14},{"course":"C01","grade":"R"}]}])";
  std::ofstream(path("candidates.json")) << R"([["C02","C03"],["C04"]])";
  const auto pred = run("predict --model " + path("ck.json") + " --history " + path("history.json") + " --candidates " +
                        path("candidates.json"));
  ASSERT_EQ(pred.exit_code, 0);
  const auto j = nlohmann::json::parse(pred.out);
  EXPECT_EQ(j.at("probabilities").size(), 2u);
  EXPECT_EQ(j.at("ranking").size(), 2u);

  std::ofstream(path("bad.json")) << R"([["NOPE"]])";
  EXPECT_EQ(run("predict --model " + path("ck.json") + " --history " + path("history.json") + " --candidates " +
                path("bad.json"))
                .exit_code,
            1);
}

TEST_F(CliTest, MissingInputIsIoError) {
  EXPECT_EQ(run("train --data " + path("missing.csv") + " --out " + path("x.json")).exit_code, 2);
  EXPECT_EQ(run("eval --data " + path("missing.csv") + " --model " + path("missing.json")).exit_code, 2);
}

TEST_F(CliTest, InvalidArgumentsAreValidationErrors) {
  EXPECT_EQ(run("train --no-such-flag").exit_code, 1);
  EXPECT_EQ(run("").exit_code, 1);
  std::ofstream(path("bad.csv")) << "student_id,course_id,period,grade\ns1,A,2010-1,25\n";
  EXPECT_EQ(run("ingest --data " + path("bad.csv")).exit_code, 1);
}

}  // namespace
