#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "test_support.h"

namespace {

struct Run {
  int exit_code;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the output.
Run Cli(const std::string& args, const std::string& stdin_file = {}) {
  std::string cmd = std::string(PROMPTLENS_CLI_PATH) + " " + args + " 2>&1";
  if (!stdin_file.empty()) cmd += " < " + stdin_file;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

size_t Lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

TEST(Cli, TabGenerateAndValidate) {
  promptlens::testing::TempDir dir;
  const std::string out = dir.File("bm.jsonl");
  auto gen = Cli("tab generate --config table1.cfg --seed 0 --out " + out);
  ASSERT_EQ(gen.exit_code, 0) << gen.out;
  // header plus one line per record
  EXPECT_EQ(Lines(promptlens::testing::ReadAll(out)), 1201u);
  auto val = Cli("tab validate --in " + out);
  EXPECT_EQ(val.exit_code, 0) << val.out;
  EXPECT_NE(val.out.find("1200 records, 0 issues"), std::string::npos) << val.out;
  EXPECT_EQ(Cli("tab validate " + out).exit_code, 0);
  EXPECT_EQ(Cli("tab generate --config nosuch --out " + out).exit_code, 1);
}

TEST(Cli, Detect) {
  auto hit = Cli("detect --sentence 'The wolf eats the rabbit. Also the cat.'");
  EXPECT_EQ(hit.exit_code, 0) << hit.out;
  EXPECT_NE(hit.out.find("Ellipsis"), std::string::npos) << hit.out;
  auto miss = Cli("detect --sentence 'hello world'");
  EXPECT_NE(miss.exit_code, 0);
}

TEST(Cli, OracleSessionScoresOne) {
  promptlens::testing::TempDir dir;
  const std::string bm = dir.File("bm.jsonl");
  ASSERT_EQ(Cli("tab generate --config table1 --seed 0 --out " + bm).exit_code, 0);
  auto run = Cli("session run --benchmark " + bm +
                 " --clarifier oracle --answers auto --limit 60 --log " + dir.File("s.jsonl"));
  ASSERT_EQ(run.exit_code, 0) << run.out;
  EXPECT_NE(run.out.find("BLEU 1.0000"), std::string::npos) << run.out;
  EXPECT_NE(run.out.find("ROUGE 1.0000"), std::string::npos) << run.out;
}

TEST(Cli, ScriptedAndInteractiveLogsMatch) {
  promptlens::testing::TempDir dir;
  const std::string bm = dir.File("bm.jsonl");
  ASSERT_EQ(Cli("tab generate --config table1 --seed 0 --out " + bm).exit_code, 0);
  // mixed actions: an answer, a 1-based select, a skip, repeated; one
  // question per session so "select 1" is the only valid selection
  {
    std::ofstream f(dir.File("answers.txt"));
    for (int i = 0; i < 12; ++i) f << "no\nselect 1\nskip\nyes\n";
  }
  const std::string common = "session run --benchmark " + bm +
                             " --clarifier oracle --mode one_question --limit 20 ";
  auto scripted = Cli(common + "--answers " + dir.File("answers.txt") + " --log " +
                      dir.File("a.jsonl"));
  ASSERT_EQ(scripted.exit_code, 0) << scripted.out;
  auto interactive = Cli(common + "--answers interactive --log " + dir.File("b.jsonl"),
                         dir.File("answers.txt"));
  ASSERT_EQ(interactive.exit_code, 0) << interactive.out;
  const std::string a = promptlens::testing::ReadAll(dir.File("a.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, promptlens::testing::ReadAll(dir.File("b.jsonl")));
}

TEST(Cli, RejectsUnknownFlagsAndCommands) {
  EXPECT_NE(Cli("detect --bogus x").exit_code, 0);
  EXPECT_NE(Cli("frobnicate").exit_code, 0);
  EXPECT_EQ(Cli("--help").exit_code, 0);
}

TEST(Cli, ClarifyWithOracleJson) {
  auto r = Cli("clarify --sentence 'An elephant and a bird flying' --clarifier oracle "
               "--mode multi_question --json");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("\"items\""), std::string::npos);
  EXPECT_NE(r.out.find("elephant"), std::string::npos);
}

TEST(Cli, ModelClarifierWithoutEndpointFails) {
  ::unsetenv("PROMPTLENS_LM_URL");
  auto r = Cli("clarify --sentence 'An elephant and a bird flying' --clarifier model");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("error ["), std::string::npos) << r.out;
}

}  // namespace
