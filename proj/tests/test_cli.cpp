// Exercises the installed CLI surface: exit codes, help, and the global
// determinism contract across reruns with identical flags.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args, std::string* out = nullptr) {
  fs::path out_file = fs::path("cli_work") / "stdout.txt";
  std::string cmd = std::string(RELDETECT_BIN) + " " + args + " > " + out_file.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream in(out_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
#ifdef _WIN32
  return status;
#else
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Setup {
  Setup() {
    fs::remove_all("cli_work");
    fs::create_directories("cli_work");
  }
};
Setup& setup() {
  static Setup s;
  return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes a header plus one line per scene") {
  setup();
  CHECK(cli("gen --scenes 2 --seed 7 --out cli_work/d.jsonl") == 0);
  std::string text = slurp("cli_work/d.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("help exits zero on every subcommand") {
  setup();
  CHECK(cli("--help") == 0);
  for (const char* sub : {"gen", "annotate", "train", "infer", "eval", "pipeline"}) {
    std::string out;
    CHECK(cli(std::string(sub) + " --help", &out) == 0);
    CHECK(out.find("--help") != std::string::npos);
  }
}

TEST_CASE("validation failures exit 1 and missing files exit 2") {
  setup();
  CHECK(cli("gen --scenes 2 --out cli_work/x.jsonl --bogus") == 1);
  CHECK(cli("eval --pred nope.jsonl --gt nope.jsonl") == 2);
  CHECK(cli("nonsense-subcommand") == 1);
}

TEST_CASE("eval of identical files prints mAP 1.000000") {
  setup();
  CHECK(cli("gen --scenes 4 --seed 9 --out cli_work/g.jsonl") == 0);
  std::string out;
  CHECK(cli("eval --pred cli_work/g.jsonl --gt cli_work/g.jsonl --space fine", &out) == 0);
  CHECK(out.find("mAP") != std::string::npos);
  CHECK(out.find("1.000000") != std::string::npos);
}

TEST_CASE("identical flags give byte-identical outputs across stages") {
  setup();
  CHECK(cli("gen --scenes 12 --seed 5 --out cli_work/a.jsonl --kb-out cli_work/kb.txt") == 0);
  CHECK(cli("gen --scenes 12 --seed 5 --out cli_work/b.jsonl") == 0);
  CHECK(slurp("cli_work/a.jsonl") == slurp("cli_work/b.jsonl"));

  CHECK(cli("annotate --data cli_work/a.jsonl --kb cli_work/kb.txt --fraction 0.5 --seed 3"
            " --out cli_work/ann1.jsonl --selection cli_work/sel1.json") == 0);
  CHECK(cli("annotate --data cli_work/a.jsonl --kb cli_work/kb.txt --fraction 0.5 --seed 3"
            " --out cli_work/ann2.jsonl --selection cli_work/sel2.json") == 0);
  CHECK(slurp("cli_work/ann1.jsonl") == slurp("cli_work/ann2.jsonl"));
  CHECK(slurp("cli_work/sel1.json") == slurp("cli_work/sel2.json"));

  CHECK(cli("train --data cli_work/ann1.jsonl --selection cli_work/sel1.json"
            " --out cli_work/m1.json") == 0);
  CHECK(cli("train --data cli_work/ann2.jsonl --selection cli_work/sel2.json"
            " --out cli_work/m2.json") == 0);
  CHECK(slurp("cli_work/m1.json") == slurp("cli_work/m2.json"));

  CHECK(cli("infer --data cli_work/a.jsonl --model cli_work/m1.json --kb cli_work/kb.txt"
            " --out cli_work/p1.jsonl --emit-graph cli_work/g1.json") == 0);
  CHECK(cli("infer --data cli_work/a.jsonl --model cli_work/m1.json --kb cli_work/kb.txt"
            " --out cli_work/p2.jsonl --emit-graph cli_work/g2.json") == 0);
  CHECK(slurp("cli_work/p1.jsonl") == slurp("cli_work/p2.jsonl"));
  CHECK(slurp("cli_work/g1.json") == slurp("cli_work/g2.json"));
}

TEST_CASE("gen honors a config file without explicit flags") {
  setup();
  std::ofstream cfg("cli_work/gen.json");
  cfg << R"({"num_scenes":5,"seed":3,"jitter_std":0.0})";
  cfg.close();
  CHECK(cli("gen --config cli_work/gen.json --out cli_work/c.jsonl") == 0);
  std::string text = slurp("cli_work/c.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  // explicit flags still win over the config file
  CHECK(cli("gen --config cli_work/gen.json --scenes 2 --out cli_work/c2.jsonl") == 0);
  std::string text2 = slurp("cli_work/c2.jsonl");
  CHECK(std::count(text2.begin(), text2.end(), '\n') == 3);

  std::ofstream bad("cli_work/bad.json");
  bad << R"({"num_scenes":5,"wat":1})";
  bad.close();
  CHECK(cli("gen --config cli_work/bad.json --out cli_work/c3.jsonl") == 1);
}

TEST_CASE("prediction files parse back and re-evaluate") {
  setup();
  CHECK(cli("gen --scenes 10 --seed 21 --out cli_work/d.jsonl --kb-out cli_work/kb.txt") == 0);
  CHECK(cli("pipeline --data cli_work/d.jsonl --kb cli_work/kb.txt --fraction 1.0 --seed 21"
            " --out-dir cli_work/run") == 0);
  std::string out;
  CHECK(cli("eval --pred cli_work/run/predictions.jsonl --gt cli_work/d.jsonl --space coarse",
            &out) == 0);
  CHECK(out.find("mAP") != std::string::npos);
}

}  // TEST_SUITE
