#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

const std::string kBin = PHIA_BINARY;
const fs::path kDir = PHIA_SCENARIO_DIR;

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + kBin + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("phia_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("run writes trajectory and report") {
  Scratch s("run");
  const auto out = s.dir / "out";
  CHECK(run("run \"" + (kDir / "rlc_unmatched.json").string() + "\" --out \"" + out.string() + "\"", s.dir / "log") ==
        0);
  CHECK(fs::exists(out / "rlc_unmatched.csv"));
  CHECK(fs::exists(out / "rlc_unmatched.report.json"));
  CHECK(slurp(out / "rlc_unmatched.csv").rfind("t,x1_0,x2_0,zeta_0", 0) == 0);
}

TEST_CASE("check, equilibrium and fmt") {
  Scratch s("misc");
  CHECK(run("check \"" + (kDir / "rlc_mixed.json").string() + "\"", s.dir / "log") == 0);
  CHECK(run("equilibrium \"" + (kDir / "rlc_mixed.json").string() + "\"", s.dir / "eq") == 0);
  CHECK(slurp(s.dir / "eq").find("-0.7") != std::string::npos);
  CHECK(run("fmt \"" + (kDir / "rlc_mixed.json").string() + "\"", s.dir / "fmt") == 0);
  CHECK(slurp(s.dir / "fmt") == slurp(kDir / "rlc_mixed.json"));
}

TEST_CASE("usage and parse errors exit 1") {
  Scratch s("bad");
  CHECK(run("", s.dir / "log") == 1);
  CHECK(run("frobnicate", s.dir / "log") == 1);
  CHECK(run("run \"" + (s.dir / "missing.json").string() + "\"", s.dir / "log") == 1);
  std::ofstream(s.dir / "broken.json") << "{\n  \"schema\": 1,\n";
  CHECK(run("run \"" + (s.dir / "broken.json").string() + "\" --out \"" + s.dir.string() + "\"", s.dir / "log") == 1);
  CHECK(slurp(s.dir / "log").find("broken.json") != std::string::npos);
}

TEST_CASE("violated assumption exits 2") {
  Scratch s("assume");
  std::string text = slurp(kDir / "rlc_mixed.json");
  const auto at = text.find("\"E\": \"auto\"");
  REQUIRE(at != std::string::npos);
  text.replace(at, 11, "\"E\": [[0.0]]");
  std::ofstream(s.dir / "zero_e.json") << text;
  CHECK(run("run \"" + (s.dir / "zero_e.json").string() + "\" --out \"" + s.dir.string() + "\"", s.dir / "log") == 2);
}
