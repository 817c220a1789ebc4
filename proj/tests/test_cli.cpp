#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;  // stdout followed by stderr
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(SBMAI_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  for (std::size_t got; (got = fread(buf.data(), 1, buf.size(), pipe)) > 0;) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sbmai_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli("mi-exact --n 4").code == 0);
  const Run unknown = cli("frobnicate");
  CHECK(unknown.code == 64);
  CHECK(unknown.out.rfind("error: unknown_command:", 0) == 0);
  const Run big = cli("mi-exact --n 6");
  CHECK(big.code == 2);
  CHECK(big.out.rfind("error: size:", 0) == 0);
  CHECK(cli("mi-exact --r 0.8").code == 2);
  CHECK(cli("mi-exact --no-such-flag 3").code == 2);
  CHECK(cli("mi-exact --n four").code == 2);
  CHECK(cli("replica --format xml").code == 2);
  CHECK(cli("mi-exact --lambda 1 --delta 0.1").code == 2);
  CHECK(cli("mi-exact -o /nonexistent-dir/out.json").code == 73);
}

TEST_CASE("error reason is a single line") {
  const Run r = cli("mi-mc --r 0.8");
  CHECK(r.code == 2);
  CHECK(r.out.find('\n') == r.out.size() - 1);
}

TEST_CASE("zero bias gives zero information") {
  const Run r = cli("mi-exact --n 4 --delta 0");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["result"]["mi_per_node"].get<double>() == 0.0);
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["params"]["delta"].get<double>() == 0.0);
}

TEST_CASE("replica example above the transition") {
  const Run r = cli("replica --lambda 1.5 --r 0.5");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["result"]["q_star"].get<double>() > 0.0);
  CHECK(doc["result"]["psi_star"].get<double>() < 1.5 / 4.0);
  CHECK(doc["params"].is_null());
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  TempDir dir;
  const std::string a = dir / "a.csv", b = dir / "b.csv";
  REQUIRE(cli("interpolate --n 5 --steps 10 --instances 30 --seed 4 -o " + a).code == 0);
  REQUIRE(cli("interpolate --n 5 --steps 10 --instances 30 --seed 4 --threads 3 -o " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  REQUIRE(cli("interpolate --n 5 --steps 10 --instances 30 --seed 5 -o " + b).code == 0);
  CHECK(slurp(a) != slurp(b));
}

TEST_CASE("config round trip reproduces the output") {
  TempDir dir;
  const std::string a = dir / "a.json", b = dir / "b.json", c = dir / "c.csv", d = dir / "d.csv";
  REQUIRE(cli("generate --n 6 --d-n 3 --b-n 0.6 --seed 9 --dump-brackets -o " + a).code == 0);
  REQUIRE(cli("generate --config " + a + " -o " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a + ".brackets.csv") == slurp(b + ".brackets.csv"));

  REQUIRE(cli("mi-mc --n 6 --samples 40 --format csv -o " + c).code == 0);
  REQUIRE(cli("mi-mc --config " + c + " -o " + d).code == 0);
  CHECK(slurp(c) == slurp(d));
  // flags override the file
  REQUIRE(cli("mi-mc --config " + c + " --seed 2 -o " + d).code == 0);
  CHECK(slurp(c) != slurp(d));
  // a config from another command is refused
  CHECK(cli("ti --config " + c).code == 2);

  const std::string flat = dir / "flat.json";
  std::ofstream(flat) << R"({"n": 4, "delta": 0, "format": "csv", "threads": 2})";
  const Run r = cli("mi-exact --config " + flat);
  CHECK(r.code == 0);
  CHECK(r.out.find("\n0,0\n") != std::string::npos);
}

TEST_CASE("estimator failure writes partial outputs") {
  TempDir dir;
  const std::string out = dir / "ti.csv";
  // 40 sweeps from random starts at strong signal do not mix
  const Run r = cli("ti --n 20 --lambda 3 --intervals 2 --instances 2 --sweeps 40 --burn-in 4 --init random -o " + out);
  CHECK(r.code == 1);
  CHECK(r.out.find("error: estimator:") != std::string::npos);
  CHECK(fs::exists(out + ".partial"));
  CHECK(fs::exists(out + ".json.partial"));
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("help documents output columns") {
  const Run r = cli("ti --help");
  CHECK(r.code == 0);
  CHECK(r.out.find("t,q2_mean,q2_stderr,slope_mean,slope_stderr") != std::string::npos);
  CHECK(cli("phase-diagram --help").out.find("r,lambda,q_star,psi_star,order") != std::string::npos);
}
