#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fvpinn/cli.hpp"
#include "fvpinn/config.hpp"
#include "fvpinn/io.hpp"
#include "fvpinn/mesh.hpp"

using namespace fvpinn;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fvpinn_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

const char* kSmallCase = R"(
[case]
name = small

[mesh]
kind = channel
lx = 2
ly = 2
target = 1
reference_ws = 1
bed = slope
bed_slope = 0.01

[boundary]
inlet = inlet_discharge 0.4
exit = exit_wse 1

[physics]
manning = 0.03

[time]
t_end = 0.5

[teacher]
snapshots = 3

[network]
depth = 2
width = 6
fourier_features = 3
seed = 1

[train]
n_t = 2
adam_epochs = 15
lbfgs_epochs = 2
seed = 2

[loss]
ic = 1
bc = 1
)";

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing: comments, sections, typed reads") {
  const Config c = Config::parse(
      "# header\n[a]\nx = 1.5  # trailing\nname = hello world\nflag = yes\n\n[b]\nlist = 1, 2 ,3\nn = 7\n");
  CHECK(c.get_double("a.x") == 1.5);
  CHECK(c.get_string("a.name") == "hello world");
  CHECK(c.get_bool("a.flag", false));
  CHECK(c.get_int("b.n") == 7);
  CHECK(c.get_doubles("b.list", {}) == std::vector<double>{1, 2, 3});
  CHECK(c.get_double("b.missing", 4.0) == 4.0);
  CHECK(c.keys_in("a") == std::vector<std::string>{"flag", "name", "x"});
}

TEST_CASE("config parsing errors carry the line number") {
  auto msg = [](const std::string& text) {
    try {
      Config::parse(text, "f.cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(msg("x = 1\n").find("f.cfg:1") != std::string::npos);
  CHECK(msg("[a]\nx = 1\nx = 2\n").find("f.cfg:3: duplicate key 'a.x'") != std::string::npos);
  CHECK(msg("[a]\njunk\n").find("f.cfg:2") != std::string::npos);
  CHECK(msg("[a\n").find("unterminated") != std::string::npos);
  CHECK(msg("[a b]\n").find("bad section") != std::string::npos);
}

TEST_CASE("typed reads reject malformed values") {
  const Config c = Config::parse("[a]\nx = 1.5e\nb = maybe\nn = 2.5\n");
  CHECK_THROWS_AS(c.get_double("a.x"), ConfigError);
  CHECK_THROWS_AS(c.get_bool("a.b", true), ConfigError);
  CHECK_THROWS_AS(c.get_int("a.n"), ConfigError);
  CHECK_THROWS_AS(c.get_double("a.absent"), ConfigError);
}

TEST_CASE("overrides and unused-key tracking") {
  Config c = Config::parse("[train]\nlr = 1\nepochs = 3\n");
  c.apply_override("train.lr=0.5");
  c.apply_override("mesh.kind = strip");
  CHECK(c.get_double("train.lr") == 0.5);
  CHECK(c.get_string("mesh.kind") == "strip");
  CHECK(c.unused_keys() == std::vector<std::string>{"train.epochs"});
  CHECK_THROWS_AS(c.apply_override("nodot=1"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("train.lr"), ConfigError);
}

TEST_CASE("paths resolve against the config directory") {
  TempDir d("cfgpath");
  write(d / "c.cfg", "[data]\nobs = obs.csv\nabs = /tmp/x.csv\nempty =\n");
  const Config c = Config::load(d / "c.cfg");
  CHECK(fs::path(c.get_path("data.obs")) == d.path / "obs.csv");
  CHECK(c.get_path("data.abs") == "/tmp/x.csv");
  CHECK_FALSE(c.get_optional_path("data.empty").has_value());
  CHECK_FALSE(c.get_optional_path("data.none").has_value());
}

TEST_CASE("exit codes for usage, config and missing-input failures") {
  TempDir d("codes");
  write(d / "c.cfg", kSmallCase);

  Run r = cli({"frobnicate", d / "c.cfg"});
  CHECK(r.code == kExitUsage);
  CHECK(nlohmann::json::parse(r.err)["kind"] == "usage");
  CHECK(cli({}).code == kExitUsage);

  r = cli({"teacher", d / "nope.cfg"});
  CHECK(r.code == kExitMissingInput);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["status"] == "error");
  CHECK(j["code"] == 4);

  r = cli({"teacher", d / "c.cfg", "train.learning_rate=0.1", "--out", d / "o"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("train.learning_rate") != std::string::npos);

  r = cli({"teacher", d / "c.cfg", "boundary.nowhere=wall", "--out", d / "o"});
  CHECK(r.code == kExitConfig);

  r = cli({"teacher", d / "c.cfg", "network.depth=0", "--out", d / "o"});
  CHECK(r.code == kExitConfig);
}

TEST_CASE("landscape without a checkpoint fails cleanly and writes nothing") {
  TempDir d("landscape");
  write(d / "c.cfg", kSmallCase);
  const Run r = cli({"landscape", d / "c.cfg", "--out", d / "o"});
  CHECK(r.code == kExitMissingInput);
  CHECK_FALSE(fs::exists(d / "o/landscape.csv"));
}

TEST_CASE("mesh-gen writes a mesh that loads back") {
  TempDir d("meshgen");
  write(d / "c.cfg", kSmallCase);
  const Run r = cli({"mesh-gen", d / "c.cfg", "--out", d / "o"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["cells"] == 4);
  CHECK(j["audit_passes"] == true);
  const Mesh m = load_mesh(d / "o/mesh.swemesh");
  CHECK(m.n_cells() == 4);
  const int inlet = m.find_patch("inlet");
  REQUIRE(inlet >= 0);
  CHECK(m.patches[static_cast<std::size_t>(inlet)].kind == PatchKind::inlet_discharge);
  CHECK(m.patches[static_cast<std::size_t>(inlet)].value == 0.4);
}

TEST_CASE("teacher writes snapshots, an index and a conservation table") {
  TempDir d("teacher");
  write(d / "c.cfg", kSmallCase);
  const Run r = cli({"teacher", d / "c.cfg", "--out", d / "o"});
  REQUIRE(r.code == kExitOk);
  const std::string index = slurp(d / "o/teacher/index.csv");
  CHECK(index.rfind("index,time,file\n0,0,snap_0000.csv\n", 0) == 0);
  CHECK(fs::exists(d / "o/teacher/snap_0002.csv"));
  CHECK(slurp(d / "o/teacher/conservation.csv").rfind("t0,t1,mass_change,", 0) == 0);
  CHECK(nlohmann::json::parse(r.out)["snapshots"] == 3);
  for (const auto& e : fs::recursive_directory_iterator(d.path))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("gradcheck on a small network passes") {
  TempDir d("gradcheck");
  write(d / "c.cfg", kSmallCase);
  const Run r = cli({"gradcheck", d / "c.cfg", "--out", d / "o"});
  CHECK(r.code == kExitOk);
  const auto j = nlohmann::json::parse(slurp(d / "o/gradcheck.json"));
  CHECK(j["status"] == "ok");
  CHECK(j["max_rel_error"].get<double>() <= 1e-6);
}

TEST_CASE("train, eval and landscape are reproducible run to run") {
  TempDir d("train");
  write(d / "c.cfg", kSmallCase);
  for (const char* sub : {"a", "b"}) {
    const std::string out = d / sub;
    REQUIRE(cli({"train", d / "c.cfg", "--out", out}).code == kExitOk);
    REQUIRE(cli({"eval", d / "c.cfg", "--out", out}).code == kExitOk);
    REQUIRE(cli({"landscape", d / "c.cfg", "landscape.n_t=2", "--out", out}).code == kExitOk);
  }
  for (const char* f : {"checkpoint.txt", "history.csv", "errors.csv", "field_t0.5.csv", "landscape.csv"}) {
    CAPTURE(f);
    CHECK(slurp(d / (std::string("a/") + f)) == slurp(d / (std::string("b/") + f)));
  }
  CHECK(slurp(d / "a/field_t0.5.csv").rfind("cell_id,x,y,t,h,u,v,xi,uh,vh\n", 0) == 0);
  CHECK(slurp(d / "a/errors.csv").rfind("time,var,l2,linf\n", 0) == 0);

  // A different seed changes the result.
  REQUIRE(cli({"train", d / "c.cfg", "--seed", "9", "--out", d / "c"}).code == kExitOk);
  CHECK(slurp(d / "a/checkpoint.txt") != slurp(d / "c/checkpoint.txt"));
}

TEST_CASE("windowed training writes one checkpoint per window") {
  TempDir d("windows");
  write(d / "c.cfg", kSmallCase);
  REQUIRE(cli({"train", d / "c.cfg", "windows.count=2", "--out", d / "o"}).code == kExitOk);
  CHECK(fs::exists(d / "o/checkpoint_w0.txt"));
  CHECK(fs::exists(d / "o/checkpoint_w1.txt"));
  CHECK(cli({"eval", d / "c.cfg", "windows.count=2", "--out", d / "o"}).code == kExitOk);
  // Landscape is defined for a single network only.
  CHECK(cli({"landscape", d / "c.cfg", "windows.count=2", "--out", d / "o"}).code == kExitConfig);
}

TEST_CASE("non-finite training reports a numerical failure and keeps the last good state") {
  TempDir d("nan");
  write(d / "c.cfg", kSmallCase);
  const Run r = cli({"train", d / "c.cfg", "train.lr=1e300", "--out", d / "o"});
  CHECK(r.code == kExitNumerical);
  CHECK(fs::exists(d / "o/checkpoint_last_good.txt"));
  CHECK_FALSE(fs::exists(d / "o/checkpoint.txt"));
}

}  // TEST_SUITE
