#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "beliefdyn/cli.hpp"

namespace fs = std::filesystem;
using beliefdyn::cli::run;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "beliefdyn");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("beliefdyn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Small but well-posed grid keeps the fits fast.
const std::vector<std::string> kSmallGrid = {
    "--magnitudes", "-2,-1,-0.5,0,0.5,1,2", "--shots", "0,1,2,4,8,16,32,64"};
const std::vector<std::string> kQuickFit = {"--basin-hops", "100", "--top-k", "10"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("simulate writes records and its resolved config") {
  const auto dir = fresh_dir("simulate");
  auto r = invoke(concat({"simulate", "--params", "1,-4,0.8,0.3", "--exact", "--output-dir",
                          dir.string()}, kSmallGrid));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "records.csv"));
  const auto cfg = read_json(dir / "resolved_config.json");
  CHECK(cfg["command"] == "simulate");
  CHECK(cfg["exact"] == true);
  CHECK(cfg["params"]["gamma"] == 0.8);
  CHECK(cfg["magnitudes"].size() == 7);

  r = invoke({"simulate", "--params", "1,-4,0.8,0.3", "--format", "jsonl", "--seed", "3",
              "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "records.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto rec = json::parse(line);
    CHECK(rec.contains("concept_consistent"));
    ++rows;
  }
  CHECK(rows == 825);
}

TEST_CASE("fit recovers parameters end to end") {
  const auto dir = fresh_dir("fit");
  REQUIRE(invoke(concat({"simulate", "--params", "1,-4,0.8,0.3", "--exact", "--output-dir",
                         (dir / "sim").string()}, kSmallGrid)).code == 0);
  const auto r = invoke(concat({"fit", "--input", (dir / "sim" / "records.csv").string(),
                                "--output-dir", (dir / "fit").string()}, kQuickFit));
  REQUIRE(r.code == 0);
  const auto report = read_json(dir / "fit" / "fit_report.json");
  REQUIRE(report["fits"].size() == 1);
  const auto& f = report["fits"][0];
  CHECK(f["n_cells"] == 56);
  CHECK(f["params"]["a"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(f["params"]["alpha"].get<double>() == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(f["candidate_losses"].size() == 10);
  CHECK(f["phase_boundary"].size() == 7);
  CHECK(fs::exists(dir / "fit" / "predictions_synthetic__belief-model.csv"));
  CHECK(fs::exists(dir / "fit" / "phase_boundary_synthetic__belief-model.csv"));
  CHECK(read_json(dir / "fit" / "resolved_config.json")["fit_config"]["refine_top_k"] == 10);

  SUBCASE("boundary from the fit report") {
    const auto b = invoke({"boundary", "--input", (dir / "fit" / "fit_report.json").string(),
                           "--output-dir", (dir / "bnd").string()});
    REQUIRE(b.code == 0);
    CHECK(fs::exists(dir / "bnd" / "heatmap_synthetic__belief-model.csv"));
    CHECK(fs::exists(dir / "bnd" / "phase_boundary_synthetic__belief-model.csv"));
  }
}

TEST_CASE("crossval reports held-out correlation") {
  const auto dir = fresh_dir("crossval");
  REQUIRE(invoke(concat({"simulate", "--params", "1,-4,0.8,0.3", "--exact", "--output-dir",
                         dir.string()}, kSmallGrid)).code == 0);
  const auto r = invoke(concat({"crossval", "--input", (dir / "records.csv").string(), "--folds",
                                "3", "--output-dir", dir.string()}, kQuickFit));
  REQUIRE(r.code == 0);
  const auto report = read_json(dir / "cv_report.json");
  const auto& res = report["results"][0];
  CHECK(res["pooled_pearson_r"].get<double>() >= 0.999);
  CHECK(res["per_fold"].size() == 3);
  CHECK(fs::exists(dir / "heldout_synthetic__belief-model.csv"));

  SUBCASE("more folds than magnitudes is a validation error") {
    const auto bad = invoke({"crossval", "--input", (dir / "records.csv").string(), "--folds", "8",
                             "--output-dir", dir.string()});
    CHECK(bad.code == 2);
  }
}

TEST_CASE("crossval with constant observations exits with a numerical failure") {
  const auto dir = fresh_dir("constant");
  std::ofstream csv(dir / "flat.csv");
  csv << "dataset_id,model_id,layer,magnitude,shots,trials,concept_consistent\n";
  for (int m = -2; m <= 2; ++m)
    for (int n : {0, 2, 8, 32}) csv << "d,m,0," << m << "," << n << ",4,1\n";
  csv.close();
  const auto r = invoke(concat({"crossval", "--input", (dir / "flat.csv").string(), "--folds", "5",
                                "--output-dir", dir.string()}, kQuickFit));
  CHECK(r.code == 3);
  const auto report = read_json(dir / "cv_report.json");
  CHECK(report["results"][0]["pooled_pearson_r"].is_null());
  CHECK_FALSE(report["results"][0]["pearson_error"].get<std::string>().empty());
}

TEST_CASE("boundary from inline parameters") {
  const auto dir = fresh_dir("boundary");
  const auto r = invoke({"boundary", "--params", "1,-4,0.8,0.3", "--magnitudes", "0,4",
                         "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "phase_boundary.csv");
  REQUIRE(text.rfind("magnitude,n_star\n0,", 0) == 0);
  CHECK(text.substr(text.size() - 4) == "4,0\n");
  CHECK(std::stod(text.substr(19)) == doctest::Approx(9.9661765781934415).epsilon(1e-13));
  CHECK(fs::exists(dir / "heatmap.csv"));
  CHECK(read_json(dir / "resolved_config.json")["param_sets"].size() == 1);
}

TEST_CASE("lrh-verify passes its checks") {
  const auto dir = fresh_dir("lrh");
  const auto r = invoke({"lrh-verify", "--caa-samples", "100000", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto report = read_json(dir / "lrh_report.json");
  for (const auto& [name, ok] : report["checks"].items()) CHECK_MESSAGE(ok == true, name);

  SUBCASE("a failed check exits 3") {
    const auto bad = invoke({"lrh-verify", "--caa-samples", "10", "--output-dir", dir.string()});
    CHECK(bad.code == 3);
    CHECK(read_json(dir / "lrh_report.json")["checks"]["caa_recovery"] == false);
  }
}

TEST_CASE("validation failures exit 2") {
  const auto dir = fresh_dir("invalid");
  const std::string out = dir.string();
  CHECK(invoke({"boundary", "--params", "1,-4,0.8,1.0", "--output-dir", out}).code == 2);
  CHECK(invoke({"boundary", "--params", "1,-4,0.8", "--output-dir", out}).code == 2);
  CHECK(invoke({"boundary", "--output-dir", out}).code == 2);
  CHECK(invoke({"simulate", "--params", "1,-4,0.8,0.3", "--trials", "0", "--output-dir", out}).code == 2);
  CHECK(invoke({"simulate", "--params", "1,-4,0.8,0.3", "--shots", "1.5", "--output-dir", out}).code == 2);
  CHECK(invoke({"lrh-verify", "--dim", "4", "--concepts", "5", "--output-dir", out}).code == 2);
  CHECK(invoke({"lrh-verify", "--mode", "sideways", "--output-dir", out}).code == 2);
  CHECK(invoke({"fit", "--output-dir", out}).code == 2);
  CHECK(invoke({"fit", "--input", (dir / "missing.csv").string(), "--output-dir", out}).code == 2);
  CHECK(invoke({"fit", "--bins", "0", "--input", "x.csv", "--output-dir", out}).code == 2);
  CHECK(invoke({"fit", "--unknown-flag"}).code == 2);
  CHECK(invoke({}).code == 2);

  std::ofstream(dir / "bad.csv") << "dataset_id,model_id,layer,magnitude,shots,trials,concept_consistent\n"
                                 << "d,m,0,0,1,10,12\n";
  const auto bad = invoke({"fit", "--input", (dir / "bad.csv").string(), "--output-dir", out});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("row 1") != std::string::npos);

  std::ofstream(dir / "empty.csv") << "";
  CHECK(invoke({"fit", "--input", (dir / "empty.csv").string(), "--output-dir", out}).code == 2);
}

TEST_CASE("help exits 0") {
  const auto r = invoke({"fit", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--input") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
  const auto dir = fresh_dir("env");
  ::setenv(beliefdyn::cli::kOutputDirEnv, dir.string().c_str(), 1);
  const auto r = invoke({"boundary", "--params", "1,-4,0.8,0.3", "--magnitudes", "0"});
  ::unsetenv(beliefdyn::cli::kOutputDirEnv);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "phase_boundary.csv"));

  // an explicit flag wins
  const auto other = fresh_dir("env_flag");
  ::setenv(beliefdyn::cli::kOutputDirEnv, dir.string().c_str(), 1);
  invoke({"boundary", "--params", "1,-4,0.8,0.3", "--magnitudes", "0", "--output-dir", other.string()});
  ::unsetenv(beliefdyn::cli::kOutputDirEnv);
  CHECK(fs::exists(other / "phase_boundary.csv"));
}

TEST_CASE("config file with flag overrides") {
  const auto dir = fresh_dir("config");
  std::ofstream(dir / "run.toml") << "[boundary]\nparams = \"1,-4,0.8,0.3\"\nmagnitudes = \"0,1\"\n";
  auto r = invoke({"boundary", "--config", (dir / "run.toml").string(), "--output-dir",
                   (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(dir / "a" / "resolved_config.json")["magnitudes"] == json::array({0.0, 1.0}));

  r = invoke({"boundary", "--config", (dir / "run.toml").string(), "--magnitudes", "2",
              "--output-dir", (dir / "b").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(dir / "b" / "resolved_config.json")["magnitudes"] == json::array({2.0}));
}

TEST_CASE("identical invocations give byte-identical files") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  for (const auto& dir : {a, b}) {
    const std::string d = dir.string();
    REQUIRE(invoke(concat({"simulate", "--params", "0.8,-3,0.6,0.4", "--seed", "5", "--trials", "50",
                           "--output-dir", d}, kSmallGrid)).code == 0);
    REQUIRE(invoke(concat({"fit", "--input", d + "/records.csv", "--seed", "2", "--output-dir",
                           d + "/fit"}, kQuickFit)).code == 0);
  }
  // different worker count must not change anything either
  REQUIRE(invoke(concat({"fit", "--input", a.string() + "/records.csv", "--seed", "2", "--workers",
                         "1", "--output-dir", a.string() + "/fit1"}, kQuickFit)).code == 0);
  for (const char* f : {"records.csv", "resolved_config.json", "fit/fit_report.json",
                        "fit/predictions_synthetic__belief-model.csv"})
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  CHECK(slurp(a / "fit/fit_report.json") == slurp(a / "fit1/fit_report.json"));
}
