#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "graphdiff/cli.hpp"
#include "graphdiff/dataset.hpp"
#include "graphdiff/trainer.hpp"

using namespace graphdiff;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

// dispatch() talks to std::cout / std::cerr; capture both per invocation.
RunResult run(const std::vector<std::string>& args) {
  std::stringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  int code = -1;
  try {
    code = dispatch(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(f.good());
  f << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

const char* kTinyConfig =
    "[model]\n"
    "layers = 1\n"
    "hidden = 8\n"
    "dropout = 0.0\n"
    "\n"
    "[train]\n"
    "epochs = 2\n"
    "batch_size = 6\n"
    "seed = 5\n";

// Builds a small marginal-reference checkpoint inside dir. Returns its path.
fs::path make_checkpoint(const fs::path& dir, const std::string& extra = "") {
  const fs::path data = dir / "train.jsonl";
  const fs::path ckpt = dir / "model.ckpt";
  const fs::path ini = dir / "run.ini";
  REQUIRE(run({"dataset", "--kind", "community", "--count", "12", "--seed",
               "3", "--out", data.string()})
              .code == 0);
  write_text(ini, std::string(kTinyConfig) + extra);
  REQUIRE(run({"train", "--config", ini.string(), "--data", data.string(),
               "--out", ckpt.string()})
              .code == 0);
  return ckpt;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

TEST_CASE("dataset runs are deterministic and seed-sensitive") {
  const fs::path dir = scratch("dataset");
  const auto a = dir / "a.jsonl";
  const auto b = dir / "b.jsonl";
  const auto c = dir / "c.jsonl";

  RunResult r = run({"dataset", "--kind", "community", "--count", "20",
                     "--seed", "9", "--out", a.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wrote 20 graphs") != std::string::npos);
  CHECK(run({"dataset", "--kind", "community", "--count", "20", "--seed", "9",
             "--out", b.string()})
            .code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(run({"dataset", "--kind", "community", "--count", "20", "--seed", "10",
             "--out", c.string()})
            .code == 0);
  CHECK(slurp(a) != slurp(c));
  CHECK(read_jsonl(a.string()).size() == 20);

  CHECK(run({"dataset", "--kind", "sbm", "--count", "5", "--seed", "1",
             "--out", (dir / "s.jsonl").string()})
            .code == 0);
  r = run({"dataset", "--kind", "ring", "--count", "5", "--seed", "1", "--out",
           (dir / "r.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--kind") != std::string::npos);
  CHECK(run({"dataset", "--kind", "sbm", "--count", "-3", "--seed", "1",
             "--out", (dir / "n.jsonl").string()})
            .code == 1);
}

TEST_CASE("train writes a loadable checkpoint and a loss log") {
  const fs::path dir = scratch("train");
  const auto data = dir / "train.jsonl";
  const auto ckpt = dir / "model.ckpt";
  const auto ini = dir / "run.ini";
  const auto log = dir / "loss.csv";
  REQUIRE(run({"dataset", "--kind", "community", "--count", "12", "--seed",
               "3", "--out", data.string()})
              .code == 0);
  write_text(ini, kTinyConfig);

  RunResult r = run({"train", "--config", ini.string(), "--data",
                     data.string(), "--out", ckpt.string(), "--log",
                     log.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("epoch 1/2") != std::string::npos);
  CHECK(r.out.find("epoch 2/2") != std::string::npos);
  CHECK(r.out.find("saved checkpoint") != std::string::npos);

  const LoadedCheckpoint loaded = load_checkpoint(ckpt.string());
  CHECK(loaded.step == 4);  // 12 graphs / batch 6 = 2 steps, 2 epochs
  CHECK(loaded.model.config().hidden == 8);
  CHECK(loaded.model.config().layers == 1);
  CHECK(loaded.train.epochs == 2);
  CHECK(loaded.train.seed == 5);
  CHECK(loaded.node_spec.kind == RefKind::kMarginal);
  CHECK_FALSE(loaded.sizes.empty());

  const auto rows = lines_of(slurp(log));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "step,epoch,mean_loss");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream ss(rows[i]);
    std::string step, epoch, loss;
    REQUIRE(std::getline(ss, step, ','));
    REQUIRE(std::getline(ss, epoch, ','));
    REQUIRE(std::getline(ss, loss, ','));
    CHECK(step == std::to_string(i));
    CHECK(epoch == (i <= 2 ? "1" : "2"));
    CHECK(std::isfinite(std::stod(loss)));
  }
}

TEST_CASE("training reruns are byte-identical") {
  const fs::path dir = scratch("train_det");
  const auto data = dir / "train.jsonl";
  const auto ini = dir / "run.ini";
  REQUIRE(run({"dataset", "--kind", "community", "--count", "12", "--seed",
               "3", "--out", data.string()})
              .code == 0);
  write_text(ini, kTinyConfig);

  for (int rep = 1; rep <= 2; ++rep) {
    const auto ckpt = dir / ("model" + std::to_string(rep) + ".ckpt");
    const auto log = dir / ("loss" + std::to_string(rep) + ".csv");
    REQUIRE(run({"train", "--config", ini.string(), "--data", data.string(),
                 "--out", ckpt.string(), "--log", log.string()})
                .code == 0);
  }
  CHECK(slurp(dir / "model1.ckpt") == slurp(dir / "model2.ckpt"));
  CHECK(slurp(dir / "loss1.csv") == slurp(dir / "loss2.csv"));
}

TEST_CASE("sampling respects checkpoint provenance") {
  const fs::path dir = scratch("sample");
  const fs::path ckpt = make_checkpoint(dir);
  const auto gen = dir / "gen.jsonl";

  RunResult r = run({"sample", "--ckpt", ckpt.string(), "--num", "4",
                     "--steps", "5", "--seed", "7", "--out", gen.string()});
  REQUIRE(r.code == 0);
  CHECK(read_jsonl(gen.string()).size() == 4);

  const fs::path meta_path = gen.string() + ".meta.json";
  REQUIRE(fs::exists(meta_path));
  const auto meta = nlohmann::json::parse(slurp(meta_path));
  CHECK(meta.at("seed").get<std::uint64_t>() == 7);
  CHECK(meta.at("steps").get<int>() == 5);
  char expect[17];
  std::snprintf(expect, sizeof(expect), "%016llx",
                static_cast<unsigned long long>(fnv1a64(slurp(ckpt))));
  CHECK(meta.at("checkpoint_hash").get<std::string>() == expect);

  const auto gen2 = dir / "gen2.jsonl";
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "4", "--steps", "5",
             "--seed", "7", "--out", gen2.string()})
            .code == 0);
  CHECK(slurp(gen) == slurp(gen2));
  const auto gen3 = dir / "gen3.jsonl";
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "4", "--steps", "5",
             "--seed", "8", "--out", gen3.string()})
            .code == 0);
  CHECK(slurp(gen) != slurp(gen3));

  // Noise overrides that differ from the stored run need --force.
  r = run({"sample", "--ckpt", ckpt.string(), "--num", "1", "--steps", "2",
           "--reference", "uniform", "--out", (dir / "x.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--force") != std::string::npos);
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "1", "--steps", "2",
             "--reference", "uniform", "--force", "--out",
             (dir / "x.jsonl").string()})
            .code == 0);
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "1", "--steps", "2",
             "--alpha", "2.0", "--out", (dir / "y.jsonl").string()})
            .code == 1);
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "1", "--steps", "2",
             "--alpha", "1.0", "--out", (dir / "y.jsonl").string()})
            .code == 0);
  CHECK(run({"sample", "--ckpt", ckpt.string(), "--num", "1", "--steps", "0",
             "--out", (dir / "z.jsonl").string()})
            .code == 1);
}

TEST_CASE("uniform checkpoints cannot be forced to marginal") {
  const fs::path dir = scratch("sample_uniform");
  const fs::path ckpt = make_checkpoint(dir, "\n[noise]\nreference = uniform\n");
  CHECK(load_checkpoint(ckpt.string()).node_spec.kind == RefKind::kUniform);

  RunResult r = run({"sample", "--ckpt", ckpt.string(), "--num", "1",
                     "--steps", "2", "--reference", "marginal", "--force",
                     "--out", (dir / "g.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no marginal estimates") != std::string::npos);
}

TEST_CASE("evaluation selects metrics and rejects empty input") {
  const fs::path dir = scratch("eval");
  const auto gen = dir / "gen.jsonl";
  const auto train = dir / "train.jsonl";
  const auto test = dir / "test.jsonl";
  REQUIRE(run({"dataset", "--kind", "sbm", "--count", "6", "--seed", "1",
               "--out", gen.string()})
              .code == 0);
  REQUIRE(run({"dataset", "--kind", "community", "--count", "10", "--seed",
               "2", "--out", train.string()})
              .code == 0);
  REQUIRE(run({"dataset", "--kind", "community", "--count", "5", "--seed", "3",
               "--out", test.string()})
              .code == 0);

  const auto report = dir / "report.json";
  REQUIRE(run({"eval", "--gen", gen.string(), "--train", train.string(),
               "--test", test.string(), "--out", report.string()})
              .code == 0);
  auto j = nlohmann::json::parse(slurp(report));
  CHECK(j.contains("deg"));
  CHECK(j.contains("clus"));
  CHECK(j.contains("orb"));
  CHECK(j.at("num_generated") == 6);
  CHECK(j.at("num_train") == 10);
  CHECK(j.at("num_test") == 5);
  CHECK(j.at("uniqueness").get<double>() == doctest::Approx(1.0));

  const auto report2 = dir / "report2.json";
  REQUIRE(run({"eval", "--gen", gen.string(), "--train", train.string(),
               "--test", test.string(), "--out", report2.string()})
              .code == 0);
  CHECK(slurp(report) == slurp(report2));

  const auto deg_only = dir / "deg.json";
  REQUIRE(run({"eval", "--gen", gen.string(), "--train", train.string(),
               "--test", test.string(), "--metrics", "deg", "--out",
               deg_only.string()})
              .code == 0);
  j = nlohmann::json::parse(slurp(deg_only));
  CHECK(j.contains("deg"));
  CHECK_FALSE(j.contains("clus"));
  CHECK_FALSE(j.contains("orb"));

  const auto two = dir / "two.json";
  REQUIRE(run({"eval", "--gen", gen.string(), "--train", train.string(),
               "--test", test.string(), "--metrics", "deg,orbit", "--out",
               two.string()})
              .code == 0);
  j = nlohmann::json::parse(slurp(two));
  CHECK(j.contains("deg"));
  CHECK_FALSE(j.contains("clus"));
  CHECK(j.contains("orb"));

  RunResult r = run({"eval", "--gen", gen.string(), "--train", train.string(),
                     "--test", test.string(), "--metrics", "entropy", "--out",
                     (dir / "m.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown metric") != std::string::npos);

  const auto empty = dir / "empty.jsonl";
  write_text(empty, "");
  r = run({"eval", "--gen", empty.string(), "--train", train.string(),
           "--test", test.string(), "--out", (dir / "e.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("empty generated set") != std::string::npos);
}

TEST_CASE("usage and file errors exit with the right codes") {
  const fs::path dir = scratch("errors");
  const auto data = dir / "train.jsonl";
  REQUIRE(run({"dataset", "--kind", "community", "--count", "4", "--seed", "1",
               "--out", data.string()})
              .code == 0);

  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"dataset", "--kind", "sbm", "--count", "4"}).code == 1);
  RunResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("dataset") != std::string::npos);

  CHECK(run({"train", "--config", (dir / "missing.ini").string(), "--data",
             data.string(), "--out", (dir / "m.ckpt").string()})
            .code == 2);
  CHECK(run({"train", "--data", (dir / "missing.jsonl").string(), "--out",
             (dir / "m.ckpt").string()})
            .code == 2);

  const auto bad_key = dir / "bad_key.ini";
  write_text(bad_key, "[train]\nepochz = 3\n");
  RunResult r = run({"train", "--config", bad_key.string(), "--data",
                     data.string(), "--out", (dir / "m.ckpt").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("train.epochz") != std::string::npos);

  const auto bad_value = dir / "bad_value.ini";
  write_text(bad_value, "[train]\nepochs = two\n");
  CHECK(run({"train", "--config", bad_value.string(), "--data", data.string(),
             "--out", (dir / "m.ckpt").string()})
            .code == 1);

  const auto junk = dir / "junk.ckpt";
  write_text(junk, "not a checkpoint");
  CHECK(run({"sample", "--ckpt", junk.string(), "--num", "1", "--steps", "2",
             "--out", (dir / "g.jsonl").string()})
            .code == 1);
}

TEST_CASE("full pipeline produces a scored report") {
  const fs::path dir = scratch("pipeline");
  const auto train = dir / "train.jsonl";
  const auto test = dir / "test.jsonl";
  const auto ini = dir / "run.ini";
  const auto ckpt = dir / "model.ckpt";
  const auto gen = dir / "gen.jsonl";
  const auto report = dir / "report.json";

  REQUIRE(run({"dataset", "--kind", "community", "--count", "16", "--seed",
               "21", "--out", train.string()})
              .code == 0);
  REQUIRE(run({"dataset", "--kind", "community", "--count", "6", "--seed",
               "22", "--out", test.string()})
              .code == 0);
  write_text(ini, kTinyConfig);
  REQUIRE(run({"train", "--config", ini.string(), "--data", train.string(),
               "--out", ckpt.string()})
              .code == 0);
  REQUIRE(run({"sample", "--ckpt", ckpt.string(), "--num", "5", "--steps", "6",
               "--seed", "4", "--out", gen.string()})
              .code == 0);
  REQUIRE(run({"eval", "--gen", gen.string(), "--train", train.string(),
               "--test", test.string(), "--out", report.string()})
              .code == 0);

  const auto j = nlohmann::json::parse(slurp(report));
  for (const char* key : {"deg", "clus", "orb"}) {
    REQUIRE(j.contains(key));
    CHECK(j.at(key).at("raw").get<double>() >= 0.0);
    CHECK(j.at(key).at("baseline").get<double>() >= 0.0);
  }
  CHECK(j.at("uniqueness").get<double>() >= 0.0);
  CHECK(j.at("uniqueness").get<double>() <= 1.0);
  CHECK(j.at("novelty").get<double>() >= 0.0);
  CHECK(j.at("novelty").get<double>() <= 1.0);
}
