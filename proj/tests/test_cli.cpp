// Drives the command-line front end in-process.

#include "sevot/cli.hpp"
#include "sevot/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace sevot;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "sevot");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sevot_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kThreeClassGrouping = R"({
  "classes": [{"name": "road", "group": 1}, {"name": "building", "group": 1},
              {"name": "person", "group": 2}],
  "weights": {"1": 1, "2": 4}
})";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"loss-eval"}).code == 2);
}

TEST_CASE("build-matrix") {
  const auto dir = scratch("build");
  io::write_text(dir / "unit.json",
                 R"({"classes":[{"name":"a","group":1},{"name":"b","group":1}],"weights":{"1":1}})");
  SUBCASE("unit grouping gives the 0/1 matrix") {
    const Run r = run({"--out-dir", dir.string(), "build-matrix", "--grouping",
                       (dir / "unit.json").string(), "--out", "d.json"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("n=2") != std::string::npos);
    const auto d = io::load_ground_matrix(dir / "d.json");
    CHECK(d.entries() == (Matrix<double>(2, 2) << 0, 1, 1, 0).finished());
  }
  SUBCASE("four groups under power(2)") {
    io::write_text(dir / "four.json", io::to_json(cityscapes_grouping()).dump());
    const Run r = run({"build-matrix", "--grouping", (dir / "four.json").string(), "--metric",
                       "power:2", "--out", (dir / "sq.json").string(), "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto d = io::load_ground_matrix(dir / "sq.json");
    for (Index i = 0; i < d.size(); ++i) {
      for (Index j = 0; j < d.size(); ++j) {
        if (i != j) CHECK((d(i, j) == 1 || d(i, j) == 4 || d(i, j) == 9 || d(i, j) == 16));
      }
    }
  }
  SUBCASE("malformed JSON") {
    io::write_text(dir / "bad.json", "{\"classes\": [");
    const Run r = run({"build-matrix", "--grouping", (dir / "bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("malformed JSON") != std::string::npos);
  }
  SUBCASE("invalid grouping lists the offending classes") {
    io::write_text(dir / "nogroup.json",
                   R"({"classes":[{"name":"a","group":1},{"name":"zebra","group":9}],"weights":{"1":1}})");
    const Run r = run({"build-matrix", "--grouping", (dir / "nogroup.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("zebra") != std::string::npos);
  }
  SUBCASE("unknown metric") {
    const Run r = run({"build-matrix", "--grouping", (dir / "unit.json").string(), "--metric",
                       "cubic", "--out", (dir / "x.json").string()});
    CHECK(r.code == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("loss-eval") {
  const auto dir = scratch("loss");
  io::write_text(dir / "g.json", kThreeClassGrouping);
  const std::string grouping = (dir / "g.json").string();

  SUBCASE("one-hot prediction at the target costs nothing") {
    const Run r = run({"loss-eval", "--probs", "0,1,0", "--target", "1", "--grouping", grouping});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["loss"] == 0.0);
  }
  SUBCASE("equal CE, ordered Wasserstein") {
    const Run r = run({"loss-eval", "--probs", "0.6,0.4,0", "--probs", "0.6,0,0.4", "--target",
                       "0", "--grouping", grouping});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["ce_equal"] == true);
    CHECK(j["loss_order"] == json::array({0, 1}));
    CHECK(j["results"][1]["loss"].get<double>() > j["results"][0]["loss"].get<double>());
  }
  SUBCASE("oracle gap on a one-hot target") {
    const Run r = run({"loss-eval", "--probs", "0.2,0.5,0.3", "--target", "2", "--grouping",
                       grouping, "--oracle"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["oracle_gap"].get<double>() <= 1e-9);
  }
  SUBCASE("soft targets use the exact solver; sinkhorn reports its residual") {
    const Run exact = run({"loss-eval", "--probs", "0.2,0.5,0.3", "--target", "0", "--smooth",
                           "0.3", "--grouping", grouping});
    REQUIRE(exact.code == 0);
    const Run sk = run({"loss-eval", "--loss", "sinkhorn", "--epsilon", "0.05", "--probs",
                        "0.2,0.5,0.3", "--target", "0", "--smooth", "0.3", "--grouping", grouping,
                        "--oracle"});
    REQUIRE(sk.code == 0);
    const json j = json::parse(sk.out);
    CHECK(j["marginal_residual"].get<double>() <= 1e-6);
    CHECK(j["oracle_loss"].get<double>() ==
          doctest::Approx(json::parse(exact.out)["loss"].get<double>()).epsilon(1e-12));
  }
  SUBCASE("logits are softmaxed") {
    const Run r = run({"loss-eval", "--logits", "--probs", "0,0", "--target", "0", "--loss", "ce"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["loss"].get<double>() == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("l1 with a target histogram") {
    const Run r = run({"loss-eval", "--loss", "l1", "--probs", "0.5,0.5,0", "--target-probs",
                       "0,0.5,0.5", "--oracle"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["loss"].get<double>() == doctest::Approx(0.5));
    CHECK(json::parse(r.out)["oracle_gap"].get<double>() <= 1e-9);
  }
  SUBCASE("shape and validation failures exit 2") {
    CHECK(run({"loss-eval", "--probs", "0.5,0.5", "--target", "0", "--grouping", grouping}).code == 2);
    CHECK(run({"loss-eval", "--probs", "0.5,0.6,0", "--target", "0"}).code == 2);
    CHECK(run({"loss-eval", "--probs", "0.5,abc", "--target", "0"}).code == 2);
    CHECK(run({"loss-eval", "--probs", "0.5,0.5", "--target", "5"}).code == 2);
    CHECK(run({"loss-eval", "--probs", "0.5,0.5"}).code == 2);
    CHECK(run({"loss-eval", "--probs", "0.5,0.5", "--target-probs", "1,0", "--loss", "ce"}).code == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("train, evaluate and reproducibility") {
  const auto dir = scratch("train");
  io::write_text(dir / "g.json", kThreeClassGrouping);
  io::write_text(dir / "ce.json", R"({
    "scene": {"preset": "overlapping_three_class", "train_pixels": 300, "val_pixels": 100,
              "test_pixels": 300, "seed": 3},
    "grouping": "g.json",
    "loss": "ce", "learning_rate": 0.5, "epochs": 20, "seed": 3
  })");
  const std::string config = (dir / "ce.json").string();

  const Run a = run({"--out-dir", (dir / "a").string(), "train", "--config", config});
  const Run b = run({"--out-dir", (dir / "b").string(), "train", "--config", config});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  for (const char* f : {"model.json", "stats.jsonl", "report.txt"}) {
    CHECK(io::read_text(dir / "a" / f) == io::read_text(dir / "b" / f));
  }
  json ra = io::load_json(dir / "a" / "report.json");
  json rb = io::load_json(dir / "b" / "report.json");
  CHECK(ra.contains("generated_at"));
  ra.erase("generated_at");
  rb.erase("generated_at");
  CHECK(ra == rb);
  CHECK(io::read_text(dir / "a" / "report.txt").find("Group2") != std::string::npos);

  SUBCASE("global seed overrides the config") {
    const Run c = run({"--seed", "4", "--out-dir", (dir / "c").string(), "train", "--config", config});
    REQUIRE(c.code == 0);
    CHECK(c.out != a.out);
  }
  SUBCASE("warm start continues from a saved model") {
    const Run w = run({"--out-dir", (dir / "w").string(), "train", "--config", config,
                       "--warm-start", (dir / "a" / "model.json").string()});
    REQUIRE(w.code == 0);
    CHECK(json::parse(w.out)["initial_train_loss"].get<double>() <
          json::parse(a.out)["initial_train_loss"].get<double>());
  }
  SUBCASE("evaluate a saved model on an exported dataset") {
    PixelDataset data = generate_scene(io::scene_from_json(
                                           json{{"preset", "overlapping_three_class"}, {"seed", 3}}))
                            .test;
    io::write_text(dir / "test.json", io::to_json(data).dump());
    const Run e = run({"evaluate", "--model", (dir / "a" / "model.json").string(), "--dataset",
                       (dir / "test.json").string(), "--grouping", (dir / "g.json").string()});
    REQUIRE(e.code == 0);
    const json j = json::parse(e.out);
    CHECK(j["confusion"].size() == 3);
    CHECK(j.contains("group_iou"));
    const Run t = run({"evaluate", "--model", (dir / "a" / "model.json").string(), "--dataset",
                       (dir / "test.json").string(), "--grouping", (dir / "g.json").string(),
                       "--table"});
    CHECK(t.out.find("mIoU") != std::string::npos);
  }
  SUBCASE("file-based data") {
    const auto scene = generate_scene(io::scene_from_json(
        json{{"preset", "overlapping_three_class"}, {"train_pixels", 200}, {"seed", 1}}));
    io::write_text(dir / "tr.json", io::to_json(scene.train).dump());
    io::write_text(dir / "va.json", io::to_json(scene.val).dump());
    io::write_text(dir / "te.json", io::to_json(scene.test).dump());
    io::write_text(dir / "files.json", R"({
      "data": {"train": "tr.json", "val": "va.json", "test": "te.json"},
      "loss": {"kind": "wasserstein", "grouping": "g.json"}, "epochs": 5
    })");
    CHECK(run({"--out-dir", (dir / "f").string(), "train", "--config",
               (dir / "files.json").string()})
              .code == 0);
    io::write_text(dir / "missing.json", R"({
      "data": {"train": "nope.json", "val": "va.json", "test": "te.json"}, "epochs": 5
    })");
    CHECK(run({"--out-dir", (dir / "m").string(), "train", "--config",
               (dir / "missing.json").string()})
              .code == 2);
  }
  SUBCASE("numerical abort exits 3 and names the epoch") {
    io::write_text(dir / "boom.json", R"({
      "scene": {"means": [[-5, 0], [5, 0], [0, 5]], "noise_scale": 0.1,
                "frequencies": [0.4, 0.3, 0.3], "train_pixels": 100, "val_pixels": 50,
                "test_pixels": 50, "seed": 9},
      "loss": "ce", "learning_rate": 1e308, "epochs": 5
    })");
    const Run r = run({"--out-dir", (dir / "boom").string(), "train", "--config",
                       (dir / "boom.json").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("epoch") != std::string::npos);
  }
  SUBCASE("seed sweep writes a summary") {
    io::write_text(dir / "sweep.json", R"({
      "scene": {"preset": "overlapping_three_class", "train_pixels": 300, "val_pixels": 100,
                "test_pixels": 300},
      "grouping": "g.json",
      "loss": {"kind": "wasserstein", "grouping": "g.json"},
      "learning_rate": 0.5, "epochs": 30
    })");
    const Run r = run({"--out-dir", (dir / "s").string(), "train", "--config",
                       (dir / "sweep.json").string(), "--seeds", "0..2"});
    REQUIRE(r.code == 0);
    const json j = io::load_json(dir / "s" / "severity_summary.json");
    CHECK(j["trials"].size() == 3);
    CHECK(j["trials"][0].contains("ce_severity"));
    CHECK(j["trials"][0].contains("wasserstein_severity"));
    CHECK(json::parse(r.out) == j);
  }
  CHECK(run({"train", "--config", (dir / "absent.json").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("evaluate label maps") {
  const auto dir = scratch("eval");
  io::write_text(dir / "g.json", kThreeClassGrouping);
  io::write_text(dir / "truth.csv", "0,0\n1,255\n");
  io::write_text(dir / "pred.csv", "0,1\n1,2\n");
  const Run r = run({"evaluate", "--pred-map", (dir / "pred.csv").string(), "--truth-map",
                     (dir / "truth.csv").string(), "--grouping", (dir / "g.json").string(),
                     "--out", (dir / "r.json").string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["confusion"][0][0] == 1);
  CHECK(j["confusion"][0][1] == 1);
  CHECK(j["confusion"][1][1] == 1);
  CHECK(j["severity_error"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(fs::exists(dir / "r.json"));
  io::write_text(dir / "small.csv", "0\n");
  CHECK(run({"evaluate", "--pred-map", (dir / "small.csv").string(), "--truth-map",
             (dir / "truth.csv").string(), "--grouping", (dir / "g.json").string()})
            .code == 2);
  CHECK(run({"evaluate", "--pred-map", (dir / "pred.csv").string(), "--truth-map",
             (dir / "truth.csv").string()})
            .code == 2);
  fs::remove_all(dir);
}

TEST_CASE("bench with one repetition yields a complete table") {
  const Run r = run({"bench", "--sizes", "8,80", "--repetitions", "1"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "n,solver,median_seconds,repetitions,calls_per_sample");
  int rows = 0;
  int skipped = 0;
  while (std::getline(lines, line)) {
    ++rows;
    skipped += line.find("skipped") != std::string::npos ? 1 : 0;
  }
  CHECK(rows == 6);
  CHECK(skipped == 1);  // exact LP above its size cap
  CHECK(run({"bench", "--sizes", "1"}).code == 2);
}

TEST_CASE("grad-check prints a passing report") {
  for (const char* loss : {"ce", "wasserstein", "l1"}) {
    const Run r = run({"--seed", "3", "grad-check", "--loss", loss});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["passed"] == true);
    CHECK(j["max_relative_error"].get<double>() <= 1e-4);
    CHECK(r.out == run({"--seed", "3", "grad-check", "--loss", loss}).out);
  }
  CHECK(run({"grad-check", "--loss", "sinkhorn"}).code == 2);
}
