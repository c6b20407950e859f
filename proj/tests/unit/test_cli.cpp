#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "brute_force.hpp"
#include "cli.hpp"

using namespace rfla;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rfla_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(std::vector<std::string> args, std::string* log_out = nullptr) {
  args.insert(args.begin(), "rfla");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), log);
  if (log_out) *log_out = log.str();
  return rc;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string bright_png(const TempDir& dir, const std::string& name, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto path = dir / name;
  write_png(path, testing::random_image(rng, 32, 32, 96, 255));
  return path;
}

const std::vector<std::string> kSmall{"--swarm", "8", "--subswarm", "8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}) == cli::kUsageError);
  CHECK(run({"attack"}) == cli::kUsageError);
  CHECK(run({"frobnicate"}) == cli::kUsageError);
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 1);
  CHECK(run({"attack", "--image", img, "--shape", "circle"}) == cli::kUsageError);
  CHECK(run({"attack", "--image", tmp / "missing.png", "--out", tmp / "o"}) == cli::kUsageError);
  CHECK(run({"attack", "--image", img, "--oracle", "bogus", "--out", tmp / "o"}) == cli::kUsageError);
  CHECK(run({"attack", "--image", img, "--alpha-max", "2", "--out", tmp / "o"}) == cli::kUsageError);
  CHECK(run({"attack", "--image", img, "--mask", tmp / "missing.png", "--out", tmp / "o"}) == cli::kUsageError);
  CHECK(run({"--version"}) == cli::kOk);
}

TEST_CASE("attack with the uniform oracle fails after every iteration") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 2);
  const int rc = run(with({"attack", "--image", img, "--oracle", "uniform:10", "--swarm", "3", "--subswarm", "3",
                           "--out", tmp / "out"},
                          {}));
  CHECK(rc == cli::kAttackFailed);
  const json r = read_json(tmp.path / "out" / "result.json");
  CHECK(r["success"] == false);
  CHECK(r["status"] == "failed");
  CHECK(r["iterations"] == 200);
  CHECK(r["queries"] == 1 + 201 * 9);
  CHECK(r["best_fitness"].get<double>() == doctest::Approx(0.1));
  CHECK(r["fitness_trace"].size() == 201);
  CHECK(fs::exists(tmp.path / "out" / "adversarial.png"));
  CHECK(fs::exists(tmp.path / "out" / "manifest.json"));
}

TEST_CASE("planted attack succeeds and only paints permission and polygon") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 3);
  std::mt19937_64 rng(3);
  const MaskBuffer mask = testing::random_mask(rng, 32, 32, 0.85);
  write_mask(tmp / "mask.png", mask);
  std::string log;
  const int rc = run(with({"attack", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--mask",
                           tmp / "mask.png", "--seed", "4", "--out", tmp / "out"},
                          kSmall),
                     &log);
  CHECK(rc == cli::kOk);
  const json r = read_json(tmp.path / "out" / "result.json");
  REQUIRE(r["success"] == true);
  CHECK(r["label"] == 0);
  const Particle p = cli::particle_from_json(r["particle"]);
  const ImageBuffer clean = read_png(img);
  const ImageBuffer adv = read_png(tmp.path / "out" / "adversarial.png");
  const auto v = order_vertices(shape_vertices(p.circle(), p.angles, ShapeKind::Rectangle), p.circle());
  const MaskBuffer cov = testing::brute_force_coverage(v, 32, 32);
  std::size_t changed = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool diff = std::equal(adv.pixel(x, y), adv.pixel(x, y) + 3, clean.pixel(x, y)) == false;
      changed += diff;
      if (diff) CHECK((cov.at(x, y) && mask.at(x, y)));
    }
  }
  CHECK(changed > 0);
  // The stored image reproduces the flip.
  PlantedRegionOracle oracle({12, 12, 8, 100, 10});
  CHECK(oracle.predict_one(adv).argmax() == 1);

  const json m = read_json(tmp.path / "out" / "manifest.json");
  CHECK(m["command"] == "attack");
  CHECK(m["seed"] == 4);
  CHECK(m["config"]["oracle"] == "planted");
  CHECK(m["oracle"]["num_classes"] == 2);
}

TEST_CASE("attack reruns and replays byte for byte") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 5);
  const auto args = with({"attack", "--image", img, "--oracle", "planted:10,10,90,10", "--shape", "pentagon",
                          "--palette", "nominal", "--seed", "11"},
                         kSmall);
  REQUIRE(run(with(args, {"--out", tmp / "a"})) != cli::kUsageError);
  REQUIRE(run(with(args, {"--out", tmp / "b"})) != cli::kUsageError);
  CHECK(read_bytes(tmp.path / "a" / "result.json") == read_bytes(tmp.path / "b" / "result.json"));
  CHECK(read_bytes(tmp.path / "a" / "adversarial.png") == read_bytes(tmp.path / "b" / "adversarial.png"));
  REQUIRE(run({"replay", tmp / "a/manifest.json", "--out", tmp / "c"}) != cli::kUsageError);
  CHECK(read_bytes(tmp.path / "a" / "result.json") == read_bytes(tmp.path / "c" / "result.json"));
  CHECK(read_bytes(tmp.path / "a" / "adversarial.png") == read_bytes(tmp.path / "c" / "adversarial.png"));
  CHECK(run({"replay", tmp / "missing.json"}) == cli::kUsageError);
}

TEST_CASE("targeted attack and labels") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 6);
  // Target = the clean class: succeeds immediately.
  CHECK(run({"attack", "--image", img, "--oracle", "planted", "--target", "0", "--out", tmp / "t"}) == cli::kOk);
  CHECK(read_json(tmp.path / "t" / "result.json")["iterations"] == 0);
  // A wrong label counts as already misclassified.
  CHECK(run({"attack", "--image", img, "--oracle", "planted", "--label", "1", "--out", tmp / "l"}) == cli::kOk);
  CHECK(read_json(tmp.path / "l" / "result.json")["queries"] == 1);
  CHECK(run({"attack", "--image", img, "--oracle", "planted", "--label", "7", "--out", tmp / "x"}) ==
        cli::kUsageError);
}

TEST_CASE("external oracles through the CLI") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 7);
  const std::string cmd = std::string("cmd:") + RFLA_FAKE_ORACLE + " planted";
  CHECK(run(with({"attack", "--image", img, "--oracle", cmd, "--shape", "rectangle", "--seed", "4", "--out",
                  tmp / "ext"},
                 kSmall)) == cli::kOk);
  CHECK(run(with({"attack", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--seed", "4", "--out",
                  tmp / "loc"},
                 kSmall)) == cli::kOk);
  json a = read_json(tmp.path / "ext" / "result.json");
  json b = read_json(tmp.path / "loc" / "result.json");
  CHECK(a == b);

  std::string log;
  const std::string dying = std::string("cmd:") + RFLA_FAKE_ORACLE + " die";
  CHECK(run({"attack", "--image", img, "--oracle", dying, "--label", "0", "--out", tmp / "die"}, &log) ==
        cli::kOracleError);
  CHECK(log.find("oracle") != std::string::npos);
  CHECK(run({"attack", "--image", img, "--oracle", "cmd:exit 1", "--out", tmp / "die2"}) == cli::kOracleError);
  CHECK(run({"attack", "--image", img, "--oracle", "tcp:127.0.0.1:1", "--out", tmp / "die3"}) == cli::kOracleError);
}

TEST_CASE("eval reports ASR and skips unlabeled images") {
  TempDir tmp;
  fs::create_directories(tmp.path / "data");
  std::ofstream labels(tmp.path / "data" / "labels.txt");
  for (int i = 0; i < 4; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    bright_png(tmp, "data/" + name, 100 + i);
    if (i != 2) labels << name << "\t0\n";
  }
  labels.close();
  std::string log;
  const int rc = run(with({"eval", "--dataset", tmp / "data", "--oracle", "planted", "--shape", "rectangle",
                           "--out", tmp / "ev"},
                          kSmall),
                     &log);
  CHECK(rc == cli::kOk);
  CHECK(log.find("img2.png") != std::string::npos);
  const json s = read_json(tmp.path / "ev" / "eval.json");
  CHECK(s["total"] == 3);
  CHECK(s["skipped"] == json::array({"img2.png"}));
  CHECK(s["asr"].get<double>() == 1.0);
  const auto rows = read_csv(tmp.path / "ev" / "eval.csv");
  REQUIRE(rows.size() == 4);
  std::size_t flips = 0, attacked = 0;
  for (const auto& r : rows) {
    if (r[2] == "skipped") continue;
    ++attacked;
    flips += r[3] == "1";
  }
  CHECK(double(flips) / double(attacked) == s["asr"].get<double>());
  CHECK(fs::exists(tmp.path / "ev" / "adversarial" / "img0.png"));

  CHECK(run({"eval", "--dataset", tmp / "data", "--oracle", "uniform", "--swarm", "2", "--subswarm", "2", "--iters",
             "3", "--out", tmp / "ev2"}) == cli::kAttackFailed);
  CHECK(read_json(tmp.path / "ev2" / "eval.json")["asr"] == 0.0);

  // Replay regenerates the same report.
  CHECK(run({"replay", tmp / "ev/manifest.json", "--out", tmp / "ev3"}) == cli::kOk);
  CHECK(read_bytes(tmp.path / "ev" / "eval.csv") == read_bytes(tmp.path / "ev3" / "eval.csv"));
  CHECK(run({"eval", "--dataset", tmp / "nope", "--out", tmp / "ev4"}) == cli::kUsageError);
}

TEST_CASE("sweeps") {
  TempDir tmp;
  const auto img = bright_png(tmp, "a.png", 8);
  // Dark, opaque-ish square placed over the planted region.
  const json particle{{"cx", 15.5}, {"cy", 15.5}, {"r", 8.0}, {"alpha", 0.7}, {"rgb", {0, 0, 0}}, {"angles", {45, 135}}};
  std::ofstream(tmp / "p.json") << particle.dump();

  SUBCASE("alpha") {
    REQUIRE(run({"sweep-alpha", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--particle",
                 tmp / "p.json", "--out", tmp / "s"}) == cli::kOk);
    const auto rows = read_csv(tmp.path / "s" / "sweep_alpha.csv");
    REQUIRE(rows.size() == 101);
    CHECK(rows[0][0] == "0");
    CHECK(rows[100][0] == "1");
    PlantedRegionOracle oracle({12, 12, 8, 100, 10});
    CHECK(std::stod(rows[0][1]) == oracle.predict_one(read_png(img)).probs[0]);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) <= std::stod(rows[i - 1][1]));
    CHECK(rows[100][2] == "1");
    CHECK(fs::exists(tmp.path / "s" / "sweep_alpha.manifest.json"));
  }
  SUBCASE("color") {
    REQUIRE(run({"sweep-color", "--image", img, "--oracle", "uniform:5", "--label", "0", "--shape", "rectangle",
                 "--particle", tmp / "p.json", "--out", tmp / "s"}) == cli::kOk);
    const auto rows = read_csv(tmp.path / "s" / "sweep_color.csv");
    REQUIRE(rows.size() == 4096);
    for (const auto& r : rows) {
      CHECK(r[3] == rows[0][3]);
      for (int k = 0; k < 3; ++k) {
        const int v = std::stoi(r[std::size_t(k)]);
        CHECK(v % 16 == 0);
        CHECK(v <= 240);
      }
    }
  }
  SUBCASE("position") {
    MaskBuffer mask(32, 32, 1);
    for (int y = 0; y < 32; ++y) mask.set(0, y, false);
    write_mask(tmp / "mask.png", mask);
    REQUIRE(run({"sweep-position", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--mask",
                 tmp / "mask.png", "--particle", tmp / "p.json", "--out", tmp / "s"}) == cli::kOk);
    const auto rows = read_csv(tmp.path / "s" / "sweep_position.csv");
    REQUIRE(rows.size() == 16 * 16);
    double sx = 0, sy = 0;
    int hits = 0, masked = 0;
    for (const auto& r : rows) {
      const int cx = std::stoi(r[0]), cy = std::stoi(r[1]);
      CHECK(cx >= 0);
      CHECK(cx <= 31);
      CHECK(cy <= 31);
      if (r[4] == "1") {
        ++masked;
        CHECK(cx == 0);
        CHECK(r[2].empty());
        continue;
      }
      if (r[3] == "1") {
        sx += cx;
        sy += cy;
        ++hits;
      }
    }
    CHECK(masked == 16);
    REQUIRE(hits > 0);
    // Successful centers sit over the secret region (x, y in [12, 20)).
    CHECK(std::abs(sx / hits - 15.5) < 3);
    CHECK(std::abs(sy / hits - 15.5) < 3);
  }
  SUBCASE("replay regenerates the CSV") {
    REQUIRE(run({"sweep-alpha", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--particle",
                 tmp / "p.json", "--out", tmp / "s"}) == cli::kOk);
    REQUIRE(run({"replay", tmp / "s/sweep_alpha.manifest.json", "--out", tmp / "r"}) == cli::kOk);
    CHECK(read_bytes(tmp.path / "s" / "sweep_alpha.csv") == read_bytes(tmp.path / "r" / "sweep_alpha.csv"));
  }
  SUBCASE("particle shape mismatch") {
    CHECK(run({"sweep-alpha", "--image", img, "--oracle", "planted", "--shape", "hexagon", "--particle",
               tmp / "p.json", "--out", tmp / "s"}) == cli::kUsageError);
  }
  SUBCASE("without a particle an attack runs first") {
    CHECK(run(with({"sweep-alpha", "--image", img, "--oracle", "planted", "--shape", "rectangle", "--out", tmp / "s"},
                   kSmall)) == cli::kOk);
    CHECK(read_csv(tmp.path / "s" / "sweep_alpha.csv").size() == 101);
  }
}

TEST_CASE("mask command") {
  TempDir tmp;
  fs::create_directories(tmp.path / "imgs");
  write_png(tmp / "imgs/a.png", ImageBuffer(8, 8, 0));
  write_png(tmp / "imgs/b.png", ImageBuffer(8, 8, 255));
  CHECK(run({"mask", "--images", tmp / "imgs", "--threshold", "128", "--out", tmp / "m.png"}) == cli::kOk);
  CHECK(read_mask(tmp.path / "m.png").count() == 0);
  CHECK(run({"mask", "--images", tmp / "imgs", "--threshold", "127", "--out", tmp / "m2.png"}) == cli::kOk);
  CHECK(read_mask(tmp.path / "m2.png").count() == 64);
  CHECK(run({"mask", "--images", tmp / "imgs", "--threshold", "300"}) == cli::kUsageError);
  CHECK(run({"mask", "--images", tmp / "none", "--out", tmp / "m3.png"}) == cli::kUsageError);
}
