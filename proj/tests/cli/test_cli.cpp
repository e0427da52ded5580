// End-to-end checks of the alkit binary: exit codes, store side effects, and
// byte-stable outputs. Each command runs through std::system.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = ALKIT_CLI_PATH;
const fs::path kConfigDir = ALKIT_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("alkit_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run(const std::string& args, const fs::path& capture) {
  const std::string cmd = kCli.string() + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::size_t count_lines_with(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(needle) != std::string::npos) ++count;
  }
  return count;
}

// small two-strategy config so the whole CLI flow stays fast
std::string tiny_config(int steps = 3) {
  std::ostringstream out;
  out << R"({
  "name": "cli-tiny",
  "seed": 3,
  "classifier": {"kind": "knn", "k": 3},
  "strategies": ["random", "margin"],
  "datasets": [{"id": "blobs", "kind": "blobs", "n_samples": 120, "n_blobs": 3,
                "dim": 2, "spread": 1.2, "seed": 5,
                "start_size": 8, "batch_size": 6, "steps": )"
      << steps << R"(}],
  "split": {"scheme": "repeated-holdout", "repetitions": 3, "test_fraction": 0.5},
  "metrics": ["accuracy", "contradiction", "exploration_gradient", "nn_distance_sum",
              "reverse_batch_accuracy", "kappa_agreement"]
})";
  return out.str();
}

}  // namespace

TEST_CASE("cli: run populates a store, reruns are cached, outputs are stable") {
  TempDir dir;
  const fs::path config = dir.path / "tiny.json";
  {
    std::ofstream out(config);
    out << tiny_config();
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";

  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);
  std::string text = slurp(log);
  CHECK(count_lines_with(text, ": completed") == 6);  // 2 strategies x 3 folds
  CHECK(fs::exists(store / "manifest.json"));
  CHECK(fs::exists(store / "cells" / "blobs__margin__f02" / "records.jsonl"));

  // rerun: every cell cached
  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);
  text = slurp(log);
  CHECK(count_lines_with(text, ": cached") == 6);
  CHECK(text.find("all cells cached") != std::string::npos);

  // editing the config makes the store refuse to resume
  {
    std::ofstream out(config);
    out << tiny_config(4);
  }
  CHECK(run("run -c " + config.string() + " -s " + store.string(), log) == 1);
  CHECK(slurp(log).find("config drift") != std::string::npos);
}

TEST_CASE("cli: malformed config exits 2 with a line diagnostic") {
  TempDir dir;
  const fs::path config = dir.path / "broken.json";
  {
    std::ofstream out(config);
    out << "{\n  \"classifier\": oops\n}";
  }
  const fs::path log = dir.path / "out.txt";
  CHECK(run("run -c " + config.string() + " -s " + (dir.path / "s").string(), log) == 2);
  const std::string text = slurp(log);
  CHECK(text.find("config error") != std::string::npos);
  CHECK(text.find("line 2") != std::string::npos);
}

TEST_CASE("cli: max-steps pause then resume completes the matrix") {
  TempDir dir;
  const fs::path config = dir.path / "tiny.json";
  {
    std::ofstream out(config);
    out << tiny_config();
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";

  REQUIRE(run("run -c " + config.string() + " -s " + store.string() + " --max-steps 1", log) == 0);
  CHECK(count_lines_with(slurp(log), ": paused") == 6);
  REQUIRE(run("resume -s " + store.string(), log) == 0);
  CHECK(count_lines_with(slurp(log), ": completed") == 6);

  // the split run must equal a one-shot run byte for byte
  const fs::path store2 = dir.path / "store2";
  REQUIRE(run("run -c " + config.string() + " -s " + store2.string() + " -j 2", log) == 0);
  for (const char* cell : {"blobs__random__f00", "blobs__margin__f01"}) {
    CHECK(slurp(store / "cells" / cell / "records.jsonl") ==
          slurp(store2 / "cells" / cell / "records.jsonl"));
    CHECK(slurp(store / "cells" / cell / "metrics.jsonl") ==
          slurp(store2 / "cells" / cell / "metrics.jsonl"));
  }
}

TEST_CASE("cli: rank, correlate, replay, export on a completed store") {
  TempDir dir;
  const fs::path config = dir.path / "tiny.json";
  {
    std::ofstream out(config);
    out << tiny_config();
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";
  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);

  SUBCASE("rank writes csv and text reports, byte-identical across reruns") {
    REQUIRE(run("rank -s " + store.string() + " --metric aulc --alpha 0.05 --per-fold", log) == 0);
    const fs::path csv = store / "reports" / "rank_aulc.csv";
    const fs::path txt = store / "reports" / "rank_aulc.txt";
    REQUIRE(fs::exists(csv));
    const std::string first_csv = slurp(csv);
    const std::string first_txt = slurp(txt);
    CHECK(first_csv.find("strategy,mean_rank") == 0);
    CHECK(count_lines_with(first_csv, ",") == 3);  // header + 2 strategies
    REQUIRE(run("rank -s " + store.string() + " --metric aulc --alpha 0.05 --per-fold", log) == 0);
    CHECK(slurp(csv) == first_csv);
    CHECK(slurp(txt) == first_txt);
  }

  SUBCASE("rank without --per-fold needs a second task") {
    CHECK(run("rank -s " + store.string() + " --metric aulc", log) == 1);
    CHECK(slurp(log).find(">= 2 tasks") != std::string::npos);
  }

  SUBCASE("rank rejects unknown ranking metrics") {
    CHECK(run("rank -s " + store.string() + " --metric accuracy", log) == 1);
    CHECK(slurp(log).find("unknown ranking metric") != std::string::npos);
  }

  SUBCASE("rank handles every ranking metric") {
    for (const char* metric : {"exploration-auc", "reverse-batch-accuracy-auc"}) {
      REQUIRE(run("rank -s " + store.string() + " --metric " + metric + " --per-fold", log) == 0);
      CHECK(fs::exists(store / "reports" / ("rank_" + std::string(metric) + ".csv")));
    }
  }

  SUBCASE("rank supports the F-distribution p-value variant") {
    REQUIRE(run("rank -s " + store.string() +
                    " --metric aulc --per-fold --iman-davenport -o " + (dir.path / "r").string(),
                log) == 0);
    CHECK(fs::exists(dir.path / "r" / "rank_aulc.txt"));
  }

  SUBCASE("correlate prints a csv table") {
    REQUIRE(run("correlate -s " + store.string() +
                    " --a kappa_agreement --b reverse_batch_accuracy --method spearman"
                    " --group by-strategy",
                log) == 0);
    const std::string text = slurp(log);
    CHECK(text.find("group,metric_a,metric_b") == 0);
    CHECK(count_lines_with(text, "kappa_agreement") == 2);  // one row per strategy

    const fs::path csv = dir.path / "corr.csv";
    REQUIRE(run("correlate -s " + store.string() +
                    " --a accuracy --b contradiction --method pearson --group by-dataset -o " +
                    csv.string(),
                log) == 0);
    CHECK(slurp(csv) == slurp(log));
  }

  SUBCASE("replay verifies live series") {
    REQUIRE(run("replay -s " + store.string() + " --metric contradiction", log) == 0);
    CHECK(count_lines_with(slurp(log), "values from t=") == 6);
  }

  SUBCASE("export curves: quantiles aggregate the folds") {
    REQUIRE(run("export -s " + store.string() + " --what curves -o " + (dir.path / "csv").string(),
                log) == 0);
    const std::string curves = slurp(dir.path / "csv" / "curves.csv");
    CHECK(curves.find("dataset,strategy,fold,iteration,metric,value,mean,q10,q90") == 0);
    // 2 strategies x 3 folds x (4 accuracy + 4 nn + 3 each of 4 late metrics)
    CHECK(count_lines_with(curves, ",accuracy,") == 24);
    CHECK(count_lines_with(curves, ",kappa_agreement,") == 18);

    REQUIRE(run("export -s " + store.string() + " --what batches -o " + (dir.path / "csv").string(),
                log) == 0);
    CHECK(count_lines_with(slurp(dir.path / "csv" / "batches.csv"), "blobs__") == 6 * 3 * 6);

    REQUIRE(run("export -s " + store.string() + " --what log -o " + (dir.path / "csv").string(),
                log) == 0);
    CHECK(slurp(dir.path / "csv" / "log.csv").find("cell,iteration,metric,value,seq") == 0);
  }
}

TEST_CASE("cli: rank on a single-strategy store is rejected") {
  TempDir dir;
  const fs::path config = dir.path / "single.json";
  {
    std::ofstream out(config);
    out << R"({
      "seed": 3,
      "classifier": {"kind": "knn", "k": 3},
      "strategies": ["random"],
      "datasets": [{"id": "blobs", "kind": "blobs", "n_samples": 90, "n_blobs": 3,
                    "start_size": 8, "batch_size": 5, "steps": 2}],
      "split": {"scheme": "repeated-holdout", "repetitions": 2, "test_fraction": 0.5}
    })";
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";
  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);
  CHECK(run("rank -s " + store.string() + " --metric aulc --per-fold", log) == 1);
  CHECK(slurp(log).find(">= 2 strategies") != std::string::npos);
}

TEST_CASE("cli: csv dataset with incremental test mode runs end to end") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  {
    std::ofstream out(csv);
    out << "f0,f1,color,y\n";
    for (int i = 0; i < 80; ++i) {
      const int cls = i % 2;
      out << (cls ? 2.0 + 0.01 * i : -2.0 - 0.01 * i) << ',' << 0.1 * i << ','
          << (i % 3 == 0 ? "red" : "blue") << ',' << (cls ? "pos" : "neg") << '\n';
    }
  }
  const fs::path config = dir.path / "csv.json";
  {
    std::ofstream out(config);
    out << R"({
      "seed": 9,
      "classifier": {"kind": "knn", "k": 3},
      "strategies": ["random", "margin"],
      "datasets": [{"id": "toy", "kind": "csv", "path": ")"
        << csv.string() << R"(",
                    "schema": {"y": "label", "color": "categorical", "*": "numeric"},
                    "start_size": 6, "batch_size": 5, "steps": 3}],
      "split": {"scheme": "repeated-holdout", "repetitions": 2, "test_fraction": 0.4},
      "test_mode": {"kind": "incremental", "holdout_fraction": 0.2}
    })";
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";
  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);
  CHECK(count_lines_with(slurp(log), ": completed") == 4);
  REQUIRE(run("replay -s " + store.string() + " --metric contradiction", log) == 0);
  REQUIRE(run("resume -s " + store.string(), log) == 0);
  CHECK(count_lines_with(slurp(log), ": cached") == 4);

  // swapping the data file behind the same config is refused
  {
    std::ofstream out(csv, std::ios::app);
    out << "9.9,9.9,red,pos\n";
  }
  CHECK(run("resume -s " + store.string(), log) == 1);
  CHECK(slurp(log).find("dataset drift") != std::string::npos);
}

TEST_CASE("cli: export output is byte-identical across reruns") {
  TempDir dir;
  const fs::path config = dir.path / "tiny.json";
  {
    std::ofstream out(config);
    out << tiny_config(2);
  }
  const fs::path store = dir.path / "store";
  const fs::path log = dir.path / "out.txt";
  REQUIRE(run("run -c " + config.string() + " -s " + store.string(), log) == 0);
  REQUIRE(run("export -s " + store.string() + " --what curves -o " + (dir.path / "a").string(),
              log) == 0);
  REQUIRE(run("export -s " + store.string() + " --what curves -o " + (dir.path / "b").string(),
              log) == 0);
  CHECK(slurp(dir.path / "a" / "curves.csv") == slurp(dir.path / "b" / "curves.csv"));
  CHECK_FALSE(slurp(dir.path / "a" / "curves.csv").empty());
}

TEST_CASE("cli: store path comes from the environment when the flag is absent") {
  TempDir dir;
  const fs::path config = dir.path / "tiny.json";
  {
    std::ofstream out(config);
    out << tiny_config(1);
  }
  const fs::path store = dir.path / "env_store";
  const fs::path log = dir.path / "out.txt";
  const std::string cmd = "ALKIT_STORE=" + store.string() + " " + kCli.string() + " run -c " +
                          config.string() + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(store / "manifest.json"));
}
