#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fgir/container.hpp"
#include "fgir/report.hpp"
#include "scratch.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = fgir::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == fgir::cli::kUsage);
  CHECK(run({"bogus"}).code == fgir::cli::kUsage);
  CHECK(run({"synth"}).code == fgir::cli::kUsage);  // --out missing
  CHECK(run({"--threads", "0", "synth", "--out", "x"}).code == fgir::cli::kUsage);
  CHECK(run({"--metric", "cosine", "synth", "--out", "x"}).code == fgir::cli::kUsage);
  const auto help = run({"--help"});
  CHECK(help.code == fgir::cli::kSuccess);
  CHECK(help.out.find("evaluate") != std::string::npos);
}

TEST_CASE("data errors exit with 2 and name the path") {
  test::ScratchDir dir("cli-missing");
  const auto r = run({"query", "--index", (dir / "nope").string(), "--features", (dir / "nope").string()});
  CHECK(r.code == fgir::cli::kDataError);
  CHECK(r.err.find("nope") != std::string::npos);
}

TEST_CASE("synth, index, query and evaluate on a noiseless set") {
  test::ScratchDir dir("cli-pipeline");
  const auto data = (dir / "data").string();
  REQUIRE(run({"--seed", "3", "synth", "--out", data, "--instances", "30", "--sigma", "0"}).code == 0);
  REQUIRE(run({"index-build", "--features", data + "/features", "--annotations", data + "/annotations.csv",
               "--out", (dir / "index").string()})
              .code == 0);

  const auto single = run({"query", "--index", (dir / "index").string(), "--features", data + "/features",
                           "--query-id", "i03_0", "--k", "10", "--exclude-self"});
  REQUIRE(single.code == 0);
  std::istringstream lines(single.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == fgir::kQueryCsvHeader);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
  }
  CHECK(rows == 10);
  CHECK(single.out.find("i03_1") != std::string::npos);
  CHECK(single.out.find("\n1,i03_1,") != std::string::npos);

  const auto batch_dir = dir / "queries";
  REQUIRE(run({"query", "--index", (dir / "index").string(), "--features", data + "/features", "--k", "3",
               "--out", batch_dir.string()})
              .code == 0);
  CHECK(fs::exists(batch_dir / "i00_0.csv"));
  CHECK(std::distance(fs::directory_iterator(batch_dir), fs::directory_iterator{}) == 60);

  const auto eval = run({"evaluate", "--index", (dir / "index").string(), "--features", data + "/features",
                         "--exclude-self", "--out", (dir / "report.csv").string(), "--table",
                         (dir / "table.txt").string()});
  REQUIRE(eval.code == 0);
  const auto report = slurp(dir / "report.csv");
  CHECK(report.rfind("k,metric,value\n", 0) == 0);
  CHECK(report.find("1,fine_map,1.0\n") != std::string::npos);
  CHECK(slurp(dir / "table.txt").find("mAP") != std::string::npos);

  const auto html_out = dir / "q.html";
  REQUIRE(run({"query", "--index", (dir / "index").string(), "--features", data + "/features", "--query-id",
               "i01_0", "--out", (dir / "q.csv").string()})
              .code == 0);
  REQUIRE(run({"report-html", "--query-csv", (dir / "q.csv").string(), "--out", html_out.string()}).code == 0);
  const auto html = slurp(html_out);
  CHECK(html.find("i01_0") != std::string::npos);
  CHECK(html.find("i01_1") != std::string::npos);
}

TEST_CASE("pool emits c * p dimensional descriptors") {
  test::ScratchDir dir("cli-pool");
  const auto maps = (dir / "maps").string();
  REQUIRE(run({"synth", "--out", maps, "--instances", "4", "--copies", "1", "--map-shape", "3,3,512"}).code == 0);
  const auto fit = run({"fit-projection", "--maps", maps + "/features", "--dims", "20", "--max-iters", "50", "--out",
                        (dir / "basis").string()});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  REQUIRE(run({"pool", "--maps", maps + "/features", "--basis", (dir / "basis").string(), "--out",
               (dir / "pooled").string()})
              .code == 0);
  const auto c = fgir::load_container(dir / "pooled");
  REQUIRE(c.tensors.size() == 1);
  CHECK(c.tensors[0].shape == std::vector<std::size_t>{4, 10240});
}

TEST_CASE("train-head and predict produce K-dimensional scores") {
  test::ScratchDir dir("cli-train");
  const auto data = (dir / "data").string();
  REQUIRE(run({"synth", "--out", data, "--instances", "20", "--dim", "8", "--vocab", "6", "--attrs-per-instance",
               "2"})
              .code == 0);
  const auto train = run({"train-head", "--features", data + "/features", "--annotations", data + "/annotations.csv",
                          "--out", (dir / "head").string(), "--epochs", "2", "--lr", "0.01"});
  REQUIRE(train.code == 0);
  CHECK(train.out.rfind("epoch,loss\n", 0) == 0);
  REQUIRE(run({"predict", "--head", (dir / "head").string(), "--features", data + "/features", "--out",
               (dir / "prob").string()})
              .code == 0);
  const auto probs = fgir::load_vectors(dir / "prob");
  REQUIRE(probs.size() == 40);
  CHECK(probs[0].dim() == 6);

  // A head trained on 8-dim features cannot score 6-dim ones.
  const auto bad = run({"predict", "--head", (dir / "head").string(), "--features", (dir / "prob").string(), "--out",
                        (dir / "x").string()});
  CHECK(bad.code == fgir::cli::kDataError);
}
