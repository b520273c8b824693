#include <doctest.h>

#include <cstdlib>
#include <string>

#include "flowpat/trace.hpp"
#include "flowpat/trace_io.hpp"
#include "test_helpers.hpp"

// Exercises the installed binary end to end: exit codes, overrides, and the
// predict/psd subcommand contracts. The binary path arrives via FLOWPAT_CLI.

namespace {

std::string cli_path() {
  const char* p = std::getenv("FLOWPAT_CLI");
  REQUIRE_MESSAGE(p != nullptr, "FLOWPAT_CLI must point at the binary");
  return p;
}

int run(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = cli_path() + " " + args + " >" + log.string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes follow the error taxonomy") {
  TempDir tmp("cli");
  const auto log = tmp / "log.txt";

  // Config error: unknown override key.
  CHECK(run("synth --out " + (tmp / "c").string() + " --no.such.key 1", log) ==
        2);
  // Config error: invalid hyperparameter.
  CHECK(run("synth --out " + (tmp / "c").string() +
                " --model.senet.dropout_rate 1.0",
            log) == 2);
  // Data error: missing trace file.
  CHECK(run("psd --trace " + (tmp / "nope.csv").string() + " --out " +
                tmp.path().string(),
            log) == 3);
  // Success path: tiny corpus.
  CHECK(run("synth --out " + (tmp / "corpus").string() +
                " --synth.experiments_per_row 1 --synth.duration_s 30.0",
            log) == 0);
  CHECK(std::filesystem::exists(tmp / "corpus" / "corpus_index.json"));
}

TEST_CASE("cli pipeline: synth, split, train, eval, predict") {
  TempDir tmp("clipipe");
  const auto log = tmp / "log.txt";
  const std::string small =
      " --synth.experiments_per_row 1 --synth.duration_s 30.0"
      " --split.train_per_pattern 12 --split.eval_per_pattern 6"
      " --model.senet.block_stages 1 --model.senet.width_ratio 1"
      " --train.epochs 1 --train.batch_size 16";

  REQUIRE(run("synth --out " + (tmp / "corpus").string() + small, log) == 0);
  REQUIRE(run("split --corpus " + (tmp / "corpus").string() + " --out " +
                  (tmp / "split").string() + small,
              log) == 0);
  REQUIRE(run("train --split " + (tmp / "split").string() + " --out " +
                  (tmp / "run").string() + small,
              log) == 0);
  REQUIRE(std::filesystem::exists(tmp / "run" / "model.fpck"));

  REQUIRE(run("eval --model " + (tmp / "run" / "model.fpck").string() +
                  " --split " + (tmp / "split").string() + " --out " +
                  (tmp / "run").string() + small,
              log) == 0);
  REQUIRE(std::filesystem::exists(tmp / "run" / "report.json"));

  // predict on a 1,000-sample trace at the default stride 500 -> 2 rows.
  std::vector<double> v(1000, 2.5);
  flowpat::write_trace_csv(flowpat::CapacitanceTrace(100.0, v),
                           tmp / "probe.csv");
  REQUIRE(run("predict --model " + (tmp / "run" / "model.fpck").string() +
                  " --trace " + (tmp / "probe.csv").string() + " --out " +
                  tmp.path().string() + small,
              log) == 0);
  const auto pred = read_file(tmp / "predictions.csv");
  std::size_t rows = 0;
  for (char ch : pred)
    if (ch == '\n') ++rows;
  CHECK(rows == 3);
}

TEST_CASE("cli psd reports the cutoff and sampling plan") {
  TempDir tmp("clipsd");
  const auto log = tmp / "log.txt";
  std::vector<double> v(8192);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = 2.5 + std::sin(2.0 * 3.14159265358979 * 10.0 *
                          static_cast<double>(i) / 100.0);
  flowpat::write_trace_csv(flowpat::CapacitanceTrace(100.0, v),
                           tmp / "sine.csv");
  REQUIRE(run("psd --trace " + (tmp / "sine.csv").string() + " --out " +
                  tmp.path().string(),
              log) == 0);
  CHECK(std::filesystem::exists(tmp / "spectrum.csv"));
  const auto out = read_file(log);
  CHECK(out.find("f_c_hz") != std::string::npos);
  CHECK(out.find("recommended_f_s_hz") != std::string::npos);
}
