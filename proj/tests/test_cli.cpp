#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#ifndef SHUFFLESIM_PATH
#define SHUFFLESIM_PATH "shufflesim"
#endif

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  std::string command = std::string(SHUFFLESIM_PATH) + " " + args + " 2>/dev/null";
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  while (std::size_t got = fread(buffer, 1, sizeof(buffer), pipe)) {
    result.output.append(buffer, got);
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream cell_in(line);
    std::string cell;
    while (std::getline(cell_in, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("tradeoff table contains the expected baseline and aligned rows at S=1") {
  CommandResult baseline = run_cli("tradeoff -K 4 -N 4");
  REQUIRE(baseline.exit_code == 0);
  auto rows = parse_csv(baseline.output);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0][0] == "S_num");
  // row with S = 1: upper 4, lower 3, gap 4/3
  bool found = false;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r][0] == "1" && rows[r][1] == "1") {
      found = true;
      CHECK(rows[r][3] == "4");
      CHECK(rows[r][4] == "1");
      CHECK(rows[r][6] == "3");
      CHECK(rows[r][7] == "1");
      CHECK(rows[r][9] == "4");
      CHECK(rows[r][10] == "3");
    }
  }
  CHECK(found);

  CommandResult aligned = run_cli("tradeoff -K 4 -N 4 --scheme aligned");
  REQUIRE(aligned.exit_code == 0);
  auto arows = parse_csv(aligned.output);
  found = false;
  for (std::size_t r = 1; r < arows.size(); ++r) {
    if (arows[r][0] == "1" && arows[r][1] == "1") {
      found = true;
      CHECK(arows[r][3] == "3");   // aligned upper = 3
      CHECK(arows[r][9] == "1");   // gap = 1
      CHECK(arows[r][10] == "1");
    }
  }
  CHECK(found);
}

TEST_CASE("the S=N row carries the infinite-gap sentinel") {
  CommandResult result = run_cli("tradeoff -K 4 -N 4");
  REQUIRE(result.exit_code == 0);
  auto rows = parse_csv(result.output);
  bool found = false;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r][0] == "4" && rows[r][1] == "1") {
      found = true;
      CHECK(rows[r][9] == "0");
      CHECK(rows[r][10] == "0");
      CHECK(rows[r][11] == "inf");
    }
  }
  CHECK(found);
}

TEST_CASE("K=5 aligned trade-off has maximum gap 7/6") {
  CommandResult result = run_cli("tradeoff -K 5 -N 5 --scheme aligned --grid 101");
  REQUIRE(result.exit_code == 0);
  auto rows = parse_csv(result.output);
  double max_gap = 0;
  std::string max_text;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r][11] == "inf") continue;
    double g = std::stod(rows[r][11]);
    if (g > max_gap) {
      max_gap = g;
      max_text = rows[r][9] + "/" + rows[r][10];
    }
  }
  CHECK(max_text == "7/6");
}

TEST_CASE("csv and json emissions carry identical values") {
  CommandResult csv = run_cli("tradeoff -K 4 -N 8 --grid 17 --format csv");
  CommandResult json = run_cli("tradeoff -K 4 -N 8 --grid 17 --format json");
  REQUIRE(csv.exit_code == 0);
  REQUIRE(json.exit_code == 0);
  auto rows = parse_csv(csv.output);
  nlohmann::json parsed = nlohmann::json::parse(json.output);
  REQUIRE(parsed.size() == rows.size() - 1);
  const std::vector<std::string> names = {"S", "upper", "lower", "gap"};
  for (std::size_t r = 0; r < parsed.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      CHECK(parsed[r][names[c] + "_num"].dump() == rows[r + 1][3 * c]);
      CHECK(parsed[r][names[c] + "_den"].dump() == rows[r + 1][3 * c + 1]);
      CHECK(parsed[r][names[c] + "_dec"].get<std::string>() == rows[r + 1][3 * c + 2]);
    }
  }
}

TEST_CASE("gap subcommand emits both envelopes") {
  CommandResult result = run_cli("gap -K 6 -N 6 --grid 11");
  REQUIRE(result.exit_code == 0);
  auto rows = parse_csv(result.output);
  CHECK(rows[0][0] == "S_num");
  CHECK(rows[0].size() == 18);  // six columns, three fields each
}

TEST_CASE("simulate writes one record per epoch with the formula rate") {
  CommandResult result =
      run_cli("simulate -K 4 -N 4 --scheme baseline --storage-index 1 --epochs 5");
  REQUIRE(result.exit_code == 0);
  std::istringstream in(result.output);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    nlohmann::json rec = nlohmann::json::parse(line);
    CHECK(rec["rate_num"] == 3);
    CHECK(rec["rate_den"] == 2);
    CHECK(rec["decode_ok"] == true);
    ++count;
  }
  CHECK(count == 5);
}

TEST_CASE("simulate aligned m=2 measures rate 1") {
  CommandResult result =
      run_cli("simulate -K 4 -N 4 --scheme aligned --storage-m 2 --epochs 1");
  REQUIRE(result.exit_code == 0);
  nlohmann::json rec = nlohmann::json::parse(result.output.substr(0, result.output.find('\n')));
  CHECK(rec["rate_num"] == 1);
  CHECK(rec["rate_den"] == 1);
}

TEST_CASE("composite simulation hits the memory-sharing rate") {
  CommandResult result = run_cli(
      "simulate -K 4 -N 4 --scheme composite --storage-index 1 --storage-index 2 "
      "--alpha 1/2 --epochs 2");
  REQUIRE(result.exit_code == 0);
  nlohmann::json rec = nlohmann::json::parse(result.output.substr(0, result.output.find('\n')));
  CHECK(rec["rate_num"] == 13);
  CHECK(rec["rate_den"] == 12);
}

TEST_CASE("identical seeds give byte-identical traces") {
  std::string path_a = "cli_trace_a.jsonl";
  std::string path_b = "cli_trace_b.jsonl";
  std::string args = "simulate -K 3 -N 6 --scheme baseline --storage-index 1 "
                     "--shuffle random-derangement --epochs 20 --seed 99 --out ";
  REQUIRE(run_cli(args + path_a).exit_code == 0);
  REQUIRE(run_cli(args + path_b).exit_code == 0);
  std::string a = slurp(path_a);
  CHECK(!a.empty());
  CHECK(a == slurp(path_b));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("simulate ingests a raw data file of exactly N*d bytes") {
  std::string path = "cli_data.bin";
  {
    std::ofstream out(path, std::ios::binary);
    for (int i = 0; i < 16; ++i) out.put(static_cast<char>(i * 7));
  }
  CommandResult ok = run_cli("simulate -K 4 -N 4 --scheme baseline --storage-index 1 "
                             "--dim 4 --data " + path + " --epochs 1");
  CHECK(ok.exit_code == 0);
  CommandResult wrong_size = run_cli("simulate -K 4 -N 4 --scheme baseline --storage-index 1 "
                                     "--dim 8 --data " + path + " --epochs 1");
  CHECK(wrong_size.exit_code == 1);
  std::remove(path.c_str());
}

TEST_CASE("verify passes for baseline and aligned shapes") {
  CommandResult b = run_cli("verify -K 4 -N 4 --scheme baseline --storage-index 2");
  CHECK(b.exit_code == 0);
  CHECK(b.output.find("VERIFY PASS") != std::string::npos);
  CHECK(b.output.find("max rate: 2/3") != std::string::npos);
  CommandResult a = run_cli("verify -K 4 -N 4 --scheme aligned --storage-m 3");
  CHECK(a.exit_code == 0);
  CHECK(a.output.find("cases: 9") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2 and name the offending flag") {
  CommandResult bad_points = run_cli("simulate -K 4 -N 6 --scheme baseline --storage-index 1");
  CHECK(bad_points.exit_code == 2);
  CommandResult bad_dim =
      run_cli("simulate -K 4 -N 4 --scheme baseline --storage-index 1 --dim 3");
  CHECK(bad_dim.exit_code == 2);
  CommandResult too_large = run_cli("verify -K 7 -N 7 --scheme baseline --storage-index 1");
  CHECK(too_large.exit_code == 2);
  CommandResult no_subcommand = run_cli("");
  CHECK(no_subcommand.exit_code == 2);
  // alpha*d = 4/3 is not an integer byte count
  CommandResult bad_alpha = run_cli(
      "simulate -K 4 -N 4 --scheme composite --storage-index 1 --storage-index 2 "
      "--alpha 1/3 --dim 4");
  CHECK(bad_alpha.exit_code == 2);
}

}  // TEST_SUITE
