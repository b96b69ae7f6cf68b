#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "../tools/cli.hpp"
#include "rtn/closed_form.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "rtn");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = rtn::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

using Row = std::map<std::string, std::string>;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::vector<Row> rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  std::vector<Row> result;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv(line);
      continue;
    }
    const std::vector<std::string> fields = split_csv(line);
    REQUIRE(fields.size() == header.size());
    Row row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
    result.push_back(row);
  }
  return result;
}

std::string body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, result;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') result += line + '\n';
  return result;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rtn_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("ipr-exact with k = 1 is one") {
  const Result r = run({"ipr-exact", "--grid-N", "4..8", "--grid-chi", "2,4", "--grid-k", "1"});
  CHECK(r.code == rtn::cli::kOk);
  const auto table = rows(r.out);
  CHECK(table.size() == 10);
  for (const Row& row : table) {
    CHECK(row.at("status") == "ok");
    CHECK(std::stod(row.at("value")) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ipr-exact turns invalid points into error rows") {
  const Result r = run({"ipr-exact", "--grid-N", "3", "--grid-chi", "2,8", "--grid-k", "2"});
  CHECK(r.code == rtn::cli::kPartialFailure);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 2);
  CHECK(table[0].at("status") == "ok");
  CHECK(table[1].at("status") == "error");
  CHECK(!table[1].at("message").empty());
}

TEST_CASE("ipr-exact matches the library and the contraction") {
  const Result exact = run({"ipr-exact", "--grid-N", "10", "--grid-chi", "4", "--grid-k", "3"});
  const Result contract = run({"contract", "--grid-N", "10", "--grid-chi", "4", "--grid-k", "3"});
  REQUIRE(exact.code == 0);
  REQUIRE(contract.code == 0);
  const double a = std::stod(rows(exact.out).at(0).at("value_log"));
  const double b = std::stod(rows(contract.out).at(0).at("value_log"));
  const double lib = rtn::rmps_ipr_obc(rtn::EnsembleParams::chain(10, 2, 4, 3)).log_value;
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
  CHECK(a == doctest::Approx(lib).epsilon(1e-10));
}

TEST_CASE("geometric grids") {
  const Result r = run({"ipr-exact", "--grid-N", "12", "--grid-chi", "2..64*2"});
  CHECK(r.code == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 6);
  CHECK(table.front().at("chi") == "2");
  CHECK(table.back().at("chi") == "64");
}

TEST_CASE("sample is reproducible for a fixed seed") {
  const std::vector<std::string> args{"sample", "--grid-N", "6", "--grid-chi", "2,4", "--samples", "2000",
                                      "--seed", "11"};
  auto with = [&](const std::string& out, const std::string& threads) {
    auto a = args;
    a.insert(a.end(), {"--out", scratch(out).string(), "--threads", threads});
    return run(a);
  };
  REQUIRE(with("a.csv", "1").code == 0);
  REQUIRE(with("b.csv", "3").code == 0);
  CHECK(body(slurp(scratch("a.csv"))) == body(slurp(scratch("b.csv"))));
  CHECK(body(slurp(scratch("a.csv.hist.csv"))) == body(slurp(scratch("b.csv.hist.csv"))));
  const auto table = rows(slurp(scratch("a.csv")));
  REQUIRE(table.size() == 2);
  CHECK(table[0].at("seed") != table[1].at("seed"));

  std::int64_t counted = 0;
  for (const Row& row : rows(slurp(scratch("a.csv.hist.csv"))))
    if (row.at("chi") == "2") counted += std::stoll(row.at("count"));
  CHECK(counted == 2000);
}

TEST_CASE("configuration errors exit with 1") {
  CHECK(run({"sample", "--grid-N", "6", "--grid-chi", "2", "--samples", "1000"}).code == rtn::cli::kConfigError);
  CHECK(run({"ipr-exact", "--grid-N", "6"}).code == rtn::cli::kConfigError);
  CHECK(run({"ipr-exact", "--grid-N", "8..4", "--grid-chi", "2"}).code == rtn::cli::kConfigError);
  CHECK(run({"contract", "--quantity", "magic", "--grid-N", "6", "--grid-chi", "2"}).code == rtn::cli::kConfigError);
  CHECK(run({"nonsense"}).code == rtn::cli::kConfigError);
  CHECK(run({"--version"}).code == rtn::cli::kOk);
}

TEST_CASE("oversized contractions are rejected before any work") {
  const Result r = run({"contract", "--quantity", "fp", "--grid-N", "8", "--grid-chi", "4", "--grid-k", "2,5",
                        "--budget-mem-mb", "0.01"});
  CHECK(r.code == rtn::cli::kBudgetError);
  CHECK(rows(r.out).empty());
  CHECK(r.err.find("k=5") != std::string::npos);
}

TEST_CASE("budget falls back to the environment") {
  ::setenv(rtn::cli::kBudgetEnv, "0.001", 1);
  const Result r = run({"contract", "--geometry", "square", "--grid-L", "5", "--grid-chi", "4", "--grid-k", "3"});
  ::unsetenv(rtn::cli::kBudgetEnv);
  CHECK(r.code == rtn::cli::kBudgetError);
  CHECK(run({"contract", "--geometry", "square", "--grid-L", "3", "--grid-chi", "2", "--grid-k", "2"}).code == 0);
}

TEST_CASE("json-lines output") {
  const Result r = run({"contract", "--quantity", "fp", "--grid-N", "8,16", "--grid-chi", "8,16", "--grid-k", "2,3",
                        "--fit-a", "--format", "jsonl"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 10);
  CHECK(lines.front().contains("meta"));
  CHECK(lines.front()["meta"]["schema_version"] == rtn::cli::kSchemaVersion);
  CHECK(lines[1]["quantity"] == "fp");
  CHECK(lines[1]["status"] == "ok");
  const nlohmann::json& trailer = lines.back()["trailer"];
  CHECK(trailer["fit_points_used"] == 8);
  CHECK(trailer["fit_a"].get<double>() > 0.0);
}

TEST_CASE("dist moment tables agree with closed forms") {
  for (const std::vector<std::string>& extra :
       {std::vector<std::string>{"--family", "pt"}, {"--family", "scaling", "--grid-gamma", "0.5,2"},
        {"--family", "rps-d2", "--grid-N", "1,4"}, {"--family", "rps-lognormal", "--grid-N", "8"}}) {
    std::vector<std::string> args{"dist", "--table", "moments", "--grid-k", "1..4"};
    args.insert(args.end(), extra.begin(), extra.end());
    const Result r = run(args);
    CHECK(r.code == 0);
    for (const Row& row : rows(r.out)) {
      CHECK(row.at("status") == "ok");
      CHECK(std::stod(row.at("relative_error")) <= 1e-6);
    }
  }
}

TEST_CASE("dist curves integrate to one") {
  const Result r = run({"dist", "--family", "pt", "--curve-points", "4000", "--w-min", "1e-6", "--w-max", "40"});
  REQUIRE(r.code == 0);
  const auto table = rows(r.out);
  double integral = 0.0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double w0 = std::stod(table[i - 1].at("w")), w1 = std::stod(table[i].at("w"));
    integral += 0.5 * (w1 - w0) * (std::stod(table[i - 1].at("pdf")) + std::stod(table[i].at("pdf")));
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}
