#include "cli.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtn/closed_form.hpp"
#include "rtn/contraction.hpp"
#include "rtn/distributions.hpp"
#include "rtn/errors.hpp"
#include "rtn/replica_algebra.hpp"
#include "rtn/sampler.hpp"

#ifndef RTN_VERSION_STRING
#define RTN_VERSION_STRING "unknown"
#endif

namespace rtn::cli {

namespace {

using json = nlohmann::ordered_json;
using Field = std::variant<std::monostate, std::int64_t, double, std::string>;

constexpr int kFlushEvery = 32;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c == '\n' ? ' ' : c;
  }
  return quoted + '"';
}

json to_json(const Field& field) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      field);
}

// One output table. CSV carries metadata as "# key=value" lines before the
// column header; JSON-lines carries it as a leading {"meta": ...} object.
class Table {
 public:
  Table(std::ostream& out, Format format, std::vector<std::string> columns, const json& meta)
      : out_(out), format_(format), columns_(std::move(columns)) {
    if (format_ == Format::Csv) {
      for (const auto& [key, value] : meta.items())
        out_ << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump())
             << '\n';
      out_ << "# all quantities are dimensionless\n";
      for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
      out_ << '\n';
    } else {
      out_ << json{{"meta", meta}, {"columns", columns_}}.dump() << '\n';
    }
    out_.flush();
  }

  void row(const std::vector<Field>& fields) {
    if (fields.size() != columns_.size()) throw ShapeError("row width does not match the header");
    if (format_ == Format::Csv) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, std::int64_t>) out_ << v;
              if constexpr (std::is_same_v<T, double>) out_ << format_double(v);
              if constexpr (std::is_same_v<T, std::string>) out_ << csv_escape(v);
            },
            fields[i]);
      }
      out_ << '\n';
    } else {
      json object = json::object();
      for (std::size_t i = 0; i < fields.size(); ++i) object[columns_[i]] = to_json(fields[i]);
      out_ << object.dump() << '\n';
    }
    if (++rows_ % kFlushEvery == 0) out_.flush();
  }

  void trailer(const json& info) {
    if (format_ == Format::Csv) {
      for (const auto& [key, value] : info.items())
        out_ << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump())
             << '\n';
    } else {
      out_ << json{{"trailer", info}}.dump() << '\n';
    }
    out_.flush();
  }

 private:
  std::ostream& out_;
  Format format_;
  std::vector<std::string> columns_;
  std::int64_t rows_ = 0;
};

// Output destination: a file when a path is given, otherwise the fallback stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path);
    if (!file_) throw InvalidArgument("cannot open output file " + path);
    stream_ = &file_;
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

json base_meta(const RunConfig& cfg) {
  json meta;
  meta["tool"] = "rtn";
  meta["subcommand"] = cfg.subcommand;
  meta["schema_version"] = kSchemaVersion;
  meta["version"] = version();
  if (cfg.seed) meta["seed"] = std::to_string(*cfg.seed);
  return meta;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs work(i) for i < count on a worker pool and hands each result to emit(i, r)
// in index order. emit returns false to stop the run; pending results are dropped.
template <typename Result>
void ordered_map(std::size_t count, int threads, const std::function<Result(std::size_t)>& work,
                 const std::function<bool(std::size_t, Result&)>& emit) {
  threads = std::min<int>(resolve_threads(threads), static_cast<int>(std::max<std::size_t>(count, 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      Result r = work(i);
      if (!emit(i, r)) return;
    }
    return;
  }
  std::vector<std::optional<Result>> results(count);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !stop; i = next++) {
        try {
          Result r = work(i);
          std::lock_guard<std::mutex> lock(mutex);
          results[i] = std::move(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!failure) failure = std::current_exception();
          stop = true;
        }
        ready.notify_all();
      }
      ready.notify_all();
    });
  for (std::size_t i = 0; i < count; ++i) {
    std::unique_lock<std::mutex> lock(mutex);
    ready.wait(lock, [&] { return results[i].has_value() || failure; });
    if (!results[i]) break;
    Result r = std::move(*results[i]);
    results[i].reset();
    lock.unlock();
    if (!emit(i, r)) {
      stop = true;
      break;
    }
  }
  stop = true;
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

int parse_int(const std::string& text) {
  int value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw InvalidArgument("not an integer: " + text);
  return value;
}

// "a,b,c", "lo..hi" (every integer) and "lo..hi*f" (geometric, factor f).
std::vector<int> parse_int_grid(const std::string& text) {
  std::vector<int> values;
  for (const std::string& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      values.push_back(parse_int(item));
      continue;
    }
    std::string upper = item.substr(dots + 2);
    int factor = 0;
    if (const auto star = upper.find('*'); star != std::string::npos) {
      factor = parse_int(upper.substr(star + 1));
      upper = upper.substr(0, star);
      if (factor < 2) throw InvalidArgument("range factor must be >= 2 in " + item);
    }
    const int lo = parse_int(item.substr(0, dots));
    const int hi = parse_int(upper);
    if (lo > hi) throw InvalidArgument("empty range " + item);
    if (factor == 0) {
      for (int v = lo; v <= hi; ++v) values.push_back(v);
    } else {
      if (lo < 1) throw InvalidArgument("geometric range must start at >= 1 in " + item);
      for (long long v = lo; v <= hi; v *= factor) values.push_back(static_cast<int>(v));
    }
  }
  return values;
}

std::vector<double> parse_double_grid(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split(text, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not a number: " + item);
    values.push_back(v);
  }
  return values;
}

double env_budget() {
  if (const char* text = std::getenv(kBudgetEnv)) {
    try {
      const double value = std::stod(text);
      if (value > 0.0) return value;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string(kBudgetEnv) + " must be a positive number");
  }
  return kDefaultBudgetMb;
}

Field error_field(const std::string& message) { return message; }

// ---------------------------------------------------------------- ipr-exact

struct IprExactRow {
  int N, d, chi, k;
  Boundary boundary;
  std::optional<HaarComparison> value;
  std::string error;
};

// ---------------------------------------------------------------- contract

struct ContractPoint {
  bool square = false;
  int size = 0;  ///< N for chains, L for square lattices
  int d = 2, chi = 1, k = 1;
  Boundary boundary = Boundary::OBC;
  std::string quantity;
};

double contract_required_mb(const ContractPoint& p) {
  if (p.k < 1) return 0.0;
  const double K = std::tgamma(p.k + 1.0);
  double entries = 0.0;
  if (p.square)
    entries = 2.0 * std::pow(K, p.size + 1);
  else if (p.quantity == "fp")
    entries = 4.0 * K * K;
  else
    entries = 3.0 * K * K;
  return entries * sizeof(double) / (1024.0 * 1024.0);
}

std::string describe(const ContractPoint& p) {
  std::ostringstream text;
  text << p.quantity << (p.square ? " L=" : " N=") << p.size << " d=" << p.d << " chi=" << p.chi
       << " k=" << p.k;
  return text.str();
}

struct ContractRow {
  std::optional<HaarComparison> value;
  std::string error;
  bool budget = false;
};

// ---------------------------------------------------------------- dist

struct DistPoint {
  std::string family;
  DistributionSpec spec;
};

std::optional<double> closed_form_moment(const DistributionSpec& spec, int k) {
  const double kf = std::tgamma(k + 1.0);
  if (const auto* p = std::get_if<PorterThomas>(&spec)) {
    if (!p->dim) return kf;
    return kf * std::exp(k * std::log(*p->dim) - std::log(rising_factorial(*p->dim, k)));
  }
  if (const auto* p = std::get_if<ScalingPT>(&spec)) return kf * std::exp(k * (k - 1) / (2.0 * p->gamma));
  if (const auto* p = std::get_if<RPSExactD2>(&spec))
    return std::pow(std::pow(2.0, k) / (k + 1.0), p->N);
  if (const auto* p = std::get_if<RPSLognormal>(&spec)) {
    const auto [mu, sigma2] = rps_lognormal_params(p->d);
    return std::exp(k * p->N * mu + 0.5 * k * k * p->N * sigma2);
  }
  return std::nullopt;
}

std::vector<double> read_log_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open sample file " + path);
  std::vector<double> w;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    // Either bare log w values or the last column of a raw-sample table.
    const auto comma = line.rfind(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      w.push_back(std::exp(std::stod(cell)));
    } catch (const std::exception&) {
      // header line
    }
  }
  return w;
}

}  // namespace

const char* version() { return RTN_VERSION_STRING; }

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(!grid_d.empty(), "--d must list at least one value");
  require(!grid_k.empty(), "--grid-k must list at least one value");
  require(budget_mb > 0.0, "--budget-mem-mb must be positive");
  require(format == Format::Csv || format == Format::JsonLines, "unknown format");
  const bool square = geometry == Geometry::Square || quantity == "peps";
  if (subcommand == "ipr-exact") {
    require(!grid_N.empty() && !grid_chi.empty(), "ipr-exact needs --grid-N and --grid-chi");
  } else if (subcommand == "contract") {
    require(quantity == "ipr" || quantity == "fp" || quantity == "peps",
            "contract --quantity must be ipr, fp or peps");
    require(!grid_chi.empty(), "contract needs --grid-chi");
    require(square ? !grid_L.empty() : !grid_N.empty(),
            square ? "square contraction needs --grid-L" : "chain contraction needs --grid-N");
    require(!fit_a || quantity == "fp", "--fit-a applies to --quantity fp");
  } else if (subcommand == "sample") {
    require(seed.has_value(), "sample needs --seed");
    require(samples >= 100, "sample needs --samples >= 100");
    require(quantity == "ipr" || quantity == "fp", "sample --quantity must be ipr or fp");
    require(!grid_chi.empty(), "sample needs --grid-chi");
    require(square ? !grid_L.empty() : !grid_N.empty(),
            square ? "square sampling needs --grid-L" : "chain sampling needs --grid-N");
  } else if (subcommand == "dist") {
    require(family == "pt" || family == "scaling" || family == "rps-d2" || family == "rps-lognormal",
            "dist --family must be pt, scaling, rps-d2 or rps-lognormal");
    require(table == "curves" || table == "moments" || table == "ks",
            "dist --table must be curves, moments or ks");
    if (family == "scaling") require(!grid_gamma.empty(), "dist --family scaling needs --grid-gamma");
    if (family == "rps-d2" || family == "rps-lognormal")
      require(!grid_N.empty(), "dist --family " + family + " needs --grid-N");
    require(table != "ks" || !ks_samples.empty(), "dist --table ks needs --ks-samples");
    require(curve_points >= 2 && w_min > 0.0 && w_max > w_min, "invalid curve grid");
  } else {
    throw InvalidArgument("unknown subcommand '" + subcommand + "'");
  }
}

std::optional<RunConfig> parse(int argc, const char* const* argv, std::ostream& out,
                               std::ostream& err, int& exit_code) {
  RunConfig cfg;
  exit_code = kOk;
  std::string grid_N, grid_d, grid_chi, grid_k, grid_L, grid_gamma;
  std::string boundary = "obc", geometry = "chain", format = "csv";
  std::optional<double> budget;
  std::optional<std::uint64_t> seed;

  CLI::App app{"Anticoncentration and design diagnostics of random tensor networks", "rtn"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--grid-N", grid_N, "chain lengths, e.g. 8,16 or 4..12");
  app.add_option("--d", grid_d, "local dimensions (default 2)");
  app.add_option("--grid-chi", grid_chi, "bond dimensions, e.g. 2..2048*2");
  app.add_option("--grid-k", grid_k, "replica counts (default 2)");
  app.add_option("--grid-L", grid_L, "square lattice sides");
  app.add_option("--grid-gamma", grid_gamma, "scaling parameters gamma");
  app.add_option("--boundary", boundary, "obc, pbc or obc,pbc");
  app.add_option("--geometry", geometry, "chain or square");
  app.add_option("--samples", cfg.samples, "Monte Carlo samples per grid point");
  app.add_option("--seed", seed, "master seed (required for sample)");
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--hist-out", cfg.hist_out, "histogram table path (sample)");
  app.add_option("--samples-out", cfg.samples_out, "raw log w table path (sample)");
  app.add_option("--ks-samples", cfg.ks_samples, "log w sample file for dist --table ks");
  app.add_option("--format", format, "csv or jsonl");
  app.add_option("--budget-mem-mb", budget, std::string("memory budget in MB (default $") + kBudgetEnv +
                                                " or 1024)");
  app.add_option("--max-k", cfg.max_k, "largest replica count accepted");
  app.add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  app.add_option("--quantity", cfg.quantity, "ipr, fp or peps");
  app.add_option("--family", cfg.family, "pt, scaling, rps-d2 or rps-lognormal");
  app.add_option("--table", cfg.table, "curves, moments or ks (dist)");
  app.add_option("--curve-points", cfg.curve_points, "points of each density curve");
  app.add_option("--w-min", cfg.w_min, "lower end of the density grid");
  app.add_option("--w-max", cfg.w_max, "upper end of the density grid");
  app.add_flag("--fit-a", cfg.fit_a, "fit the frame-potential constant (contract --quantity fp)");
  app.add_flag("--analytic-continuation", cfg.analytic_continuation,
               "evaluate the OBC formula at non-integer log_d chi");

  app.add_subcommand("ipr-exact", "closed-form IPRs of random MPS");
  app.add_subcommand("sample", "Monte Carlo moments and overlap histograms");
  app.add_subcommand("contract", "replica-network contraction (chain IPR/FP, PEPS IPR)");
  app.add_subcommand("dist", "reference densities, moment tables and KS reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    exit_code = e.get_exit_code() == 0 ? kOk : kConfigError;
    app.exit(e, out, err);
    return std::nullopt;
  }

  try {
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (!grid_N.empty()) cfg.grid_N = parse_int_grid(grid_N);
    if (!grid_d.empty()) cfg.grid_d = parse_int_grid(grid_d);
    if (!grid_chi.empty()) cfg.grid_chi = parse_int_grid(grid_chi);
    if (!grid_k.empty()) cfg.grid_k = parse_int_grid(grid_k);
    if (!grid_L.empty()) cfg.grid_L = parse_int_grid(grid_L);
    if (!grid_gamma.empty()) cfg.grid_gamma = parse_double_grid(grid_gamma);
    cfg.boundaries.clear();
    for (const std::string& b : split(boundary, ',')) cfg.boundaries.push_back(parse_boundary(b));
    if (cfg.boundaries.empty()) throw InvalidArgument("--boundary is empty");
    cfg.geometry = parse_geometry(geometry);
    if (format == "csv")
      cfg.format = Format::Csv;
    else if (format == "jsonl" || format == "json-lines")
      cfg.format = Format::JsonLines;
    else
      throw InvalidArgument("--format must be csv or jsonl");
    cfg.budget_mb = budget ? *budget : env_budget();
    cfg.seed = seed;
    cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    exit_code = kConfigError;
    return std::nullopt;
  }
  return cfg;
}

int cmd_ipr_exact(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  Sink sink(cfg.out, out);
  json meta = base_meta(cfg);
  meta["quantity"] = "D E|<0|psi>|^(2k), closed form";
  Table table(sink.stream(), cfg.format,
              {"N", "d", "chi", "k", "boundary", "value_log", "value", "delta_vs_haar", "status", "message"},
              meta);

  std::vector<IprExactRow> grid;
  for (int N : cfg.grid_N)
    for (int d : cfg.grid_d)
      for (int chi : cfg.grid_chi)
        for (int k : cfg.grid_k)
          for (Boundary b : cfg.boundaries) grid.push_back({N, d, chi, k, b, std::nullopt, {}});

  ClosedFormOptions options;
  options.analytic_continuation = cfg.analytic_continuation;
  int errors = 0;
  ordered_map<IprExactRow>(
      grid.size(), cfg.threads,
      [&](std::size_t i) {
        IprExactRow row = grid[i];
        try {
          if (row.k > cfg.max_k)
            throw UnsupportedSizeError("k = " + std::to_string(row.k) + " exceeds --max-k");
          const EnsembleParams p = EnsembleParams::chain(row.N, row.d, row.chi, row.k, row.boundary);
          row.value = row.boundary == Boundary::OBC ? rmps_ipr_obc_vs_haar(p, options)
                                                    : rmps_ipr_pbc_vs_haar(p);
        } catch (const BudgetError&) {
          throw;
        } catch (const Error& e) {
          row.error = e.what();
        }
        return row;
      },
      [&](std::size_t, IprExactRow& row) {
        std::vector<Field> fields{std::int64_t{row.N}, std::int64_t{row.d}, std::int64_t{row.chi},
                                  std::int64_t{row.k}, std::string(to_string(row.boundary))};
        if (row.value) {
          fields.insert(fields.end(), {row.value->value.log_value, row.value->value.value(),
                                       row.value->delta_vs_haar, std::string("ok"), std::monostate{}});
        } else {
          ++errors;
          fields.insert(fields.end(), {std::monostate{}, std::monostate{}, std::monostate{},
                                       std::string("error"), error_field(row.error)});
        }
        table.row(fields);
        return true;
      });
  table.trailer({{"rows", grid.size()}, {"error_rows", errors}, {"wall_time_s", clock.seconds()}});
  if (errors) err << "warning: " << errors << " grid point(s) produced error rows\n";
  return errors ? kPartialFailure : kOk;
}

int cmd_contract(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  const bool square = cfg.geometry == Geometry::Square || cfg.quantity == "peps";
  const std::string quantity = square ? "peps_ipr" : cfg.quantity;

  std::vector<ContractPoint> grid;
  for (int size : square ? cfg.grid_L : cfg.grid_N)
    for (int d : cfg.grid_d)
      for (int chi : cfg.grid_chi)
        for (int k : cfg.grid_k) {
          if (square || quantity == "fp") {
            grid.push_back({square, size, d, chi, k, Boundary::OBC, quantity});
          } else {
            for (Boundary b : cfg.boundaries) grid.push_back({square, size, d, chi, k, b, quantity});
          }
        }

  std::vector<std::string> rejected;
  for (const ContractPoint& p : grid) {
    const double mb = contract_required_mb(p);
    if (mb > cfg.budget_mb)
      rejected.push_back(describe(p) + " needs " + format_double(mb) + " MB");
  }
  if (!rejected.empty()) {
    err << "error: " << rejected.size() << " grid point(s) exceed the budget of " << cfg.budget_mb
        << " MB:\n";
    for (const std::string& line : rejected) err << "  " << line << '\n';
    return kBudgetError;
  }

  Sink sink(cfg.out, out);
  json meta = base_meta(cfg);
  meta["quantity"] = quantity;
  Table table(sink.stream(), cfg.format,
              {"geometry", "size", "d", "chi", "k", "boundary", "quantity", "value_log", "delta_vs_haar",
               "status", "message"},
              meta);

  int errors = 0;
  bool budget_hit = false;
  std::vector<FitPoint> fit_points;
  ordered_map<ContractRow>(
      grid.size(), cfg.threads,
      [&](std::size_t i) {
        const ContractPoint& p = grid[i];
        ContractRow row;
        try {
          if (p.k > cfg.max_k)
            throw UnsupportedSizeError("k = " + std::to_string(p.k) + " exceeds --max-k");
          if (p.square) {
            row.value = peps_ipr(p.size, p.d, p.chi, p.k, cfg.budget_mb);
          } else {
            const EnsembleParams e = EnsembleParams::chain(p.size, p.d, p.chi, p.k, p.boundary);
            if (p.quantity == "fp")
              row.value = fp_contract(e);
            else
              row.value = p.boundary == Boundary::OBC ? ipr_obc_contract(e) : ipr_pbc_contract(e);
          }
        } catch (const BudgetError& e) {
          row.error = e.what();
          row.budget = true;
        } catch (const Error& e) {
          row.error = e.what();
        }
        return row;
      },
      [&](std::size_t i, ContractRow& row) {
        const ContractPoint& p = grid[i];
        if (row.budget) {
          err << "error: " << row.error << '\n';
          budget_hit = true;
          return false;
        }
        std::vector<Field> fields{std::string(p.square ? "square" : "chain"), std::int64_t{p.size},
                                  std::int64_t{p.d},   std::int64_t{p.chi},
                                  std::int64_t{p.k},   std::string(to_string(p.boundary)),
                                  p.quantity};
        if (row.value) {
          fields.insert(fields.end(), {row.value->value.log_value, row.value->delta_vs_haar,
                                       std::string("ok"), std::monostate{}});
          if (p.quantity == "fp") fit_points.push_back({p.size, p.chi, p.k, row.value->delta_vs_haar});
        } else {
          ++errors;
          fields.insert(fields.end(),
                        {std::monostate{}, std::monostate{}, std::string("error"), error_field(row.error)});
        }
        table.row(fields);
        return true;
      });

  json trailer{{"rows", grid.size()}, {"error_rows", errors}};
  int code = budget_hit ? kBudgetError : errors ? kPartialFailure : kOk;
  if (cfg.fit_a && !budget_hit) {
    try {
      const FitResult fit = fit_fp_constant(fit_points);
      trailer["fit_a"] = fit.a;
      trailer["fit_max_relative_residual"] = fit.max_relative_residual;
      trailer["fit_points_used"] = fit.points_used;
      trailer["fit_rows_rejected"] = fit.rows_rejected;
    } catch (const Error& e) {
      err << "error: fit failed: " << e.what() << '\n';
      trailer["fit_error"] = e.what();
      code = std::max<int>(code, kPartialFailure);
    }
  }
  trailer["wall_time_s"] = clock.seconds();
  table.trailer(trailer);
  return code;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  const bool square = cfg.geometry == Geometry::Square;
  const bool named_out = !cfg.out.empty() && cfg.out != "-";
  std::string hist_path = cfg.hist_out;
  if (hist_path.empty() && named_out) hist_path = cfg.out + ".hist.csv";

  Sink sink(cfg.out, out);
  json meta = base_meta(cfg);
  meta["samples"] = cfg.samples;
  meta["quantity"] = cfg.quantity;
  meta["point_seed"] = "seed + grid point index";
  Table table(sink.stream(), cfg.format,
              {"N", "d", "chi", "k", "boundary", "geometry", "quantity", "mean", "stderr", "n", "seed",
               "exact_delta_vs_haar", "status", "message"},
              meta);

  std::ofstream hist_file;
  std::optional<Table> hist;
  if (!hist_path.empty()) {
    hist_file.open(hist_path);
    if (!hist_file) throw InvalidArgument("cannot open " + hist_path);
    json hmeta = base_meta(cfg);
    hmeta["w"] = "D |<x|psi>|^2 (ipr) or D |<psi|psi'>|^2 (fp)";
    hist.emplace(hist_file, cfg.format,
                 std::vector<std::string>{"N", "d", "chi", "boundary", "geometry", "quantity", "bin_lo",
                                          "bin_hi", "count"},
                 hmeta);
  }
  std::ofstream raw_file;
  std::optional<Table> raw;
  if (!cfg.samples_out.empty()) {
    raw_file.open(cfg.samples_out);
    if (!raw_file) throw InvalidArgument("cannot open " + cfg.samples_out);
    raw.emplace(raw_file, cfg.format,
                std::vector<std::string>{"N", "d", "chi", "boundary", "geometry", "quantity", "index",
                                         "log_w"},
                base_meta(cfg));
  }

  std::vector<EnsembleParams> grid;
  for (int size : square ? cfg.grid_L : cfg.grid_N)
    for (int d : cfg.grid_d)
      for (int chi : cfg.grid_chi)
        for (Boundary b : square ? std::vector<Boundary>{Boundary::OBC} : cfg.boundaries) {
          EnsembleParams p = square ? EnsembleParams::square(size, d, chi, 1)
                                    : EnsembleParams::chain(size, d, chi, 1, b);
          grid.push_back(p);
        }

  int errors = 0;
  int code = kOk;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EnsembleParams p = grid[i];
    const std::uint64_t point_seed = *cfg.seed + i;
    auto head = [&](int k) {
      return std::vector<Field>{std::int64_t{p.N}, std::int64_t{p.d}, std::int64_t{p.chi}, std::int64_t{k},
                                std::string(to_string(p.boundary)), std::string(to_string(p.geometry)),
                                cfg.quantity};
    };
    auto error_rows = [&](const std::string& message) {
      for (int k : cfg.grid_k) {
        auto fields = head(k);
        fields.insert(fields.end(), {std::monostate{}, std::monostate{}, std::monostate{},
                                     std::to_string(point_seed), std::monostate{}, std::string("error"),
                                     message});
        table.row(fields);
        ++errors;
      }
    };
    SamplerOptions options;
    options.seed = point_seed;
    options.samples = cfg.samples;
    options.threads = cfg.threads;
    options.keep_samples = true;
    options.budget_mb = cfg.budget_mb;
    MonteCarloResult mc;
    try {
      mc = cfg.quantity == "fp" ? mc_fp(p, options) : mc_ipr(p, options);
    } catch (const BudgetError& e) {
      err << "error: " << e.what() << '\n';
      code = kBudgetError;
      break;
    } catch (const Error& e) {
      error_rows(e.what());
      continue;
    }
    for (int k : cfg.grid_k) {
      const double log_scale = cfg.quantity == "fp" ? -k * p.log_dim() : (1 - k) * p.log_dim();
      const MomentEstimate estimate = moment_from_samples(mc.w, k, log_scale, cfg.quantity);
      Field exact = std::monostate{};
      try {
        p.k = k;
        if (square)
          exact = peps_ipr(p.L, p.d, p.chi, k, cfg.budget_mb).delta_vs_haar;
        else if (cfg.quantity == "fp")
          exact = fp_contract(p).delta_vs_haar;
        else if (p.boundary == Boundary::PBC)
          exact = rmps_ipr_pbc_vs_haar(p).delta_vs_haar;
        else
          exact = ipr_obc_contract(p).delta_vs_haar;
      } catch (const Error&) {
        // no exact reference at this point
      }
      auto fields = head(k);
      fields.insert(fields.end(), {estimate.mean, estimate.std_error, std::int64_t{estimate.count},
                                   std::to_string(point_seed), exact, std::string("ok"), std::monostate{}});
      table.row(fields);
    }
    if (hist) {
      const Histogram& h = mc.histogram;
      auto hist_row = [&](double lo, double hi, std::int64_t count) {
        hist->row({std::int64_t{p.N}, std::int64_t{p.d}, std::int64_t{p.chi}, std::string(to_string(p.boundary)),
                   std::string(to_string(p.geometry)), cfg.quantity, lo, hi, count});
      };
      hist_row(0.0, h.edges.front(), h.underflow);
      for (std::size_t b = 0; b < h.counts.size(); ++b) hist_row(h.edges[b], h.edges[b + 1], h.counts[b]);
      hist_row(h.edges.back(), std::numeric_limits<double>::infinity(), h.overflow);
    }
    if (raw)
      for (std::size_t s = 0; s < mc.w.size(); ++s)
        raw->row({std::int64_t{p.N}, std::int64_t{p.d}, std::int64_t{p.chi}, std::string(to_string(p.boundary)),
                  std::string(to_string(p.geometry)), cfg.quantity, static_cast<std::int64_t>(s),
                  std::log(mc.w[s])});
  }
  const double wall = clock.seconds();
  table.trailer({{"error_rows", errors}, {"wall_time_s", wall}});
  if (hist) hist->trailer({{"wall_time_s", wall}});
  if (raw) raw->trailer({{"wall_time_s", wall}});
  if (code == kOk && errors) code = kPartialFailure;
  return code;
}

int cmd_dist(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  std::vector<DistPoint> grid;
  if (cfg.family == "pt") {
    if (cfg.grid_N.empty()) {
      grid.push_back({cfg.family, PorterThomas{}});
    } else {
      for (int N : cfg.grid_N)
        for (int d : cfg.grid_d) grid.push_back({cfg.family, PorterThomas{std::pow(double(d), N)}});
    }
  } else if (cfg.family == "scaling") {
    for (double g : cfg.grid_gamma) grid.push_back({cfg.family, ScalingPT{g}});
  } else if (cfg.family == "rps-d2") {
    for (int N : cfg.grid_N) grid.push_back({cfg.family, RPSExactD2{N}});
  } else {
    for (int N : cfg.grid_N)
      for (int d : cfg.grid_d) grid.push_back({cfg.family, RPSLognormal{N, d}});
  }

  Sink sink(cfg.out, out);
  json meta = base_meta(cfg);
  meta["family"] = cfg.family;
  meta["table"] = cfg.table;
  int errors = 0;
  const QuadratureConfig quadrature;
  constexpr double kMomentTolerance = 1e-6;

  if (cfg.table == "curves") {
    Table table(sink.stream(), cfg.format, {"family", "label", "w", "pdf", "status", "message"}, meta);
    const std::vector<double> w = log_grid(cfg.w_min, cfg.w_max, cfg.curve_points);
    for (const DistPoint& point : grid) {
      const std::string label = describe(point.spec);
      try {
        validate(point.spec);
        for (double x : w)
          table.row({point.family, label, x, pdf(point.spec, x, quadrature), std::string("ok"), std::monostate{}});
      } catch (const Error& e) {
        ++errors;
        table.row({point.family, label, std::monostate{}, std::monostate{}, std::string("error"),
                   std::string(e.what())});
      }
    }
    table.trailer({{"error_rows", errors}, {"wall_time_s", clock.seconds()}});
  } else if (cfg.table == "moments") {
    Table table(sink.stream(), cfg.format,
                {"family", "label", "k", "moment", "closed_form", "relative_error", "tolerance", "status",
                 "message"},
                meta);
    for (const DistPoint& point : grid) {
      const std::string label = describe(point.spec);
      for (int k : cfg.grid_k) {
        try {
          validate(point.spec);
          const MomentResult m = moment(point.spec, k, quadrature);
          const std::optional<double> exact = closed_form_moment(point.spec, k);
          Field reference = std::monostate{};
          Field rel = std::monostate{};
          std::string status = "ok";
          if (exact) {
            reference = *exact;
            const double e = std::abs(m.value / *exact - 1.0);
            rel = e;
            if (!(e <= kMomentTolerance)) status = "out_of_tolerance";
          }
          table.row({point.family, label, std::int64_t{k}, m.value, reference, rel, kMomentTolerance, status,
                     std::monostate{}});
        } catch (const Error& e) {
          ++errors;
          table.row({point.family, label, std::int64_t{k}, std::monostate{}, std::monostate{}, std::monostate{},
                     kMomentTolerance, std::string("error"), std::string(e.what())});
        }
      }
    }
    table.trailer({{"error_rows", errors}, {"wall_time_s", clock.seconds()}});
  } else {
    const std::vector<double> samples = read_log_samples(cfg.ks_samples);
    Table table(sink.stream(), cfg.format, {"family", "label", "ks", "n", "status", "message"}, meta);
    for (const DistPoint& point : grid) {
      const std::string label = describe(point.spec);
      try {
        const double ks = ks_distance(samples, point.spec, quadrature);
        table.row({point.family, label, ks, static_cast<std::int64_t>(samples.size()), std::string("ok"),
                   std::monostate{}});
      } catch (const Error& e) {
        ++errors;
        table.row({point.family, label, std::monostate{}, static_cast<std::int64_t>(samples.size()),
                   std::string("error"), std::string(e.what())});
      }
    }
    table.trailer({{"error_rows", errors}, {"wall_time_s", clock.seconds()}});
  }
  if (errors) err << "warning: " << errors << " row(s) failed\n";
  return errors ? kPartialFailure : kOk;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    if (cfg.subcommand == "ipr-exact") return cmd_ipr_exact(cfg, out, err);
    if (cfg.subcommand == "sample") return cmd_sample(cfg, out, err);
    if (cfg.subcommand == "contract") return cmd_contract(cfg, out, err);
    return cmd_dist(cfg, out, err);
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kBudgetError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  int code = kOk;
  const std::optional<RunConfig> cfg = parse(argc, argv, out, err, code);
  if (!cfg) return code;
  return run(*cfg, out, err);
}

}  // namespace rtn::cli
