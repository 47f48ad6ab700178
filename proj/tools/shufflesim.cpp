// Command-line front end: storage-rate trade-off tables, epoch simulations
// with trace output, exhaustive verification sweeps, and gap maps.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "codedshuffle/bounds.hpp"
#include "codedshuffle/harness.hpp"

namespace cs = codedshuffle;
using cs::Rational;

namespace {

struct Cell {
  Rational value;
  bool finite = true;
};

struct Table {
  std::vector<std::string> columns;      // logical names; each expands to _num/_den/_dec
  std::vector<std::vector<Cell>> rows;
};

std::string decimal_12(const Cell& cell) {
  if (!cell.finite) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", cell.value.to_double());
  return buf;
}

void emit_csv(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ",";
    out << table.columns[c] << "_num," << table.columns[c] << "_den," << table.columns[c] << "_dec";
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      if (row[c].finite) {
        out << row[c].value.num() << "," << row[c].value.den() << "," << decimal_12(row[c]);
      } else {
        out << "0,0," << decimal_12(row[c]);
      }
    }
    out << "\n";
  }
}

void emit_json(std::ostream& out, const Table& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj;
    for (std::size_t c = 0; c < row.size(); ++c) {
      obj[table.columns[c] + "_num"] = row[c].finite ? row[c].value.num() : 0;
      obj[table.columns[c] + "_den"] = row[c].finite ? row[c].value.den() : 0;
      obj[table.columns[c] + "_dec"] = decimal_12(row[c]);
    }
    rows.push_back(std::move(obj));
  }
  out << rows.dump(2) << "\n";
}

void emit_table(const Table& table, const std::string& format, const std::string& out_path) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw cs::Error("cannot open output file '" + out_path + "'");
    out = &file;
  }
  if (format == "csv") {
    emit_csv(*out, table);
  } else {
    emit_json(*out, table);
  }
}

// Breakpoints of the involved envelopes plus a uniform grid over [N/K, N].
std::vector<Rational> sample_storages(int workers, int points, int grid,
                                      const std::vector<cs::bounds::Envelope*>& envelopes) {
  std::set<Rational> samples;
  for (const auto* env : envelopes) {
    for (const auto& bp : env->breakpoints()) samples.insert(bp.storage);
  }
  Rational lo(points, workers);
  Rational hi(points);
  for (int t = 0; t < grid; ++t) {
    samples.insert(lo + (hi - lo) * Rational(t, grid - 1));
  }
  return {samples.begin(), samples.end()};
}

int cmd_tradeoff(int workers, int points, bool aligned, int grid, const std::string& format,
                 const std::string& out_path) {
  cs::bounds::Envelope upper = aligned ? cs::bounds::aligned_upper_envelope(workers, points)
                                       : cs::bounds::upper_envelope(workers, points);
  cs::bounds::Envelope lower = cs::bounds::lower_envelope(workers, points);
  Table table;
  table.columns = {"S", "upper", "lower", "gap"};
  for (const Rational& s : sample_storages(workers, points, grid, {&upper, &lower})) {
    cs::bounds::GapRatio gap = cs::bounds::gap_ratio(workers, points, s, aligned);
    table.rows.push_back({{s}, {upper.eval(s)}, {lower.eval(s)}, {gap.value, gap.finite}});
  }
  emit_table(table, format, out_path);
  return 0;
}

int cmd_gap(int workers, int points, int grid, const std::string& format,
            const std::string& out_path) {
  cs::bounds::Envelope upper_b = cs::bounds::upper_envelope(workers, points);
  cs::bounds::Envelope upper_a = cs::bounds::aligned_upper_envelope(workers, points);
  cs::bounds::Envelope lower = cs::bounds::lower_envelope(workers, points);
  Table table;
  table.columns = {"S", "upper_baseline", "upper_aligned", "lower", "gap_baseline", "gap_aligned"};
  for (const Rational& s : sample_storages(workers, points, grid, {&upper_b, &upper_a, &lower})) {
    cs::bounds::GapRatio gb = cs::bounds::gap_ratio(workers, points, s, false);
    cs::bounds::GapRatio ga = cs::bounds::gap_ratio(workers, points, s, true);
    table.rows.push_back({{s},
                          {upper_b.eval(s)},
                          {upper_a.eval(s)},
                          {lower.eval(s)},
                          {gb.value, gb.finite},
                          {ga.value, ga.finite}});
  }
  emit_table(table, format, out_path);
  return 0;
}

struct SchemeFlags {
  int workers = 0;
  int points = 0;
  int dim = 0;  // 0: derive the smallest admissible dimension
  std::string scheme = "baseline";
  std::vector<int> storage_index;
  std::vector<int> storage_m;
  std::string alpha_text;
};

void add_scheme_flags(CLI::App* cmd, SchemeFlags& flags, bool with_scheme) {
  cmd->add_option("-K,--workers", flags.workers, "number of workers K")->required();
  cmd->add_option("-N,--points", flags.points, "number of data points N")->required();
  cmd->add_option("-d,--dim", flags.dim, "bytes per data point (default: smallest admissible)");
  if (with_scheme) {
    cmd->add_option("--scheme", flags.scheme, "baseline | aligned | composite")
        ->check(CLI::IsMember({"baseline", "aligned", "composite"}));
    cmd->add_option("--storage-index", flags.storage_index,
                    "baseline storage index i in [0:K] (twice for composite)");
    cmd->add_option("--storage-m", flags.storage_m,
                    "aligned storage multiplier m in {1,K-2,K-1} (twice for composite)");
    cmd->add_option("--alpha", flags.alpha_text, "memory-sharing coefficient for composite (p/q)");
  }
}

void check_common(const SchemeFlags& flags) {
  if (flags.workers < 2) throw cs::InvalidConfig("--workers must be at least 2");
  if (flags.points < flags.workers || flags.points % flags.workers != 0) {
    throw cs::InvalidConfig("--points must be a positive multiple of --workers");
  }
}

int default_fragments(const cs::harness::SchemeConfig& config) {
  if (std::holds_alternative<cs::baseline::BaselineConfig>(config)) {
    return std::get<cs::baseline::BaselineConfig>(config).fragments_per_point();
  }
  return std::get<cs::aligned::AlignedConfig>(config).fragments_per_point();
}

// Sub-scheme prototypes in flag order: every --storage-index becomes a
// baseline slice, every --storage-m an aligned slice.
std::vector<cs::harness::SchemeConfig> sub_protos(const SchemeFlags& flags) {
  std::vector<cs::harness::SchemeConfig> protos;
  for (int i : flags.storage_index) {
    protos.push_back(cs::baseline::BaselineConfig{flags.workers, flags.points, 1, i});
  }
  for (int m : flags.storage_m) {
    protos.push_back(cs::aligned::AlignedConfig{flags.workers, flags.points, 1, m});
  }
  return protos;
}

struct BuiltScheme {
  std::unique_ptr<cs::harness::Scheme> single;  // null when composite
  std::optional<cs::harness::CompositeScheme> composite;
  int dim = 0;
};

BuiltScheme build_scheme(const SchemeFlags& flags) {
  check_common(flags);
  BuiltScheme built;
  if (flags.scheme == "baseline" || flags.scheme == "aligned") {
    bool is_baseline = flags.scheme == "baseline";
    if (is_baseline && (flags.storage_index.size() != 1 || !flags.storage_m.empty())) {
      throw cs::InvalidConfig("baseline scheme needs exactly one --storage-index and no --storage-m");
    }
    if (!is_baseline && (flags.storage_m.size() != 1 || !flags.storage_index.empty())) {
      throw cs::InvalidConfig("aligned scheme needs exactly one --storage-m and no --storage-index");
    }
    if (is_baseline) {
      cs::baseline::BaselineConfig config{flags.workers, flags.points, 1, flags.storage_index[0]};
      config.dim = flags.dim > 0 ? flags.dim : config.fragments_per_point();
      if (config.dim % config.fragments_per_point() != 0) {
        throw cs::DivisibilityError("--dim must be divisible by C(K,i) = " +
                                    std::to_string(config.fragments_per_point()));
      }
      built.dim = config.dim;
      built.single = cs::harness::make_scheme(config);
    } else {
      cs::aligned::AlignedConfig config{flags.workers, flags.points, 1, flags.storage_m[0]};
      config.dim = flags.dim > 0 ? flags.dim : config.fragments_per_point();
      if (config.dim % config.fragments_per_point() != 0) {
        throw cs::DivisibilityError("--dim must be divisible by C(K-1,m-1) = " +
                                    std::to_string(config.fragments_per_point()));
      }
      built.dim = config.dim;
      built.single = cs::harness::make_scheme(config);
    }
    return built;
  }

  // Composite: two sub-schemes sharing the byte dimension.
  std::vector<cs::harness::SchemeConfig> protos = sub_protos(flags);
  if (protos.size() != 2) {
    throw cs::InvalidConfig(
        "composite scheme needs exactly two storage parameters across --storage-index/--storage-m");
  }
  if (flags.alpha_text.empty()) throw cs::InvalidConfig("composite scheme needs --alpha");
  Rational alpha = Rational::parse(flags.alpha_text);
  if (alpha < Rational(0) || alpha > Rational(1)) {
    throw cs::InvalidConfig("--alpha must lie in [0,1]");
  }

  int dim = flags.dim;
  if (dim == 0) {
    // Smallest d with integer slices that satisfy both sub-schemes.
    std::int64_t q = alpha.den();
    std::int64_t p = alpha.num();
    std::int64_t t = 1;
    std::int64_t c_left = default_fragments(protos[0]);
    std::int64_t c_right = default_fragments(protos[1]);
    if (p > 0) t = std::lcm(t, c_left / std::gcd(c_left, p));
    if (q - p > 0) t = std::lcm(t, c_right / std::gcd(c_right, q - p));
    dim = static_cast<int>(q * t);
  }
  built.dim = dim;
  built.composite = cs::harness::CompositeScheme::make(alpha, protos[0], protos[1], dim);
  return built;
}

cs::harness::ShuffleMode parse_mode(const std::string& text) {
  if (text == "cyclic") return cs::harness::ShuffleMode::Cyclic;
  if (text == "random-derangement") return cs::harness::ShuffleMode::RandomDerangement;
  if (text == "random") return cs::harness::ShuffleMode::Random;
  if (text == "exhaustive") return cs::harness::ShuffleMode::Exhaustive;
  throw cs::InvalidConfig("--shuffle must be cyclic | random-derangement | random | exhaustive");
}

int cmd_simulate(const SchemeFlags& flags, int epochs, const std::string& shuffle,
                 std::uint64_t seed, const std::string& data_path, const std::string& out_path) {
  BuiltScheme built = build_scheme(flags);
  cs::DataSet data = data_path.empty()
                         ? cs::DataSet::generate(flags.points, built.dim, seed)
                         : cs::DataSet::from_file(data_path, flags.points, built.dim);
  cs::harness::RunOptions options;
  options.epochs = epochs;
  options.mode = parse_mode(shuffle);
  options.seed = seed;

  std::vector<cs::harness::EpochRecord> records =
      built.single ? cs::harness::run(*built.single, data, options)
                   : cs::harness::run_composite(*built.composite, data, options);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw cs::Error("cannot open output file '" + out_path + "'");
    out = &file;
  }
  cs::harness::write_trace(*out, records);

  // Every derangement epoch must hit the formula rate exactly; decode
  // failures already aborted inside the harness.
  if (options.mode != cs::harness::ShuffleMode::Exhaustive) {
    cs::Assignment prev = cs::identity_assignment(flags.workers, flags.points);
    for (const auto& rec : records) {
      bool deranged = cs::shuffling_matrix(prev, rec.shuffle).is_derangement();
      if (deranged && rec.measured_rate != rec.formula_rate) {
        nlohmann::json diag{{"error", "rate-mismatch"},
                            {"epoch", rec.epoch},
                            {"measured", rec.measured_rate.to_string()},
                            {"formula", rec.formula_rate.to_string()}};
        std::cerr << diag.dump() << "\n";
        return 1;
      }
      prev = rec.shuffle;
    }
  }
  return 0;
}

int cmd_verify(const SchemeFlags& flags) {
  BuiltScheme built = build_scheme(flags);
  if (!built.single) throw cs::InvalidConfig("verify drives a single scheme, not a composite");
  cs::DataSet data = cs::DataSet::generate(flags.points, built.dim, 1);
  cs::harness::RunOptions options;
  options.mode = cs::harness::ShuffleMode::Exhaustive;
  std::vector<cs::harness::EpochRecord> records = cs::harness::run(*built.single, data, options);

  Rational max_rate(0);
  Rational min_rate = records.empty() ? Rational(0) : records.front().measured_rate;
  int passes = 0;
  for (const auto& rec : records) {
    max_rate = std::max(max_rate, rec.measured_rate);
    min_rate = std::min(min_rate, rec.measured_rate);
    if (rec.decode_ok) ++passes;
  }
  bool ok = passes == static_cast<int>(records.size()) && !records.empty() &&
            max_rate == built.single->formula_rate();
  std::cout << "cases: " << records.size() << "\n"
            << "decode passes: " << passes << "\n"
            << "max rate: " << max_rate.to_string() << "\n"
            << "min rate: " << min_rate.to_string() << "\n"
            << "formula rate: " << built.single->formula_rate().to_string() << "\n"
            << (ok ? "VERIFY PASS" : "VERIFY FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coded data shuffling simulator and trade-off calculator"};
  app.require_subcommand(1);

  // tradeoff
  SchemeFlags tr_flags;
  int tr_grid = 33;
  std::string tr_scheme = "baseline";
  std::string tr_format = "csv";
  std::string tr_out;
  CLI::App* tradeoff = app.add_subcommand("tradeoff", "storage-rate trade-off table");
  add_scheme_flags(tradeoff, tr_flags, false);
  tradeoff->add_option("--scheme", tr_scheme, "upper envelope: baseline | aligned")
      ->check(CLI::IsMember({"baseline", "aligned"}));
  tradeoff->add_option("--grid", tr_grid, "uniform grid sample count (>= 2)")
      ->check(CLI::Range(2, 1000000));
  tradeoff->add_option("--format", tr_format)->check(CLI::IsMember({"csv", "json"}));
  tradeoff->add_option("--out", tr_out, "output path (default stdout)");

  // gap
  SchemeFlags gap_flags;
  int gap_grid = 33;
  std::string gap_format = "csv";
  std::string gap_out;
  CLI::App* gap = app.add_subcommand("gap", "baseline and aligned gap-ratio map");
  add_scheme_flags(gap, gap_flags, false);
  gap->add_option("--grid", gap_grid)->check(CLI::Range(2, 1000000));
  gap->add_option("--format", gap_format)->check(CLI::IsMember({"csv", "json"}));
  gap->add_option("--out", gap_out, "output path (default stdout)");

  // simulate
  SchemeFlags sim_flags;
  int sim_epochs = 1;
  std::string sim_shuffle = "cyclic";
  std::uint64_t sim_seed = 0;
  std::string sim_data;
  std::string sim_out;
  CLI::App* simulate = app.add_subcommand("simulate", "run epochs and write a trace");
  add_scheme_flags(simulate, sim_flags, true);
  simulate->add_option("--epochs", sim_epochs)->check(CLI::Range(0, 1000000));
  simulate->add_option("--shuffle", sim_shuffle,
                       "cyclic | random-derangement | random | exhaustive");
  simulate->add_option("--seed", sim_seed, "64-bit seed for data and shuffles");
  simulate->add_option("--data", sim_data, "raw N*d-byte data file (default: seeded generation)");
  simulate->add_option("--out", sim_out, "trace path (default stdout)");

  // verify
  SchemeFlags ver_flags;
  CLI::App* verify = app.add_subcommand("verify", "exhaustive shuffle verification (K <= 6)");
  add_scheme_flags(verify, ver_flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tradeoff->parsed()) {
      check_common(tr_flags);
      return cmd_tradeoff(tr_flags.workers, tr_flags.points, tr_scheme == "aligned", tr_grid,
                          tr_format, tr_out);
    }
    if (gap->parsed()) {
      check_common(gap_flags);
      return cmd_gap(gap_flags.workers, gap_flags.points, gap_grid, gap_format, gap_out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_flags, sim_epochs, sim_shuffle, sim_seed, sim_data, sim_out);
    }
    if (verify->parsed()) {
      return cmd_verify(ver_flags);
    }
  } catch (const cs::InvalidConfig& e) {
    nlohmann::json diag{{"error", "usage"}, {"message", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 2;
  } catch (const cs::DivisibilityError& e) {
    nlohmann::json diag{{"error", "usage"}, {"message", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 2;
  } catch (const cs::SliceMismatch& e) {
    nlohmann::json diag{{"error", "usage"}, {"message", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 2;
  } catch (const cs::ExhaustiveTooLarge& e) {
    nlohmann::json diag{{"error", "usage"}, {"message", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 2;
  } catch (const cs::Error& e) {
    nlohmann::json diag{{"error", "failure"}, {"message", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 1;
  }
  return 2;
}
