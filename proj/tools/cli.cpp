#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crisk/backtest.hpp"
#include "crisk/csv.hpp"
#include "crisk/dss_ledger.hpp"
#include "crisk/error.hpp"
#include "crisk/market_data.hpp"
#include "crisk/portfolio_opt.hpp"
#include "crisk/risk_sim.hpp"
#include "crisk/universe.hpp"

namespace crisk::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option groups

struct Common {
  std::string out_dir = "out";
  std::string label = "latest";
  std::string data_dir;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output root; files go to <out>/<subcommand>/<label>/")
      ->capture_default_str();
  sub->add_option("--label", c.label, "Run label")->capture_default_str();
  sub->add_option("--data-dir", c.data_dir, "Directory holding default input files")->envname("CRISK_DATA_DIR");
  sub->add_option("--threads", c.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
}

struct UniverseOpts {
  std::string universe_path;
  std::string symbols;
  std::optional<double> cap;
  bool filter = false;
  int max_rank = 100;
  double min_age_years = 3.0;
  bool keep_stablecoins = false;
};

void add_universe(CLI::App* sub, UniverseOpts& u) {
  sub->add_option("--universe", u.universe_path, "Universe config file");
  sub->add_option("--symbols", u.symbols, "Comma-separated symbols (overrides the universe list)");
  sub->add_option("--caps", u.cap, "Uniform per-token cap (overrides universe caps)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_flag("--filter", u.filter, "Apply rank / age / stablecoin filtering from the universe file");
  sub->add_option("--max-rank", u.max_rank, "Filter: highest market-cap rank kept")->capture_default_str();
  sub->add_option("--min-age", u.min_age_years, "Filter: minimum token age in years")->capture_default_str();
  sub->add_flag("--keep-stablecoins", u.keep_stablecoins, "Filter: do not drop stablecoins");
}

json universe_params(const UniverseOpts& u) {
  json j;
  j["universe"] = u.universe_path;
  j["symbols"] = u.symbols;
  j["caps"] = u.cap ? json(*u.cap) : json(nullptr);
  j["filter"] = u.filter;
  j["max_rank"] = u.max_rank;
  j["min_age_years"] = u.min_age_years;
  j["keep_stablecoins"] = u.keep_stablecoins;
  return j;
}

struct SimOpts {
  double gamma = 2.0;
  double theta = 1.5;
  int horizon = 365;
  int runs = 10'000;
  std::uint64_t seed = 0;
  std::string gbm_params = "resampled";
  int estimation_window = 200;
};

void add_sim(CLI::App* sub, SimOpts& s) {
  sub->add_option("--gamma", s.gamma, "Initial overcollateralization")->capture_default_str();
  sub->add_option("--theta", s.theta, "Required overcollateralization")->capture_default_str();
  sub->add_option("--horizon", s.horizon, "Horizon in days")->capture_default_str();
  sub->add_option("--runs", s.runs, "Monte Carlo runs")->capture_default_str();
  sub->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
  sub->add_option("--gbm-params", s.gbm_params, "GBM drift/covariance source")
      ->check(CLI::IsMember({"resampled", "fixed"}))
      ->capture_default_str();
  sub->add_option("--estimation-window", s.estimation_window, "Days per resampled GBM estimation window")
      ->capture_default_str();
}

SimConfig sim_config(const SimOpts& s, unsigned threads) {
  SimConfig c;
  c.gamma = s.gamma;
  c.theta = s.theta;
  c.horizon_days = s.horizon;
  c.n_runs = s.runs;
  c.seed = s.seed;
  c.gbm_parameters = s.gbm_params == "fixed" ? GbmParameters::kFixed : GbmParameters::kResampled;
  c.estimation_window_days = s.estimation_window;
  c.threads = threads;
  c.validate();
  return c;
}

json sim_params(const SimOpts& s) {
  return json{{"gamma", s.gamma},   {"theta", s.theta}, {"horizon_days", s.horizon},
              {"n_runs", s.runs},   {"seed", s.seed},   {"gbm_parameters", s.gbm_params},
              {"estimation_window_days", s.estimation_window}};
}

// ---------------------------------------------------------------------------
// Helpers

std::string resolve_input(const std::string& given, const Common& c, const char* default_name,
                          const char* flag) {
  if (!given.empty()) return given;
  if (!c.data_dir.empty()) return (fs::path(c.data_dir) / default_name).string();
  throw UsageError(std::string(flag) + " is required (or set --data-dir / CRISK_DATA_DIR)");
}

std::optional<Date> date_option(const std::string& text, const char* flag) {
  if (text.empty()) return std::nullopt;
  const auto d = parse_date(text);
  if (!d) throw UsageError(std::string(flag) + ": invalid date '" + text + "' (YYYY-MM-DD expected)");
  return d;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> fields;
  if (!csv::split_record(text, fields)) throw UsageError("unterminated quote in list '" + text + "'");
  std::vector<std::string> out;
  for (auto& f : fields) {
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

std::string fmt(double v) { return csv::format_number(v); }

json weights_json(const Symbols& symbols, const Eigen::VectorXd& w) {
  json j = json::object();
  for (std::size_t i = 0; i < symbols.size(); ++i) j[symbols[i]] = w[static_cast<Eigen::Index>(i)];
  return j;
}

json solver_json(const SolverReport& r) {
  return json{{"objective", r.objective},
              {"kkt_residual", r.kkt_residual},
              {"iterations", r.iterations},
              {"refine_steps", r.refine_steps},
              {"converged", r.converged},
              {"degenerate_objective", r.degenerate_objective},
              {"semicov_approximation", r.semicov_approximation}};
}

json sim_json(const SimReport& r) {
  return json{{"failure_probability", r.failure_probability},
              {"std_error", r.std_error},
              {"annual_volatility", r.annual_volatility},
              {"annual_semideviation", r.annual_semideviation},
              {"n_runs", r.n_runs},
              {"mode", to_string(r.mode)},
              {"seed", r.seed},
              {"gamma", r.gamma},
              {"theta", r.theta},
              {"horizon_days", r.horizon_days}};
}

class Output {
 public:
  Output(const Common& c, const std::string& subcommand) {
    if (c.label.empty() || c.label.find('/') != std::string::npos || c.label == "." || c.label == "..") {
      throw UsageError("--label must be a plain directory name");
    }
    dir_ = fs::path(c.out_dir) / subcommand / c.label;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    if (!f) throw IoError("cannot write " + p.string());
    files_.insert(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void manifest(const std::string& subcommand, json params, json inputs) {
    files_.insert("manifest.json");
    json m;
    m["tool"] = "crisk";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["params"] = std::move(params);
    m["inputs"] = std::move(inputs);
    m["outputs"] = std::vector<std::string>(files_.begin(), files_.end());
    write_json("manifest.json", m);
  }

  [[nodiscard]] std::string dir() const { return dir_.string(); }

 private:
  fs::path dir_;
  std::set<std::string> files_;
};

struct Selection {
  Symbols symbols;
  std::vector<double> caps;
};

Selection select_universe(const UniverseOpts& u, const PricePanel& panel, Date as_of) {
  std::optional<UniverseConfig> cfg;
  if (!u.universe_path.empty()) cfg = load_universe(u.universe_path);

  Selection s;
  if (!u.symbols.empty()) {
    s.symbols = split_list(u.symbols);
  } else if (cfg) {
    s.symbols = cfg->symbols();
  } else {
    s.symbols = panel.symbols();
  }

  if (u.filter) {
    if (!cfg) throw UsageError("--filter needs --universe");
    std::vector<UniverseEntry> entries;
    for (const auto& sym : s.symbols) {
      if (const UniverseEntry* e = cfg->find(sym)) {
        entries.push_back(*e);
      } else {
        UniverseEntry bare;
        bare.symbol = sym;
        entries.push_back(bare);
      }
    }
    UniverseFilter f;
    f.max_rank = u.max_rank;
    f.min_age_years = u.min_age_years;
    f.exclude_stablecoins = !u.keep_stablecoins;
    s.symbols = filter_universe(entries, f, as_of);
  }
  if (s.symbols.empty()) throw EmptyUniverseError("no symbols selected");

  if (u.cap) {
    s.caps.assign(s.symbols.size(), *u.cap);
  } else if (cfg) {
    s.caps = cfg->caps_for(s.symbols);
  } else {
    s.caps.assign(s.symbols.size(), kDefaultCap);
  }
  return s;
}

/// Panel row of the last date on or before `end` (the last row when unset).
std::size_t end_row(const PricePanel& panel, std::optional<Date> end) {
  const auto& dates = panel.dates();
  if (dates.empty()) throw InsufficientDataError("price file holds no rows");
  if (!end) return dates.size() - 1;
  const auto it = std::upper_bound(dates.begin(), dates.end(), *end);
  if (it == dates.begin()) throw InsufficientDataError("no prices on or before " + format_date(*end));
  return static_cast<std::size_t>(it - dates.begin()) - 1;
}

/// Aligned table over the `window` returns ending at panel row `last`.
PriceTable window_table(const PricePanel& panel, const Symbols& symbols, int window, std::size_t last) {
  if (window < 2) throw DomainError("--window must be >= 2");
  const auto w = static_cast<std::size_t>(window);
  if (last < w) {
    throw InsufficientDataError("a " + std::to_string(window) + "-day window needs " + std::to_string(w + 1) +
                                " dates up to " + format_date(panel.dates()[last]));
  }
  AlignOptions opts;
  opts.range = DateRange{panel.dates()[last - w], panel.dates()[last]};
  opts.symbols = symbols;
  opts.min_coverage = 1.0;
  return align(panel, opts);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<NamedPortfolio> read_portfolios(const std::string& path) {
  csv::Reader reader(path, {"portfolio", "symbol", "weight"});
  std::vector<NamedPortfolio> out;
  std::vector<std::vector<double>> weights;
  std::map<std::string, std::size_t> index;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f[0].empty()) reader.fail("empty portfolio name");
    if (f[1].empty()) reader.fail("empty symbol");
    double w = 0.0;
    if (!csv::parse_double(f[2], w) || !std::isfinite(w) || w < 0.0) reader.fail("invalid weight '" + f[2] + "'");
    auto [it, fresh] = index.try_emplace(f[0], out.size());
    if (fresh) {
      out.push_back(NamedPortfolio{f[0], {}, {}});
      weights.emplace_back();
    }
    NamedPortfolio& p = out[it->second];
    if (std::find(p.symbols.begin(), p.symbols.end(), f[1]) != p.symbols.end()) {
      reader.fail("duplicate symbol " + f[1] + " in portfolio " + f[0]);
    }
    p.symbols.push_back(f[1]);
    weights[it->second].push_back(w);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].weights = to_vector(weights[i]);
    const double sum = out[i].weights.sum();
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DomainError(path + ": weights of portfolio " + out[i].name + " sum to " + fmt(sum));
    }
  }
  if (out.empty()) throw EmptyPortfolioError(path + ": no portfolios");
  return out;
}

std::string portfolios_csv(const std::vector<NamedPortfolio>& portfolios) {
  std::ostringstream s;
  csv::write_row(s, {"portfolio", "symbol", "weight"});
  for (const auto& p : portfolios) {
    for (std::size_t i = 0; i < p.symbols.size(); ++i) {
      csv::write_row(s, {p.name, p.symbols[i], fmt(p.weights[static_cast<Eigen::Index>(i)])});
    }
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeOpts {
  Common common;
  UniverseOpts universe;
  std::string prices;
  int window = 200;
  std::string end;
  std::string objective = "semivariance";
  std::string method = "scenario";
  std::string name = "optimized";
};

void run_optimize(const OptimizeOpts& o, std::ostream& out) {
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  const PricePanel panel = read_price_panel(prices_path);
  const std::size_t last = end_row(panel, date_option(o.end, "--end"));
  const Selection sel = select_universe(o.universe, panel, panel.dates()[last]);
  const PriceTable table = window_table(panel, sel.symbols, o.window, last);
  const ReturnMatrix returns = log_returns(table);
  const Eigen::VectorXd caps = to_vector(sel.caps);

  OptimizedPortfolio opt;
  const RiskModel model = estimate_risk_model(returns);
  if (o.objective == "variance") {
    opt = min_variance(model, caps);
  } else {
    const auto method = o.method == "semicov" ? SemivarianceMethod::kSemicovMatrix : SemivarianceMethod::kScenario;
    opt = min_semivariance(returns, caps, method);
  }
  const Eigen::VectorXd& w = opt.portfolio.weights;
  const AnnualMetrics metrics = annualized_metrics(w, returns);

  Output output(o.common, "optimize");
  output.write("weights.csv", portfolios_csv({NamedPortfolio{o.name, sel.symbols, w}}));
  json report;
  report["objective"] = o.objective;
  report["semivariance_method"] = o.objective == "variance" ? json(nullptr) : json(o.method);
  report["window"] = {{"start", format_date(returns.window.start)},
                      {"end", format_date(returns.window.end)},
                      {"returns", returns.n_obs()}};
  report["symbols"] = sel.symbols;
  report["weights"] = weights_json(sel.symbols, w);
  report["caps"] = weights_json(sel.symbols, caps);
  report["solver"] = solver_json(opt.report);
  report["annual_volatility"] = metrics.volatility;
  report["annual_semideviation"] = metrics.semideviation;
  report["expected_annual_return"] = kDaysPerYear * model.mu.dot(w);
  report["cov_repaired"] = model.cov_repaired;
  output.write_json("report.json", report);

  json params = universe_params(o.universe);
  params.update(json{{"window_days", o.window}, {"end", o.end}, {"objective", o.objective},
                     {"semivariance_method", o.method}, {"name", o.name}});
  output.manifest("optimize", params, json{{"prices", prices_path}});

  out << "optimize: " << o.objective << " over " << sel.symbols.size() << " symbols, "
      << format_date(returns.window.start) << ".." << format_date(returns.window.end) << ", annual vol "
      << fmt(metrics.volatility) << ", semidev " << fmt(metrics.semideviation) << " -> " << output.dir() << "\n";
}

// ---------------------------------------------------------------------------
// frontier

struct FrontierOpts {
  Common common;
  UniverseOpts universe;
  std::string prices;
  int window = 200;
  std::string end;
  int points = 20;
  double risk_free = 0.0;
};

void run_frontier(const FrontierOpts& o, std::ostream& out) {
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  const PricePanel panel = read_price_panel(prices_path);
  const std::size_t last = end_row(panel, date_option(o.end, "--end"));
  const Selection sel = select_universe(o.universe, panel, panel.dates()[last]);
  const PriceTable table = window_table(panel, sel.symbols, o.window, last);
  const ReturnMatrix returns = log_returns(table);
  const RiskModel model = estimate_risk_model(returns);
  const auto frontier = efficient_frontier(model, to_vector(sel.caps), o.points, o.risk_free);

  std::ostringstream csv_out;
  std::vector<std::string> row = {"point", "target_return", "volatility", "sharpe", "feasible"};
  row.insert(row.end(), sel.symbols.begin(), sel.symbols.end());
  csv::write_row(csv_out, row);
  std::size_t feasible = 0;
  for (std::size_t k = 0; k < frontier.size(); ++k) {
    const FrontierPoint& p = frontier[k];
    row = {std::to_string(k), fmt(p.target_return), fmt(p.volatility), fmt(p.sharpe), p.feasible ? "true" : "false"};
    for (std::size_t i = 0; i < sel.symbols.size(); ++i) {
      row.push_back(p.feasible ? fmt(p.weights[static_cast<Eigen::Index>(i)]) : "");
    }
    csv::write_row(csv_out, row);
    feasible += p.feasible ? 1 : 0;
  }

  Output output(o.common, "frontier");
  output.write("frontier.csv", csv_out.str());
  json report;
  report["window"] = {{"start", format_date(returns.window.start)},
                      {"end", format_date(returns.window.end)},
                      {"returns", returns.n_obs()}};
  report["symbols"] = sel.symbols;
  report["caps"] = weights_json(sel.symbols, to_vector(sel.caps));
  report["points"] = frontier.size();
  report["feasible_points"] = feasible;
  report["max_achievable_return"] = max_achievable_return(model, to_vector(sel.caps));
  report["risk_free"] = o.risk_free;
  output.write_json("report.json", report);

  json params = universe_params(o.universe);
  params.update(json{{"window_days", o.window}, {"end", o.end}, {"points", o.points}, {"risk_free", o.risk_free}});
  output.manifest("frontier", params, json{{"prices", prices_path}});

  out << "frontier: " << frontier.size() << " points (" << feasible << " feasible) over " << sel.symbols.size()
      << " symbols -> " << output.dir() << "\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  Common common;
  SimOpts sim;
  std::string prices;
  std::string portfolios;
  std::string portfolio;
  std::string mode = "historical";
  std::string start;
  std::string end;
  double min_coverage = 0.9;
};

void run_simulate(const SimulateOpts& o, std::ostream& out) {
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  const std::string portfolios_path = resolve_input(o.portfolios, o.common, "portfolios.csv", "--portfolios");
  SimConfig cfg = sim_config(o.sim, o.common.threads);
  cfg.mode = o.mode == "gbm" ? SimMode::kGbm : SimMode::kHistorical;

  const auto all = read_portfolios(portfolios_path);
  const NamedPortfolio* chosen = &all.front();
  if (!o.portfolio.empty()) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const auto& p) { return p.name == o.portfolio; });
    if (it == all.end()) throw UsageError("portfolio '" + o.portfolio + "' not found in " + portfolios_path);
    chosen = &*it;
  }

  const PricePanel panel = read_price_panel(prices_path);
  AlignOptions align_opts;
  align_opts.symbols = chosen->symbols;
  align_opts.min_coverage = o.min_coverage;
  const auto start = date_option(o.start, "--start");
  const auto end = date_option(o.end, "--end");
  if (start || end) {
    align_opts.range = DateRange{start.value_or(Date::min()), end.value_or(Date::max())};
  }
  const PriceTable table = align(panel, align_opts);

  const SimReport report = cfg.mode == SimMode::kGbm ? simulate_gbm(chosen->weights, table, cfg)
                                                     : simulate_historical(chosen->weights, table, cfg);

  Output output(o.common, "simulate");
  json j = sim_json(report);
  j["portfolio"] = chosen->name;
  j["weights"] = weights_json(chosen->symbols, chosen->weights);
  j["history"] = {{"start", format_date(table.dates().front())},
                  {"end", format_date(table.dates().back())},
                  {"dates", table.n_dates()}};
  j["gbm_parameters"] = cfg.mode == SimMode::kGbm ? json(to_string(cfg.gbm_parameters)) : json(nullptr);
  output.write_json("report.json", j);

  json params = sim_params(o.sim);
  params.update(json{{"mode", o.mode}, {"portfolio", chosen->name}, {"start", o.start}, {"end", o.end},
                     {"min_coverage", o.min_coverage}});
  output.manifest("simulate", params, json{{"prices", prices_path}, {"portfolios", portfolios_path}});

  out << "simulate: " << o.mode << " " << chosen->name << " failure probability "
      << fmt(report.failure_probability) << " (se " << fmt(report.std_error) << ", " << report.n_runs
      << " runs, seed " << report.seed << ") -> " << output.dir() << "\n";
}

// ---------------------------------------------------------------------------
// rolling

struct RollingOpts {
  Common common;
  UniverseOpts universe;
  std::string prices;
  int window = 200;
  int step = 1;
  std::string objective = "semivariance";
  std::string method = "scenario";
  std::string start;
  std::string end;
};

void run_rolling(const RollingOpts& o, std::ostream& out) {
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  const PricePanel panel = read_price_panel(prices_path);
  const std::size_t last = end_row(panel, std::nullopt);
  const Selection sel = select_universe(o.universe, panel, panel.dates()[last]);

  RollingSpec spec;
  spec.window_days = o.window;
  spec.step_days = o.step;
  spec.objective = *parse_objective(o.objective);
  spec.universe = sel.symbols;
  spec.caps = sel.caps;
  spec.semivariance_method = o.method == "semicov" ? SemivarianceMethod::kSemicovMatrix : SemivarianceMethod::kScenario;
  const auto start = date_option(o.start, "--start");
  const auto end = date_option(o.end, "--end");
  if (start || end) spec.range = DateRange{start.value_or(Date::min()), end.value_or(Date::max())};

  const auto points = rolling_optimal(panel, spec);

  std::ostringstream weights_csv, log_csv;
  std::vector<std::string> row = {"date", "status"};
  row.insert(row.end(), sel.symbols.begin(), sel.symbols.end());
  csv::write_row(weights_csv, row);
  csv::write_row(log_csv, {"date", "event", "symbol", "detail"});
  std::size_t ok = 0;
  for (const auto& p : points) {
    const std::string date = format_date(p.date);
    row = {date, p.ok() ? "ok" : p.error_kind};
    for (const auto& sym : sel.symbols) {
      const bool held = std::find(p.symbols.begin(), p.symbols.end(), sym) != p.symbols.end();
      row.push_back(held ? fmt(p.weight_of(sym)) : "");
    }
    csv::write_row(weights_csv, row);
    for (const auto& sym : p.excluded) {
      csv::write_row(log_csv, {date, "excluded", sym, "missing prices in window"});
    }
    if (!p.ok()) csv::write_row(log_csv, {date, p.error_kind, "", *p.error});
    ok += p.ok() ? 1 : 0;
  }

  Output output(o.common, "rolling");
  output.write("weights.csv", weights_csv.str());
  output.write("log.csv", log_csv.str());
  json report;
  report["dates"] = points.size();
  report["ok"] = ok;
  report["failed"] = points.size() - ok;
  report["first"] = points.empty() ? json(nullptr) : json(format_date(points.front().date));
  report["last"] = points.empty() ? json(nullptr) : json(format_date(points.back().date));
  report["symbols"] = sel.symbols;
  report["caps"] = weights_json(sel.symbols, to_vector(sel.caps));
  output.write_json("report.json", report);

  json params = universe_params(o.universe);
  params.update(json{{"window_days", o.window}, {"step_days", o.step}, {"objective", o.objective},
                     {"semivariance_method", o.method}, {"start", o.start}, {"end", o.end}});
  output.manifest("rolling", params, json{{"prices", prices_path}});

  out << "rolling: " << o.objective << " window " << o.window << ", " << points.size() << " dates (" << ok
      << " solved) -> " << output.dir() << "\n";
}

// ---------------------------------------------------------------------------
// ledger

struct LedgerOpts {
  Common common;
  std::string events;
  std::string pips;
  std::string prices;
  std::string universe;
  double lp_threshold = 0.005;
  std::string end;
  std::string portfolio_start;
  std::string portfolio_end;
  int top_k = 6;
};

void run_ledger(const LedgerOpts& o, std::ostream& out) {
  const std::string events_path = resolve_input(o.events, o.common, "events.csv", "--events");
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  std::string pips_path = o.pips;
  if (pips_path.empty() && !o.common.data_dir.empty()) {
    const fs::path candidate = fs::path(o.common.data_dir) / "pips.csv";
    if (fs::exists(candidate)) pips_path = candidate.string();
  }

  const EventLog log = load_events(events_path);
  const std::vector<PipUpdate> pips = pips_path.empty() ? std::vector<PipUpdate>{} : load_pip_updates(pips_path);
  const PricePanel panel = read_price_panel(prices_path);
  LedgerOptions opts;
  opts.lp_visibility_threshold = o.lp_threshold;
  opts.end_date = date_option(o.end, "--end");
  if (!o.universe.empty()) opts.add_variants(load_universe(o.universe));

  const CollateralSeries series = build_collateral_series(log.events, panel, pips, opts);

  Output output(o.common, "ledger");
  std::ostringstream categories, vaults;
  write_category_csv(categories, series);
  write_vault_csv(vaults, series);
  output.write("categories.csv", categories.str());
  output.write("vaults.csv", vaults.str());

  json report;
  report["events"] = log.events.size();
  report["dropped_zero_delta_lines"] = log.dropped_zero_lines;
  report["unknown_vault_types"] = log.unknown_vault_types;
  report["vault_types"] = series.vault_types;
  report["lp_folded"] = series.lp_folded;
  report["first"] = series.dates.empty() ? json(nullptr) : json(format_date(series.dates.front()));
  report["last"] = series.dates.empty() ? json(nullptr) : json(format_date(series.dates.back()));

  std::string portfolio_note = "no portfolio";
  if (!series.dates.empty() && o.top_k > 0) {
    const DateRange range{date_option(o.portfolio_start, "--portfolio-start").value_or(series.dates.front()),
                          date_option(o.portfolio_end, "--portfolio-end").value_or(series.dates.back())};
    try {
      const HistoricalPortfolio hp = historical_portfolio(series, range, o.top_k);
      output.write("portfolio.csv", portfolios_csv({NamedPortfolio{"DAI", hp.symbols, hp.weights}}));
      report["portfolio"] = {{"start", format_date(range.start)},
                             {"end", format_date(range.end)},
                             {"weights", weights_json(hp.symbols, hp.weights)}};
      portfolio_note = "portfolio of " + std::to_string(hp.symbols.size()) + " tokens";
    } catch (const EmptyPortfolioError& e) {
      report["portfolio"] = {{"error", e.what()}, {"error_kind", to_string(e.kind())}};
      portfolio_note = "empty portfolio";
    }
  }
  output.write_json("report.json", report);

  json params{{"lp_visibility_threshold", o.lp_threshold}, {"end", o.end},
              {"portfolio_start", o.portfolio_start}, {"portfolio_end", o.portfolio_end},
              {"top_k", o.top_k}, {"universe", o.universe}};
  output.manifest("ledger", params, json{{"events", events_path}, {"pips", pips_path}, {"prices", prices_path}});

  out << "ledger: " << log.events.size() << " events, " << series.vault_types.size() << " vault types, "
      << series.dates.size() << " days, " << portfolio_note << " -> " << output.dir() << "\n";
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  Common common;
  SimOpts sim;
  std::string prices;
  std::string portfolios;
  std::string start;
  std::string end;
  double min_coverage = 0.9;
  bool reference_set = false;
  UniverseOpts universe;
  std::string as_of;
  int window = 200;
  std::string method = "scenario";
  std::string dai_name = "DAI";
};

void run_compare(const CompareOpts& o, std::ostream& out) {
  const std::string prices_path = resolve_input(o.prices, o.common, "prices.csv", "--prices");
  const std::string portfolios_path = resolve_input(o.portfolios, o.common, "portfolios.csv", "--portfolios");
  const SimConfig cfg = sim_config(o.sim, o.common.threads);
  const PricePanel panel = read_price_panel(prices_path);
  std::vector<NamedPortfolio> portfolios = read_portfolios(portfolios_path);

  if (o.reference_set) {
    const auto dai = std::find_if(portfolios.begin(), portfolios.end(),
                                  [&](const auto& p) { return p.name == o.dai_name; });
    if (dai == portfolios.end()) throw UsageError("--reference-set needs a portfolio named " + o.dai_name);
    const std::size_t last = end_row(panel, date_option(o.as_of, "--as-of"));
    const Selection sel = select_universe(o.universe, panel, panel.dates()[last]);
    ReferenceSetSpec spec;
    spec.dai = *dai;
    spec.universe = sel.symbols;
    spec.caps = sel.caps;
    spec.window_days = o.window;
    spec.as_of = panel.dates()[last];
    spec.semivariance_method =
        o.method == "semicov" ? SemivarianceMethod::kSemicovMatrix : SemivarianceMethod::kScenario;
    portfolios = build_reference_portfolios(panel, spec);
  }

  CompareOptions copts;
  copts.sim = cfg;
  copts.min_coverage = o.min_coverage;
  const auto start = date_option(o.start, "--start");
  const auto end = date_option(o.end, "--end");
  if (start || end) copts.range = DateRange{start.value_or(Date::min()), end.value_or(Date::max())};
  const auto rows = compare_portfolios(portfolios, panel, copts);

  std::ostringstream table;
  csv::write_row(table, {"portfolio", "annual_volatility", "annual_semideviation", "historical_failure_prob",
                         "historical_std_error", "gbm_failure_prob", "gbm_std_error", "n_dates", "error_kind",
                         "error"});
  json jrows = json::array();
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.ok()) {
      csv::write_row(table, {r.portfolio_name, fmt(r.annual_volatility), fmt(r.annual_semideviation),
                             fmt(r.historical_failure_prob), fmt(r.historical_std_error), fmt(r.gbm_failure_prob),
                             fmt(r.gbm_std_error), std::to_string(r.n_dates), "", ""});
      jrows.push_back({{"portfolio", r.portfolio_name},
                       {"annual_volatility", r.annual_volatility},
                       {"annual_semideviation", r.annual_semideviation},
                       {"historical_failure_prob", r.historical_failure_prob},
                       {"historical_std_error", r.historical_std_error},
                       {"gbm_failure_prob", r.gbm_failure_prob},
                       {"gbm_std_error", r.gbm_std_error},
                       {"n_dates", r.n_dates}});
    } else {
      ++failed;
      csv::write_row(table, {r.portfolio_name, "", "", "", "", "", "", "", r.error_kind, *r.error});
      jrows.push_back({{"portfolio", r.portfolio_name}, {"error", *r.error}, {"error_kind", r.error_kind}});
    }
  }

  Output output(o.common, "compare");
  output.write("comparison.csv", table.str());
  output.write("portfolios.csv", portfolios_csv(portfolios));
  json report;
  report["rows"] = jrows;
  report["failed_rows"] = failed;
  std::string note;
  if (o.reference_set) {
    const OrderingCheck check = check_reference_ordering(rows);
    report["ordering_holds"] = check.holds();
    report["ordering_violations"] = check.violations;
    note = check.holds() ? ", ordering holds" : ", ordering violated";
  }
  output.write_json("report.json", report);

  json params = sim_params(o.sim);
  params.update(json{{"start", o.start}, {"end", o.end}, {"min_coverage", o.min_coverage}, {"reference_set", o.reference_set}});
  if (o.reference_set) {
    params["universe"] = universe_params(o.universe);
    params.update(json{{"as_of", o.as_of}, {"window_days", o.window}, {"semivariance_method", o.method},
                       {"dai_name", o.dai_name}});
  }
  output.manifest("compare", params, json{{"prices", prices_path}, {"portfolios", portfolios_path}});

  out << "compare: " << rows.size() << " portfolios (" << failed << " failed)" << note << " -> "
      << output.dir() << "\n";
}

// ---------------------------------------------------------------------------

void print_error(std::ostream& err, const std::string& kind, const std::string& message,
                 const ParseError* parse = nullptr) {
  json e{{"kind", kind}, {"message", message}};
  if (parse) {
    e["file"] = parse->file();
    e["line"] = parse->line();
  }
  err << json{{"error", e}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collateral portfolio risk toolkit", "crisk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  OptimizeOpts opt;
  auto* optimize = app.add_subcommand("optimize", "Minimum-variance or minimum-semivariance portfolio");
  add_common(optimize, opt.common);
  add_universe(optimize, opt.universe);
  optimize->add_option("--prices", opt.prices, "Prices CSV (date,symbol,close_usd)");
  optimize->add_option("--window", opt.window, "Returns in the estimation window")->capture_default_str();
  optimize->add_option("--end", opt.end, "Last date of the estimation window (default: last price date)");
  optimize->add_option("--objective", opt.objective, "Objective")
      ->check(CLI::IsMember({"variance", "semivariance"}))
      ->capture_default_str();
  optimize->add_option("--method", opt.method, "Semivariance method")
      ->check(CLI::IsMember({"scenario", "semicov"}))
      ->capture_default_str();
  optimize->add_option("--name", opt.name, "Portfolio name in weights.csv")->capture_default_str();

  FrontierOpts fr;
  auto* frontier = app.add_subcommand("frontier", "Efficient frontier under per-token caps");
  add_common(frontier, fr.common);
  add_universe(frontier, fr.universe);
  frontier->add_option("--prices", fr.prices, "Prices CSV");
  frontier->add_option("--window", fr.window, "Returns in the estimation window")->capture_default_str();
  frontier->add_option("--end", fr.end, "Last date of the estimation window");
  frontier->add_option("--points", fr.points, "Frontier points")->capture_default_str();
  frontier->add_option("--risk-free", fr.risk_free, "Annual risk-free rate for Sharpe ratios")->capture_default_str();

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Failure probability of an overcollateralized portfolio");
  add_common(simulate, sim.common);
  add_sim(simulate, sim.sim);
  simulate->add_option("--prices", sim.prices, "Prices CSV");
  simulate->add_option("--portfolios", sim.portfolios, "Portfolios CSV (portfolio,symbol,weight)");
  simulate->add_option("--portfolio", sim.portfolio, "Portfolio name (default: first in file)");
  simulate->add_option("--mode", sim.mode, "Simulation mode")
      ->check(CLI::IsMember({"historical", "gbm"}))
      ->capture_default_str();
  simulate->add_option("--start", sim.start, "First history date");
  simulate->add_option("--end", sim.end, "Last history date");
  simulate->add_option("--min-coverage", sim.min_coverage, "Minimum per-symbol date coverage")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  RollingOpts roll;
  auto* rolling = app.add_subcommand("rolling", "Rolling-window optimal portfolios");
  add_common(rolling, roll.common);
  add_universe(rolling, roll.universe);
  rolling->add_option("--prices", roll.prices, "Prices CSV");
  rolling->add_option("--window", roll.window, "Returns per window")->capture_default_str();
  rolling->add_option("--step", roll.step, "Days between evaluation dates")->capture_default_str();
  rolling->add_option("--objective", roll.objective, "Objective")
      ->check(CLI::IsMember({"variance", "semivariance"}))
      ->capture_default_str();
  rolling->add_option("--method", roll.method, "Semivariance method")
      ->check(CLI::IsMember({"scenario", "semicov"}))
      ->capture_default_str();
  rolling->add_option("--start", roll.start, "First evaluation date");
  rolling->add_option("--end", roll.end, "Last evaluation date");

  LedgerOpts led;
  auto* ledger = app.add_subcommand("ledger", "Replay vault events into daily collateral balances");
  add_common(ledger, led.common);
  ledger->add_option("--events", led.events, "Events CSV");
  ledger->add_option("--pips", led.pips, "Pip updates CSV");
  ledger->add_option("--prices", led.prices, "Prices CSV");
  ledger->add_option("--universe", led.universe, "Universe config (ETH / BTC variants)");
  ledger->add_option("--lp-threshold", led.lp_threshold, "LP share below which LP folds into minor")
      ->capture_default_str();
  ledger->add_option("--end", led.end, "Last snapshot date");
  ledger->add_option("--portfolio-start", led.portfolio_start, "Average-portfolio range start");
  ledger->add_option("--portfolio-end", led.portfolio_end, "Average-portfolio range end");
  ledger->add_option("--top-k", led.top_k, "Tokens kept in the average portfolio (0 disables)")
      ->capture_default_str();

  CompareOpts cmp;
  auto* compare = app.add_subcommand("compare", "Risk metrics and failure probabilities for named portfolios");
  add_common(compare, cmp.common);
  add_sim(compare, cmp.sim);
  add_universe(compare, cmp.universe);
  compare->add_option("--prices", cmp.prices, "Prices CSV");
  compare->add_option("--portfolios", cmp.portfolios, "Portfolios CSV (portfolio,symbol,weight)");
  compare->add_option("--start", cmp.start, "First history date");
  compare->add_option("--end", cmp.end, "Last history date");
  compare->add_option("--min-coverage", cmp.min_coverage, "Minimum per-symbol date coverage")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  compare->add_flag("--reference-set", cmp.reference_set, "Build A-Vol, A-Sem, DAI-Vol, DAI-Sem from the DAI portfolio");
  compare->add_option("--as-of", cmp.as_of, "Reference set: end of the estimation window");
  compare->add_option("--window", cmp.window, "Reference set: returns in the estimation window")->capture_default_str();
  compare->add_option("--method", cmp.method, "Reference set: semivariance method")
      ->check(CLI::IsMember({"scenario", "semicov"}))
      ->capture_default_str();
  compare->add_option("--dai-name", cmp.dai_name, "Reference set: name of the DAI portfolio")->capture_default_str();

  std::vector<const char*> argv;
  argv.push_back("crisk");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (optimize->parsed()) run_optimize(opt, out);
    if (frontier->parsed()) run_frontier(fr, out);
    if (simulate->parsed()) run_simulate(sim, out);
    if (rolling->parsed()) run_rolling(roll, out);
    if (ledger->parsed()) run_ledger(led, out);
    if (compare->parsed()) run_compare(cmp, out);
  } catch (const UsageError& e) {
    print_error(err, "usage_error", e.what());
    return 2;
  } catch (const ParseError& e) {
    print_error(err, to_string(e.kind()), e.what(), &e);
    return 1;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal_error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace crisk::cli

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return crisk::cli::run(args, std::cout, std::cerr);
}
