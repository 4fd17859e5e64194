#include "crisk/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "crisk/csv.hpp"
#include "crisk/error.hpp"

namespace crisk {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_dates(const std::vector<Date>& dates) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw DomainError("dates must be strictly increasing (at " + format_date(dates[i]) + ")");
    }
  }
}

void check_symbols(const Symbols& symbols) {
  Symbols sorted = symbols;
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw DomainError("duplicate symbol '" + *dup + "'");
}

std::optional<std::size_t> find_symbol(const Symbols& symbols, const std::string& symbol) {
  const auto it = std::find(symbols.begin(), symbols.end(), symbol);
  if (it == symbols.end()) return std::nullopt;
  return static_cast<std::size_t>(it - symbols.begin());
}

}  // namespace

PricePanel::PricePanel(std::vector<Date> dates, Symbols symbols, Eigen::MatrixXd prices)
    : dates_(std::move(dates)), symbols_(std::move(symbols)), prices_(std::move(prices)) {
  if (prices_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
      prices_.cols() != static_cast<Eigen::Index>(symbols_.size())) {
    throw DomainError("price panel shape does not match dates x symbols");
  }
  check_dates(dates_);
  check_symbols(symbols_);
  for (Eigen::Index j = 0; j < prices_.cols(); ++j) {
    for (Eigen::Index i = 0; i < prices_.rows(); ++i) {
      const double p = prices_(i, j);
      if (!std::isnan(p) && !(std::isfinite(p) && p > 0.0)) {
        throw DomainError("non-positive price for " + symbols_[static_cast<std::size_t>(j)] +
                          " on " + format_date(dates_[static_cast<std::size_t>(i)]));
      }
    }
  }
}

PricePanel PricePanel::from_table(const PriceTable& table) {
  return PricePanel(table.dates(), table.symbols(), table.prices());
}

std::optional<std::size_t> PricePanel::symbol_index(const std::string& symbol) const {
  return find_symbol(symbols_, symbol);
}

std::optional<std::size_t> PricePanel::date_index(Date d) const {
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

PriceTable::PriceTable(std::vector<Date> dates, Symbols symbols, Eigen::MatrixXd prices)
    : dates_(std::move(dates)), symbols_(std::move(symbols)), prices_(std::move(prices)) {
  if (prices_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
      prices_.cols() != static_cast<Eigen::Index>(symbols_.size())) {
    throw DomainError("price table shape does not match dates x symbols");
  }
  check_dates(dates_);
  check_symbols(symbols_);
  for (Eigen::Index j = 0; j < prices_.cols(); ++j) {
    for (Eigen::Index i = 0; i < prices_.rows(); ++i) {
      const double p = prices_(i, j);
      if (!(std::isfinite(p) && p > 0.0)) {
        throw DomainError("price for " + symbols_[static_cast<std::size_t>(j)] + " on " +
                          format_date(dates_[static_cast<std::size_t>(i)]) +
                          " must be finite and positive");
      }
    }
  }
}

std::optional<std::size_t> PriceTable::symbol_index(const std::string& symbol) const {
  return find_symbol(symbols_, symbol);
}

PriceTable PriceTable::select(const Symbols& symbols) const {
  Eigen::MatrixXd out(prices_.rows(), static_cast<Eigen::Index>(symbols.size()));
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    const auto idx = symbol_index(symbols[j]);
    if (!idx) throw CoverageError("no prices for symbol '" + symbols[j] + "'");
    out.col(static_cast<Eigen::Index>(j)) = prices_.col(static_cast<Eigen::Index>(*idx));
  }
  return PriceTable(dates_, symbols, std::move(out));
}

PriceTable PriceTable::slice_rows(std::size_t first, std::size_t last) const {
  if (first > last || last >= dates_.size()) throw DomainError("row slice out of range");
  const auto n = static_cast<Eigen::Index>(last - first + 1);
  std::vector<Date> dates(dates_.begin() + static_cast<std::ptrdiff_t>(first),
                          dates_.begin() + static_cast<std::ptrdiff_t>(last + 1));
  return PriceTable(std::move(dates), symbols_,
                    prices_.middleRows(static_cast<Eigen::Index>(first), n));
}

PricePanel read_price_panel(const std::string& path) {
  csv::Reader reader(path, {"date", "symbol", "close_usd"});

  struct Cell {
    Date date;
    std::size_t symbol;
    double price;
  };
  std::vector<Cell> cells;
  Symbols symbols;
  std::unordered_map<std::string, std::size_t> symbol_ids;
  std::map<std::pair<Date, std::size_t>, std::size_t> seen;  // -> line

  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto date = parse_date(f[0]);
    if (!date) reader.fail("invalid date '" + f[0] + "'");
    if (f[1].empty()) reader.fail("empty symbol");
    double price = 0.0;
    if (!csv::parse_double(f[2], price)) reader.fail("invalid close_usd '" + f[2] + "'");
    if (!(std::isfinite(price) && price > 0.0)) {
      throw DomainError(path + ":" + std::to_string(reader.line()) + ": price for " + f[1] +
                        " must be finite and positive, got '" + f[2] + "'");
    }
    auto [it, inserted] = symbol_ids.try_emplace(f[1], symbols.size());
    if (inserted) symbols.push_back(f[1]);
    const auto key = std::make_pair(*date, it->second);
    if (auto [pos, fresh] = seen.try_emplace(key, reader.line()); !fresh) {
      reader.fail("duplicate row for " + f[1] + " on " + f[0] + " (first seen on line " +
                  std::to_string(pos->second) + ")");
    }
    cells.push_back({*date, it->second, price});
  }

  std::vector<Date> dates;
  dates.reserve(cells.size());
  for (const auto& c : cells) dates.push_back(c.date);
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

  Eigen::MatrixXd prices = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dates.size()),
                                                     static_cast<Eigen::Index>(symbols.size()), kNaN);
  for (const auto& c : cells) {
    const auto row = std::lower_bound(dates.begin(), dates.end(), c.date) - dates.begin();
    prices(row, static_cast<Eigen::Index>(c.symbol)) = c.price;
  }
  return PricePanel(std::move(dates), std::move(symbols), std::move(prices));
}

PriceTable align(const PricePanel& panel, const AlignOptions& options) {
  Symbols wanted = options.symbols.empty() ? panel.symbols() : options.symbols;
  std::vector<std::size_t> cols;
  cols.reserve(wanted.size());
  for (const auto& s : wanted) {
    const auto idx = panel.symbol_index(s);
    if (!idx) throw CoverageError("symbol '" + s + "' has no price data");
    cols.push_back(*idx);
  }

  std::vector<std::size_t> in_range;
  for (std::size_t i = 0; i < panel.dates().size(); ++i) {
    if (!options.range || options.range->contains(panel.dates()[i])) {
      // Only dates on which at least one requested symbol trades count
      // towards the window.
      const bool any = std::any_of(cols.begin(), cols.end(),
                                   [&](std::size_t c) { return panel.has(i, c); });
      if (any) in_range.push_back(i);
    }
  }

  for (std::size_t k = 0; k < cols.size(); ++k) {
    std::size_t present = 0;
    for (std::size_t i : in_range) present += panel.has(i, cols[k]) ? 1 : 0;
    if (present == 0) {
      throw CoverageError("symbol '" + wanted[k] + "' has no dates in the requested range");
    }
    const double coverage = static_cast<double>(present) / static_cast<double>(in_range.size());
    if (coverage < options.min_coverage) {
      throw CoverageError("symbol '" + wanted[k] + "' covers only " + std::to_string(present) +
                          " of " + std::to_string(in_range.size()) + " dates in the requested range");
    }
  }

  std::vector<Date> dates;
  std::vector<std::size_t> rows;
  for (std::size_t i : in_range) {
    if (std::all_of(cols.begin(), cols.end(), [&](std::size_t c) { return panel.has(i, c); })) {
      rows.push_back(i);
      dates.push_back(panel.dates()[i]);
    }
  }
  if (rows.empty()) throw CoverageError("requested symbols share no common dates");

  Eigen::MatrixXd prices(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          panel.prices()(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    }
  }
  return PriceTable(std::move(dates), std::move(wanted), std::move(prices));
}

PriceTable load_prices(const std::string& path, std::optional<DateRange> date_range) {
  AlignOptions options;
  options.range = date_range;
  return load_prices(path, options);
}

PriceTable load_prices(const std::string& path, const AlignOptions& options) {
  return align(read_price_panel(path), options);
}

ReturnMatrix log_returns_rows(const PriceTable& table, std::size_t first, std::size_t last) {
  if (last >= table.n_dates() || first >= last) {
    throw InsufficientDataError("return window needs at least 2 dates");
  }
  const auto t = static_cast<Eigen::Index>(last - first);
  const auto& p = table.prices();
  ReturnMatrix out;
  out.symbols = table.symbols();
  out.returns.resize(t, p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < t; ++i) {
      const auto row = static_cast<Eigen::Index>(first) + i;
      out.returns(i, j) = std::log(p(row + 1, j) / p(row, j));
    }
  }
  out.window = {table.dates()[first], table.dates()[last]};
  return out;
}

ReturnMatrix log_returns(const PriceTable& table, const DateRange& window) {
  const auto& d = table.dates();
  const auto lo = std::lower_bound(d.begin(), d.end(), window.start);
  const auto hi = std::upper_bound(d.begin(), d.end(), window.end);
  if (hi - lo < 2) {
    throw InsufficientDataError("window " + format_date(window.start) + ".." +
                                format_date(window.end) + " contains fewer than 2 dates");
  }
  return log_returns_rows(table, static_cast<std::size_t>(lo - d.begin()),
                          static_cast<std::size_t>(hi - d.begin() - 1));
}

ReturnMatrix log_returns(const PriceTable& table) {
  if (table.n_dates() < 2) throw InsufficientDataError("price table has fewer than 2 dates");
  return log_returns_rows(table, 0, table.n_dates() - 1);
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool repair_psd(Eigen::MatrixXd& symmetric, double tolerance) {
  if (symmetric.size() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
  if (es.eigenvalues().minCoeff() >= -tolerance) return false;
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  symmetric = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  symmetric = 0.5 * (symmetric + symmetric.transpose()).eval();
  return true;
}

RiskModel estimate_risk_model(const ReturnMatrix& returns) {
  const Eigen::Index t = returns.returns.rows();
  if (t < 2) throw InsufficientDataError("risk model needs at least 2 return observations");

  RiskModel model;
  model.symbols = returns.symbols;
  model.window_days = static_cast<std::size_t>(t);
  model.mu = returns.returns.colwise().mean().transpose();

  const Eigen::MatrixXd centered = returns.returns.rowwise() - model.mu.transpose();
  model.cov = (centered.transpose() * centered) / static_cast<double>(t - 1);
  const Eigen::MatrixXd downside = centered.cwiseMin(0.0);
  model.semicov = (downside.transpose() * downside) / static_cast<double>(t);

  // Gram products are symmetric up to rounding; make it exact.
  model.cov = 0.5 * (model.cov + model.cov.transpose()).eval();
  model.semicov = 0.5 * (model.semicov + model.semicov.transpose()).eval();
  model.cov_repaired = repair_psd(model.cov);
  model.semicov_repaired = repair_psd(model.semicov);
  return model;
}

RowWindow sample_row_window(std::size_t n_dates, std::size_t length_days, Rng& rng) {
  if (length_days == 0) throw DomainError("window length must be positive");
  if (n_dates < length_days + 1) {
    throw InsufficientDataError("need " + std::to_string(length_days + 1) + " dates, have " +
                                std::to_string(n_dates));
  }
  std::uniform_int_distribution<std::size_t> start(0, n_dates - length_days - 1);
  const std::size_t first = start(rng);
  return {first, first + length_days};
}

DateRange sample_window(const PriceTable& table, std::size_t length_days, Rng& rng) {
  const RowWindow w = sample_row_window(table.n_dates(), length_days, rng);
  return {table.dates()[w.first], table.dates()[w.last]};
}

}  // namespace crisk
