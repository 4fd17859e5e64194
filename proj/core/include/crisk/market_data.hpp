/**
 * @file market_data.hpp
 * @brief Daily price ingestion, log returns and risk-model estimation.
 *
 * Prices arrive as a long-format CSV (`date,symbol,close_usd`). Reading
 * yields a PricePanel, which may be ragged; aligning it yields a dense
 * PriceTable restricted to the dates every requested symbol shares.
 * Returns are daily log returns throughout. Volatility-type figures are
 * annualized with sqrt(365) because crypto markets trade every day.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/dates.hpp"
#include "crisk/rng.hpp"

namespace crisk {

using Symbols = std::vector<std::string>;

inline constexpr double kDaysPerYear = 365.0;
/// Eigenvalues below -kPsdTolerance trigger PSD repair.
inline constexpr double kPsdTolerance = 1e-10;

class PriceTable;

/// Raw daily close prices. Missing (date, symbol) cells hold NaN.
class PricePanel {
 public:
  PricePanel() = default;
  /// Dates must be strictly increasing; present prices must be finite and
  /// positive. Throws DomainError otherwise.
  PricePanel(std::vector<Date> dates, Symbols symbols, Eigen::MatrixXd prices);

  [[nodiscard]] static PricePanel from_table(const PriceTable& table);

  [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
  [[nodiscard]] const Symbols& symbols() const noexcept { return symbols_; }
  /// Rows are dates, columns are symbols.
  [[nodiscard]] const Eigen::MatrixXd& prices() const noexcept { return prices_; }
  [[nodiscard]] std::optional<std::size_t> symbol_index(const std::string& symbol) const;
  [[nodiscard]] std::optional<std::size_t> date_index(Date d) const;
  [[nodiscard]] bool has(std::size_t row, std::size_t col) const {
    return !std::isnan(prices_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)));
  }

 private:
  std::vector<Date> dates_;
  Symbols symbols_;
  Eigen::MatrixXd prices_;
};

/// Dense, aligned daily close prices in USD.
class PriceTable {
 public:
  PriceTable() = default;
  /// Enforces: strictly increasing dates, unique symbols, every price finite
  /// and > 0. Throws DomainError on violation.
  PriceTable(std::vector<Date> dates, Symbols symbols, Eigen::MatrixXd prices);

  [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
  [[nodiscard]] const Symbols& symbols() const noexcept { return symbols_; }
  [[nodiscard]] const Eigen::MatrixXd& prices() const noexcept { return prices_; }
  [[nodiscard]] std::size_t n_dates() const noexcept { return dates_.size(); }
  [[nodiscard]] std::size_t n_symbols() const noexcept { return symbols_.size(); }

  [[nodiscard]] std::optional<std::size_t> symbol_index(const std::string& symbol) const;

  /// Columns for `symbols`, in that order. Throws CoverageError for a
  /// symbol the table does not hold.
  [[nodiscard]] PriceTable select(const Symbols& symbols) const;

  /// Rows [first, last] inclusive.
  [[nodiscard]] PriceTable slice_rows(std::size_t first, std::size_t last) const;

 private:
  std::vector<Date> dates_;
  Symbols symbols_;
  Eigen::MatrixXd prices_;
};

struct AlignOptions {
  /// Inclusive date filter applied before alignment.
  std::optional<DateRange> range;
  /// Symbols to keep, in output order. Empty keeps every symbol.
  Symbols symbols;
  /// A symbol present on fewer than this fraction of the in-range dates
  /// is rejected with a CoverageError.
  double min_coverage = 0.9;
};

/// Parses a prices CSV (`date,symbol,close_usd`, rows in any order).
/// Malformed rows and duplicate (date, symbol) pairs raise ParseError with
/// the line number; non-positive or non-finite prices raise DomainError.
[[nodiscard]] PricePanel read_price_panel(const std::string& path);

/// Intersection alignment: keeps the dates on which every requested symbol
/// has a price.
[[nodiscard]] PriceTable align(const PricePanel& panel, const AlignOptions& options = {});

[[nodiscard]] PriceTable load_prices(const std::string& path,
                                     std::optional<DateRange> date_range = std::nullopt);
[[nodiscard]] PriceTable load_prices(const std::string& path, const AlignOptions& options);

/// Daily log returns for one price window.
struct ReturnMatrix {
  Symbols symbols;
  /// T x M, row t holds ln(p(t+1)/p(t)).
  Eigen::MatrixXd returns;
  /// First and last price date the returns were derived from.
  DateRange window;

  [[nodiscard]] std::size_t n_obs() const noexcept { return static_cast<std::size_t>(returns.rows()); }
  [[nodiscard]] std::size_t n_assets() const noexcept { return static_cast<std::size_t>(returns.cols()); }
};

/// Returns over the table dates inside `window`. Throws
/// InsufficientDataError when fewer than two dates fall inside.
[[nodiscard]] ReturnMatrix log_returns(const PriceTable& table, const DateRange& window);
/// Returns over the whole table.
[[nodiscard]] ReturnMatrix log_returns(const PriceTable& table);
/// Returns over table rows [first, last].
[[nodiscard]] ReturnMatrix log_returns_rows(const PriceTable& table, std::size_t first,
                                            std::size_t last);

struct RiskModel {
  Symbols symbols;
  /// Mean daily log return per symbol.
  Eigen::VectorXd mu;
  /// Sample covariance, divisor T-1.
  Eigen::MatrixXd cov;
  /// Below-mean co-moments, divisor T.
  Eigen::MatrixXd semicov;
  /// Number of daily observations T.
  std::size_t window_days = 0;
  bool cov_repaired = false;
  bool semicov_repaired = false;
};

[[nodiscard]] RiskModel estimate_risk_model(const ReturnMatrix& returns);

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
[[nodiscard]] double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Clips eigenvalues below zero when the smallest is under -tolerance and
/// rebuilds the matrix. Returns true when a repair happened.
bool repair_psd(Eigen::MatrixXd& symmetric, double tolerance = kPsdTolerance);

/// Inclusive row-index window into a date-ordered table.
struct RowWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Uniform contiguous window spanning `length_days` returns, i.e.
/// `length_days + 1` rows, of a table with `n_dates` rows.
[[nodiscard]] RowWindow sample_row_window(std::size_t n_dates, std::size_t length_days, Rng& rng);

[[nodiscard]] DateRange sample_window(const PriceTable& table, std::size_t length_days, Rng& rng);

}  // namespace crisk
