// Shared helpers for unit and acceptance tests.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/dates.hpp"
#include "crisk/market_data.hpp"

namespace crisk::testing {

inline std::string fixture(const std::string& name) { return std::string(CRISK_FIXTURES) + "/" + name; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("crisk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::vector<Date> daily_dates(const std::string& first, std::size_t n) {
  const Date d0 = *parse_date(first);
  std::vector<Date> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(d0 + std::chrono::days{static_cast<int>(i)});
  return out;
}

inline Symbols numbered_symbols(std::size_t m) {
  Symbols out;
  for (std::size_t i = 0; i < m; ++i) out.push_back("T" + std::to_string(i));
  return out;
}

/// Prices with p(0) = 100 and the given log-return rows.
inline PriceTable table_from_returns(const Eigen::MatrixXd& returns, const Symbols& symbols,
                                     const std::string& first = "2022-01-01") {
  Eigen::MatrixXd prices(returns.rows() + 1, returns.cols());
  prices.row(0).setConstant(100.0);
  for (Eigen::Index t = 0; t < returns.rows(); ++t) {
    prices.row(t + 1) = prices.row(t).array() * returns.row(t).array().exp();
  }
  return PriceTable(daily_dates(first, static_cast<std::size_t>(prices.rows())), symbols, prices);
}

/// i.i.d. normal returns with per-asset volatility drawn in [0.01, 0.06]
/// and a common factor.
inline Eigen::MatrixXd random_returns(std::mt19937_64& rng, Eigen::Index t, Eigen::Index m) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> vol(0.01, 0.06), load(0.0, 0.8);
  Eigen::VectorXd v(m), b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    v[i] = vol(rng);
    b[i] = load(rng);
  }
  Eigen::MatrixXd r(t, m);
  for (Eigen::Index s = 0; s < t; ++s) {
    const double f = n01(rng);
    for (Eigen::Index i = 0; i < m; ++i) r(s, i) = 0.0005 + v[i] * (b[i] * f + n01(rng));
  }
  return r;
}

inline ReturnMatrix make_returns(const Eigen::MatrixXd& r) {
  ReturnMatrix out;
  out.symbols = numbered_symbols(static_cast<std::size_t>(r.cols()));
  out.returns = r;
  const auto dates = daily_dates("2022-01-01", static_cast<std::size_t>(r.rows()) + 1);
  out.window = DateRange{dates.front(), dates.back()};
  return out;
}

/// Long-format prices CSV for a dense table.
inline std::string prices_csv(const PriceTable& table) {
  std::ostringstream s;
  s.precision(17);
  s << "date,symbol,close_usd\n";
  for (std::size_t t = 0; t < table.n_dates(); ++t) {
    for (std::size_t i = 0; i < table.n_symbols(); ++i) {
      s << format_date(table.dates()[t]) << ',' << table.symbols()[i] << ','
        << table.prices()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) << '\n';
    }
  }
  return s.str();
}

}  // namespace crisk::testing
