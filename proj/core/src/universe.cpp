#include "crisk/universe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "crisk/csv.hpp"
#include "crisk/error.hpp"

namespace crisk {
namespace {

bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    out = false;
    return true;
  }
  return false;
}

struct PendingKey {
  std::string symbol;
  std::string field;
  std::string value;
  std::size_t line;
};

}  // namespace

const UniverseEntry* UniverseConfig::find(const std::string& symbol) const {
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const UniverseEntry& e) { return e.symbol == symbol; });
  return it == entries.end() ? nullptr : &*it;
}

std::vector<std::string> UniverseConfig::symbols() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.symbol);
  return out;
}

std::vector<double> UniverseConfig::caps_for(const std::vector<std::string>& symbols) const {
  std::vector<double> caps;
  caps.reserve(symbols.size());
  for (const auto& s : symbols) {
    const auto* e = find(s);
    caps.push_back(e ? e->cap : kDefaultCap);
  }
  return caps;
}

UniverseConfig parse_universe(std::istream& in, const std::string& source_name) {
  std::optional<std::vector<std::string>> symbols;
  double default_cap = kDefaultCap;
  std::vector<PendingKey> pending;

  std::string raw;
  std::size_t line = 0;
  auto fail = [&](const std::string& msg) { throw ParseError(source_name, line, msg); };

  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = csv::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key(csv::trim(text.substr(0, eq)));
    const std::string value(csv::trim(text.substr(eq + 1)));
    if (key.empty()) fail("empty key");

    if (key == "symbols") {
      std::vector<std::string> list;
      std::vector<std::string> fields;
      csv::split_record(value, fields);
      for (auto& s : fields) {
        if (s.empty()) fail("empty symbol in list");
        if (std::find(list.begin(), list.end(), s) != list.end()) fail("duplicate symbol '" + s + "'");
        list.push_back(s);
      }
      symbols = std::move(list);
    } else if (key == "default_cap") {
      if (!csv::parse_double(value, default_cap) || !(default_cap > 0.0 && default_cap <= 1.0)) {
        fail("default_cap must be in (0, 1]");
      }
    } else {
      const auto dot = key.rfind('.');
      if (dot == std::string::npos || dot == 0) fail("unknown key '" + key + "'");
      pending.push_back({key.substr(0, dot), key.substr(dot + 1), value, line});
    }
  }
  if (!symbols) throw ParseError(source_name, line, "missing 'symbols' list");

  UniverseConfig cfg;
  for (std::size_t i = 0; i < symbols->size(); ++i) {
    UniverseEntry e;
    e.symbol = (*symbols)[i];
    e.rank = static_cast<int>(i + 1);
    e.cap = default_cap;
    cfg.entries.push_back(std::move(e));
  }

  for (const auto& k : pending) {
    line = k.line;
    auto it = std::find_if(cfg.entries.begin(), cfg.entries.end(),
                           [&](const UniverseEntry& e) { return e.symbol == k.symbol; });
    if (it == cfg.entries.end()) fail("symbol '" + k.symbol + "' is not in the symbols list");
    if (k.field == "cap") {
      if (!csv::parse_double(k.value, it->cap) || !(it->cap > 0.0 && it->cap <= 1.0)) {
        fail("cap must be in (0, 1]");
      }
    } else if (k.field == "rank") {
      double r = 0;
      if (!csv::parse_double(k.value, r) || r < 1 || r != std::floor(r)) fail("rank must be a positive integer");
      it->rank = static_cast<int>(r);
    } else if (k.field == "launch_date") {
      const auto d = parse_date(k.value);
      if (!d) fail("launch_date must be YYYY-MM-DD");
      it->launch_date = d;
    } else if (k.field == "stablecoin") {
      if (!parse_bool(k.value, it->stablecoin)) fail("stablecoin must be true or false");
    } else if (k.field == "btc_variant") {
      if (!parse_bool(k.value, it->btc_variant)) fail("btc_variant must be true or false");
    } else if (k.field == "eth_variant") {
      if (!parse_bool(k.value, it->eth_variant)) fail("eth_variant must be true or false");
    } else {
      fail("unknown field '" + k.field + "'");
    }
  }
  return cfg;
}

UniverseConfig load_universe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_universe(in, path);
}

}  // namespace crisk
