#include "psbp/data.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace psbp {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double* out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

bool parse_int(const std::string& s, int* out) {
  double v;
  if (!parse_double(s, &v)) return false;
  if (v != std::floor(v) || std::fabs(v) > 1e9) return false;
  *out = static_cast<int>(v);
  return true;
}

const char* const kColumns[] = {"y_hours",        "airline",  "route",
                                "month",          "legs",     "dev_start_days",
                                "dur_days",       "wgt_kg",   "pcs"};

}  // namespace

Dataset ingest_stream(std::istream& in, const IngestOptions& opt,
                      IngestReport* report) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("ingest: empty input, no header row");
  const auto header = split(line, opt.delimiter);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[strip(header[i])] = i;
  for (const char* name : kColumns)
    if (!col.count(name))
      throw std::runtime_error(std::string("ingest: missing column ") + name);

  Dataset data;
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    ++rep.rows_read;
    const auto fields = split(line, opt.delimiter);
    const auto reject = [&](const std::string& why) {
      rep.skipped.push_back("row " + std::to_string(row) + ": " + why);
    };
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }
    ShipmentRecord rec;
    bool ok = parse_double(fields[col["y_hours"]], &rec.y_hours);
    rec.airline = strip(fields[col["airline"]]);
    rec.route = strip(fields[col["route"]]);
    rec.month = strip(fields[col["month"]]);
    ok = ok && parse_int(fields[col["legs"]], &rec.legs);
    ok = ok && parse_double(fields[col["dev_start_days"]], &rec.dev_start_days);
    ok = ok && parse_double(fields[col["dur_days"]], &rec.dur_days);
    ok = ok && parse_double(fields[col["wgt_kg"]], &rec.wgt_kg);
    ok = ok && parse_double(fields[col["pcs"]], &rec.pcs);
    if (!ok) {
      reject("unparseable numeric field");
      continue;
    }
    if (rec.airline.empty() || rec.route.empty() || rec.month.empty()) {
      reject("empty category field");
      continue;
    }
    if (rec.legs < 1) {
      reject("legs below 1");
      continue;
    }
    if (!(rec.wgt_kg > 0.0)) {
      reject("non-positive weight, log transform undefined");
      continue;
    }
    if (rec.pcs < 1.0) {
      reject("pieces below 1, log transform unusable");
      continue;
    }
    rec.log_wgt = std::log(rec.wgt_kg);
    rec.log_pcs = std::log(rec.pcs);
    data.records.push_back(std::move(rec));
    ++rep.rows_kept;
  }
  return data;
}

Dataset ingest(const std::string& path, const IngestOptions& opt,
               IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest: cannot open " + path);
  return ingest_stream(in, opt, report);
}

Dataset clean(const Dataset& data, const CleanOptions& opt,
              CleanReport* report) {
  CleanReport local;
  CleanReport& rep = report ? *report : local;
  std::vector<const ShipmentRecord*> alive;
  alive.reserve(data.records.size());
  for (const auto& r : data.records) alive.push_back(&r);

  const auto drop_below = [&](auto key_of, int threshold, const char* rule) {
    std::map<std::string, int> counts;
    for (const auto* r : alive) ++counts[key_of(*r)];
    std::vector<const ShipmentRecord*> kept;
    kept.reserve(alive.size());
    bool changed = false;
    for (const auto* r : alive) {
      const std::string key = key_of(*r);
      if (counts[key] < threshold) {
        rep.dropped.push_back(std::string(rule) + " " + key + " has " +
                              std::to_string(counts[key]) +
                              " records, below " + std::to_string(threshold));
        changed = true;
      } else {
        kept.push_back(r);
      }
    }
    alive.swap(kept);
    return changed;
  };
  const auto pair_key = [](const ShipmentRecord& r) {
    return r.airline + "\x1f" + r.route;
  };
  const auto route_key = [](const ShipmentRecord& r) { return r.route; };

  for (;;) {
    ++rep.passes;
    const bool a = drop_below(pair_key, opt.min_pair_count, "airline-route");
    const bool b = drop_below(route_key, opt.min_route_count, "route");
    if (!a && !b) break;
  }

  Dataset out;
  out.records.reserve(alive.size());
  for (const auto* r : alive) out.records.push_back(*r);
  return out;
}

}  // namespace psbp
