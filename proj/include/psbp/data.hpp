#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "psbp/record.hpp"

namespace psbp {

struct Dataset {
  std::vector<ShipmentRecord> records;

  std::size_t size() const { return records.size(); }
};

struct IngestOptions {
  char delimiter = ',';
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::vector<std::string> skipped;  // one message per rejected row
};

// Reads the shipment table. Expected header columns, in any order:
// y_hours, airline, route, month, legs, dev_start_days, dur_days, wgt_kg,
// pcs. Malformed rows (wrong arity, unparseable numbers, wgt <= 0, pcs < 1)
// are skipped and logged in the report. Throws std::runtime_error when the
// file cannot be opened or the header is unusable.
Dataset ingest(const std::string& path, const IngestOptions& opt = {},
               IngestReport* report = nullptr);
Dataset ingest_stream(std::istream& in, const IngestOptions& opt = {},
                      IngestReport* report = nullptr);

struct CleanOptions {
  int min_pair_count = 10;   // airline-route pairs below this are dropped
  int min_route_count = 20;  // then routes below this, repeated to fixpoint
};

struct CleanReport {
  int passes = 0;
  std::vector<std::string> dropped;  // one message per dropped record
};

// Support filter. Alternates the pair rule and the route rule until neither
// fires; the result is idempotent under a second clean with the same
// thresholds.
Dataset clean(const Dataset& data, const CleanOptions& opt = {},
              CleanReport* report = nullptr);

}  // namespace psbp
