#pragma once

#include <string>

namespace psbp {

// One shipment leg observation. Categorical fields keep their raw string
// ids; log transforms are filled at ingestion and carried alongside the raw
// values.
struct ShipmentRecord {
  double y_hours = 0.0;
  std::string airline;
  std::string route;
  std::string month;
  int legs = 1;
  double dev_start_days = 0.0;
  double dur_days = 0.0;
  double wgt_kg = 0.0;
  double pcs = 0.0;
  double log_wgt = 0.0;
  double log_pcs = 0.0;
};

}  // namespace psbp
