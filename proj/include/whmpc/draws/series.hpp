#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "whmpc/core/errors.hpp"

namespace whmpc::draws {

/// Draw energy-removal rate Q^(d), W, one value per control step.
struct DrawSeries {
  long start_step = 0;   // control-step index of values[0]
  double step = 600.0;   // s
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  long end_step() const { return start_step + static_cast<long>(values.size()); }
};

/// Writes `step,watts` rows with a header.
inline void write_csv(std::ostream& out, const DrawSeries& s) {
  out << "step,watts\n";
  out.precision(10);
  for (std::size_t k = 0; k < s.values.size(); ++k)
    out << s.start_step + static_cast<long>(k) << ',' << s.values[k] << '\n';
}

/// Reads `step,watts` rows; steps must be consecutive.
inline DrawSeries read_csv(std::istream& in, double step = 600.0) {
  DrawSeries s;
  s.step = step;
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,watts", 0) != 0)
    throw IngestionError("draw series: expected header 'step,watts'");
  long expect = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    long k;
    char comma;
    double w;
    if (!(row >> k >> comma >> w) || comma != ',' || !std::isfinite(w))
      throw IngestionError("draw series: malformed row '" + line + "'");
    if (first) {
      s.start_step = expect = k;
      first = false;
    }
    if (k != expect) throw IngestionError("draw series: non-consecutive step " + std::to_string(k));
    s.values.push_back(w);
    ++expect;
  }
  return s;
}

}  // namespace whmpc::draws
