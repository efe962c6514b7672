#pragma once

#include "affinerf/dataset.hpp"
#include "affinerf/rng.hpp"

#include <string>

namespace affinerf::io {

/// Reads a dataset with header row x1,...,xd,y. Accepts LF and CRLF; parse
/// problems report the 1-based line number.
Dataset ingest_csv(const std::string& path);

/// Writes the matching format with shortest round-trip number formatting.
void write_csv(const Dataset& data, const std::string& path);

/// n distinct indices from [0, total) drawn uniformly without replacement,
/// in draw order.
std::vector<Eigen::Index> subsample_indices(Eigen::Index total, int n, Rng& rng);

/// n distinct rows drawn uniformly without replacement, in draw order.
Dataset subsample(const Dataset& data, int n, Rng& rng);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

} // namespace affinerf::io
