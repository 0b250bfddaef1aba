#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mobnet/gazetteer.hpp"
#include "mobnet/ingest.hpp"

namespace mobnet {

// Deterministic synthetic corpora for demos, benchmarks and scale tests.
// Output depends only on the parameters and the standard library build.

struct SyntheticParams {
  std::uint64_t users = 10'000;
  std::uint64_t records = 1'000'000;
  std::uint64_t seed = 20160425;
  /// Share of users that teleport and post in bursts.
  double spam_user_fraction = 0.01;
  /// Share of lines written malformed or without any location.
  double bad_line_fraction = 0.001;
  /// Share of lines repeated verbatim (overlapping collections).
  double duplicate_fraction = 0.001;
};

struct SyntheticCorpus {
  std::filesystem::path gazetteer;
  std::filesystem::path country_info;
  std::filesystem::path records;
  std::uint64_t lines_written = 0;
};

/// Geonames-format gazetteer lines for the synthetic world.
std::vector<std::string> synthetic_gazetteer_lines(std::uint64_t seed);
/// countryInfo-format lines (with a '#' header) for the synthetic world.
std::vector<std::string> synthetic_country_info_lines();

/// Writes gazetteer.txt, countryInfo.txt and records.tsv under `dir`.
SyntheticCorpus write_synthetic_corpus(const SyntheticParams& params,
                                       const std::filesystem::path& dir);

}  // namespace mobnet
