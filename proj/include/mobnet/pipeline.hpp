#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mobnet/external_sort.hpp"
#include "mobnet/gazetteer.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/network.hpp"
#include "mobnet/report.hpp"
#include "mobnet/travel.hpp"

namespace mobnet {

struct PipelineOptions {
  std::vector<std::filesystem::path> inputs;
  TimestampFormat timestamp_format = TimestampFormat::kEpochSeconds;
  std::filesystem::path tmp_dir;
  std::size_t max_memory_mb = 512;
  unsigned threads = 1;
  Thresholds thresholds;
};

/// Networks, exclusion tallies and event-side match-type counts for a stream
/// of kept events. Shards built independently merge to the same result in
/// any order.
struct EventAggregate {
  CityNetwork city{true};
  CountryNetwork country{true};
  ResolutionTally city_tally;
  ResolutionTally country_tally;
  MatchTypeBreakdown match_types;
  std::uint64_t events = 0;

  /// Without a matcher the city network and match types are skipped and the
  /// country network relies on place country codes alone.
  void add(const EventRow& row, const PlaceMatcher* matcher);
  void merge(const EventAggregate& other);
};

struct UserRow {
  UserSummary summary;
  bool dropped = false;
  std::optional<std::string> home_country;
};

/// Incremental version of log_histogram.
class HistogramBuilder {
public:
  void add(std::uint64_t value);
  Histogram finish() const;

private:
  std::vector<std::uint64_t> counts_;
};

struct PlaceMatch {
  Place place;
  MatchResult match;
};

struct PipelineResult {
  IngestStats ingest;
  SortStats sort;
  std::uint64_t users = 0;
  std::uint64_t users_dropped = 0;
  std::uint64_t events_detected = 0;
  std::uint64_t events_speed_dropped = 0;
  std::uint64_t events_from_dropped_users = 0;
  /// Users that survive the filters, keyed by home country.
  std::map<std::string, std::uint64_t> home_country_users;
  /// Computed before user removal.
  UserHistograms histograms;
  /// Every distinct tagged place, first occurrence wins.
  std::map<std::string, PlaceMatch> places;
  EventAggregate aggregate;
  /// aggregate.match_types plus one place count per distinct place.
  MatchTypeBreakdown match_types;
};

struct PipelineSinks {
  std::function<void(const EventRow&)> on_event;
  std::function<void(const UserRow&)> on_user;
  std::function<void(const UserTimeline&)> on_timeline;
};

/// Full run: ingest, group/sort, detect and filter events, resolve and
/// aggregate. Users are processed in parallel batches and merged in user-id
/// order, so results and sink call order do not depend on `threads`.
PipelineResult run_pipeline(const PipelineOptions& options, const Gazetteer* gazetteer,
                            const PipelineSinks& sinks = {});

/// Home country of a timeline: modal country over its records, using the
/// place code or, failing that, the gazetteer match of the record location.
std::optional<std::string> home_country(const UserTimeline& timeline, const PlaceMatcher* matcher);

std::string_view users_csv_header();
std::string format_user_row(const UserRow& row);
std::optional<UserRow> parse_user_row(std::string_view line);

std::string_view places_csv_header();
std::string format_place_row(const PlaceMatch& p);

/// Writes <granularity>_<directed|undirected>_edges.csv, _stats.json and
/// <granularity>_vertices.csv into `dir`.
void write_city_network(const std::filesystem::path& dir, const CityNetwork& directed_net,
                        bool directed, const Gazetteer& gazetteer, const ResolutionTally& tally);
void write_country_network(const std::filesystem::path& dir, const CountryNetwork& directed_net,
                           bool directed, const std::map<std::string, GeoPoint>& points,
                           const ResolutionTally& tally);

struct ReportInputs {
  const EventAggregate* aggregate = nullptr;
  const MatchTypeBreakdown* match_types = nullptr;
  const UserHistograms* histograms = nullptr;
  const std::map<std::string, std::uint64_t>* home_country_users = nullptr;
  const Gazetteer* gazetteer = nullptr;      // optional
  const CountryTable* country_info = nullptr;  // optional
  std::uint64_t min_penetration_users = 5000;
  Granularity geojson_granularity = Granularity::kCity;
  bool geojson_directed = false;
};

/// penetration.csv, top_edges.csv, top_penetration.csv, histograms.json,
/// match_types.csv and network.geojson. Returns a JSON summary of counters
/// (skipped features, missing country info).
nlohmann::ordered_json write_reports(const std::filesystem::path& dir, const ReportInputs& in);

nlohmann::ordered_json summary_json(const PipelineResult& r);

/// Writes `text` to `path`, throwing std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mobnet
