// mobnet: command-line front end for the mobility network pipeline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobnet/gazetteer.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/network.hpp"
#include "mobnet/pipeline.hpp"
#include "mobnet/report.hpp"
#include "mobnet/synthetic.hpp"
#include "mobnet/travel.hpp"

namespace fs = std::filesystem;
using namespace mobnet;

namespace {

struct Flags {
  std::vector<std::string> inputs;
  std::string timestamp_format = "epoch";
  std::string tmp_dir;
  std::size_t max_memory_mb = 512;
  unsigned threads = 0;

  std::string gazetteer;
  std::uint64_t min_city_population = 1000;
  double match_radius_km = 50.0;
  std::string country_info;
  std::uint64_t min_users = 5000;

  double max_gap_hours = 72.0;
  double min_distance_km = 50.0;
  double max_speed_kmh = 1000.0;
  std::uint64_t max_user_tweets = 1000;
  std::uint64_t max_user_events = 100;

  std::string emit_events;
  std::string events;
  std::string users_file;
  std::string places;
  std::string network = "city";
  bool directed = true;
  std::string output_dir = ".";
  std::string output;

  std::uint64_t num_users = 10'000;
  std::uint64_t num_records = 1'000'000;
  std::uint64_t seed = 20160425;
};

Thresholds thresholds(const Flags& f) {
  Thresholds t;
  t.max_gap_seconds = static_cast<std::int64_t>(f.max_gap_hours * 3600.0);
  t.min_distance_km = f.min_distance_km;
  t.max_speed_kmh = f.max_speed_kmh;
  t.max_user_tweets = f.max_user_tweets;
  t.max_user_events = f.max_user_events;
  return t;
}

unsigned thread_count(const Flags& f) {
  if (f.threads != 0) return f.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

PipelineOptions pipeline_options(const Flags& f) {
  PipelineOptions o;
  for (const auto& p : f.inputs) o.inputs.emplace_back(p);
  o.timestamp_format =
      f.timestamp_format == "rfc3339" ? TimestampFormat::kRfc3339 : TimestampFormat::kEpochSeconds;
  o.tmp_dir = f.tmp_dir.empty() ? fs::temp_directory_path() : fs::path(f.tmp_dir);
  o.max_memory_mb = f.max_memory_mb;
  o.threads = thread_count(f);
  o.thresholds = thresholds(f);
  return o;
}

std::optional<Gazetteer> load(const Flags& f) {
  if (f.gazetteer.empty()) return std::nullopt;
  GazetteerParseResult parsed = load_gazetteer(f.gazetteer);
  std::cerr << "gazetteer: " << parsed.entries.size() << " entries, " << parsed.skipped_malformed
            << " malformed, " << parsed.skipped_duplicate_id << " duplicate ids\n";
  MatchOptions mo;
  mo.min_city_population = f.min_city_population;
  mo.radius_km = f.match_radius_km;
  return Gazetteer(std::move(parsed.entries), mo);
}

std::optional<CountryTable> load_countries(const Flags& f) {
  if (f.country_info.empty()) return std::nullopt;
  return load_country_info(f.country_info);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + p.string());
  return out;
}

// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

// Reads a persisted event stream back into an aggregate.
EventAggregate read_events(const fs::path& path, const PlaceMatcher* matcher) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read " + path.string());
  EventAggregate agg;
  std::string line;
  std::uint64_t bad = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (auto row = parse_event_row(line)) {
      agg.add(*row, matcher);
    } else {
      ++bad;
    }
  }
  if (bad != 0) std::cerr << "events: skipped " << bad << " malformed rows\n";
  return agg;
}

void write_networks(const fs::path& dir, const Flags& f, const EventAggregate& agg,
                    const Gazetteer* gaz, bool all) {
  const auto points = gaz ? country_points(*gaz) : std::map<std::string, GeoPoint>{};
  for (bool directed : {true, false}) {
    if (!all && directed != f.directed) continue;
    if ((all || f.network == "city") && gaz != nullptr) {
      write_city_network(dir, agg.city, directed, *gaz, agg.city_tally);
    }
    if (all || f.network == "country") {
      write_country_network(dir, agg.country, directed, points, agg.country_tally);
    }
  }
}

int cmd_generate(const Flags& f) {
  SyntheticParams p;
  p.users = f.num_users;
  p.records = f.num_records;
  p.seed = f.seed;
  fs::create_directories(f.output_dir);
  const SyntheticCorpus c = write_synthetic_corpus(p, f.output_dir);
  std::cout << "wrote " << c.lines_written << " record lines to " << c.records.string() << "\n"
            << "gazetteer: " << c.gazetteer.string() << "\n"
            << "country info: " << c.country_info.string() << "\n";
  return 0;
}

int cmd_ingest(const Flags& f) {
  require(!f.inputs.empty(), "ingest needs --input");
  const PipelineOptions o = pipeline_options(f);
  std::ofstream out;
  if (!f.output.empty()) out = open_out(f.output);

  TimelineSorter sorter(SortOptions{o.tmp_dir, o.max_memory_mb << 20});
  IngestStats st = read_records(o.inputs, o.timestamp_format, o.threads,
                                [&](TweetRecord&& r) { sorter.add(std::move(r)); });
  std::string buf;
  sorter.finish([&](UserTimeline&& t) {
    if (!out.is_open()) return;
    buf.clear();
    for (const auto& r : t.records) {
      append_record(buf, r);
      buf += '\n';
    }
    out << buf;
  });
  const SortStats ss = sorter.stats();
  nlohmann::ordered_json j;
  j["lines"] = st.lines;
  j["records_accepted"] = st.accepted;
  j["rejected_no_location"] = st.rejected_no_location;
  j["rejected_malformed"] = st.rejected_malformed;
  j["duplicates_dropped"] = ss.duplicates_dropped;
  j["records_out"] = ss.records_out;
  j["users"] = ss.users;
  j["sort_runs_spilled"] = ss.runs_spilled;
  j["sort_peak_buffered_bytes"] = ss.peak_buffered_bytes;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_match(const Flags& f) {
  require(!f.inputs.empty(), "match needs --input");
  const auto gaz = load(f);
  require(gaz.has_value(), "match needs --gazetteer");
  const PipelineOptions o = pipeline_options(f);

  std::map<std::string, Place> places;
  read_records(o.inputs, o.timestamp_format, o.threads, [&](TweetRecord&& r) {
    if (r.place) places.try_emplace(r.place->place_id, std::move(*r.place));
  });

  PlaceMatcher matcher(*gaz);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!f.output.empty()) {
    file = open_out(f.output);
    out = &file;
  }
  *out << places_csv_header() << '\n';
  std::uint64_t matched = 0;
  for (const auto& [id, place] : places) {
    PlaceMatch pm{place, matcher.match_place(id, centroid(place.bbox))};
    matched += pm.match.matched() ? 1 : 0;
    *out << format_place_row(pm) << '\n';
  }
  std::cerr << "places: " << places.size() << ", matched " << matched << "\n";
  return 0;
}

PipelineSinks file_sinks(std::ofstream& events, std::ofstream& users, std::string& buf) {
  PipelineSinks sinks;
  if (events.is_open()) {
    events << event_stream_header() << '\n';
    sinks.on_event = [&](const EventRow& e) {
      buf.clear();
      append_event_row(buf, e);
      buf += '\n';
      events << buf;
    };
  }
  if (users.is_open()) {
    users << users_csv_header() << '\n';
    sinks.on_user = [&](const UserRow& u) { users << format_user_row(u) << '\n'; };
  }
  return sinks;
}

int cmd_events(const Flags& f) {
  require(!f.inputs.empty(), "events needs --input");
  const std::string events_path = !f.emit_events.empty() ? f.emit_events : f.output;
  require(!events_path.empty(), "events needs --emit-events");
  const auto gaz = load(f);

  std::ofstream events = open_out(events_path);
  std::ofstream users;
  if (!f.users_file.empty()) users = open_out(f.users_file);
  std::string buf;
  const PipelineResult r =
      run_pipeline(pipeline_options(f), gaz ? &*gaz : nullptr, file_sinks(events, users, buf));
  std::cout << summary_json(r).dump(2) << "\n";
  return 0;
}

int cmd_network(const Flags& f) {
  require(!f.events.empty(), "network needs --events");
  require(f.network == "city" || f.network == "country", "--network must be city or country");
  const auto gaz = load(f);
  require(f.network == "country" || gaz.has_value(), "city networks need --gazetteer");
  std::optional<PlaceMatcher> matcher;
  if (gaz) matcher.emplace(*gaz);

  const EventAggregate agg = read_events(f.events, matcher ? &*matcher : nullptr);
  fs::create_directories(f.output_dir);
  write_networks(f.output_dir, f, agg, gaz ? &*gaz : nullptr, false);
  const ResolutionTally& t = f.network == "city" ? agg.city_tally : agg.country_tally;
  std::cerr << "events: " << agg.events << ", resolved " << t.resolved << "\n";
  return 0;
}

int cmd_report(const Flags& f) {
  require(!f.events.empty(), "report needs --events");
  const auto gaz = load(f);
  const auto countries = load_countries(f);
  std::optional<PlaceMatcher> matcher;
  if (gaz) matcher.emplace(*gaz);
  const EventAggregate agg = read_events(f.events, matcher ? &*matcher : nullptr);

  MatchTypeBreakdown types = agg.match_types;
  if (!f.places.empty()) {
    std::ifstream in(f.places, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + f.places);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      require(fields.size() == 10, "malformed places row: " + line);
      types.add_place(fields[6] == "unmatched" ? std::string_view("None")
                      : fields[8].empty()      ? std::string_view("Other")
                      : is_known_feature_class(fields[8][0]) ? std::string_view(fields[8])
                                                             : std::string_view("Other"));
    }
  }

  std::optional<UserHistograms> hist;
  std::map<std::string, std::uint64_t> homes;
  if (!f.users_file.empty()) {
    std::ifstream in(f.users_file, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + f.users_file);
    std::string line;
    std::getline(in, line);
    HistogramBuilder tweets;
    HistogramBuilder events;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto row = parse_user_row(line);
      require(row.has_value(), "malformed users row: " + line);
      tweets.add(row->summary.geotagged_tweet_count);
      events.add(row->summary.travel_event_count);
      if (!row->dropped && row->home_country) ++homes[*row->home_country];
    }
    hist = UserHistograms{tweets.finish(), events.finish()};
  }

  ReportInputs in;
  in.aggregate = &agg;
  in.match_types = &types;
  in.histograms = hist ? &*hist : nullptr;
  in.home_country_users = f.users_file.empty() ? nullptr : &homes;
  in.gazetteer = gaz ? &*gaz : nullptr;
  in.country_info = countries ? &*countries : nullptr;
  in.min_penetration_users = f.min_users;
  in.geojson_granularity = f.network == "country" ? Granularity::kCountry : Granularity::kCity;
  in.geojson_directed = f.directed;
  fs::create_directories(f.output_dir);
  std::cout << write_reports(f.output_dir, in).dump(2) << "\n";
  return 0;
}

int cmd_run_all(const Flags& f) {
  require(!f.inputs.empty(), "run-all needs --input");
  const auto gaz = load(f);
  const auto countries = load_countries(f);
  const fs::path dir = f.output_dir;
  fs::create_directories(dir);

  std::ofstream events;
  if (!f.emit_events.empty()) events = open_out(f.emit_events);
  std::ofstream users = open_out(dir / "users.csv");
  std::string buf;

  const auto start = std::chrono::steady_clock::now();
  const PipelineResult r =
      run_pipeline(pipeline_options(f), gaz ? &*gaz : nullptr, file_sinks(events, users, buf));
  users.close();

  {
    std::ofstream places = open_out(dir / "places.csv");
    places << places_csv_header() << '\n';
    for (const auto& [id, pm] : r.places) places << format_place_row(pm) << '\n';
  }
  write_networks(dir, f, r.aggregate, gaz ? &*gaz : nullptr, true);

  ReportInputs in;
  in.aggregate = &r.aggregate;
  in.match_types = &r.match_types;
  in.histograms = &r.histograms;
  in.home_country_users = &r.home_country_users;
  in.gazetteer = gaz ? &*gaz : nullptr;
  in.country_info = countries ? &*countries : nullptr;
  in.min_penetration_users = f.min_users;
  in.geojson_granularity = f.network == "country" ? Granularity::kCountry : Granularity::kCity;
  in.geojson_directed = f.directed;
  const auto report = write_reports(dir, in);

  nlohmann::ordered_json summary = summary_json(r);
  for (const auto& [k, v] : report.items()) summary[k] = v;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "run-all finished in " << secs << " s\n";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travel events and mobility networks from geotagged message streams"};
  app.set_config("--config", "", "Read flags from a TOML/INI file");
  app.require_subcommand(1);
  Flags f;

  app.add_option("--input", f.inputs, "Record files (tab-separated)");
  app.add_option("--timestamp-format", f.timestamp_format)
      ->check(CLI::IsMember({"epoch", "rfc3339"}))
      ->capture_default_str();
  app.add_option("--tmp-dir", f.tmp_dir, "Directory for external-sort runs");
  app.add_option("--max-memory-mb", f.max_memory_mb, "Record buffer budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threads", f.threads, "Worker threads (0 = hardware)")->capture_default_str();

  app.add_option("--gazetteer", f.gazetteer, "Geonames allCountries-format file");
  app.add_option("--min-city-population", f.min_city_population)->capture_default_str();
  app.add_option("--match-radius-km", f.match_radius_km)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--country-info", f.country_info, "Geonames countryInfo file");
  app.add_option("--min-users", f.min_users, "Minimum home users for a penetration row")
      ->capture_default_str();

  app.add_option("--max-gap-hours", f.max_gap_hours)->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--min-distance-km", f.min_distance_km)->capture_default_str();
  app.add_option("--max-speed-kmh", f.max_speed_kmh)->capture_default_str();
  app.add_option("--max-user-tweets", f.max_user_tweets)->capture_default_str();
  app.add_option("--max-user-events", f.max_user_events)->capture_default_str();

  app.add_option("--emit-events", f.emit_events, "Write the kept event stream here");
  app.add_option("--events", f.events, "Event stream written by --emit-events");
  app.add_option("--users-file", f.users_file, "Per-user summary CSV");
  app.add_option("--places", f.places, "places.csv written by match or run-all");
  app.add_option("--network", f.network)
      ->check(CLI::IsMember({"city", "country"}))
      ->capture_default_str();
  app.add_option("--directed", f.directed)->capture_default_str();
  app.add_option("--output-dir", f.output_dir)->capture_default_str();
  app.add_option("--output", f.output, "Output file for single-file subcommands");

  app.add_option("--num-users", f.num_users)->capture_default_str();
  app.add_option("--num-records", f.num_records)->capture_default_str();
  app.add_option("--seed", f.seed)->capture_default_str();

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  CLI::App* generate = sub("generate", "Write a synthetic corpus to --output-dir");
  CLI::App* ingest = sub("ingest", "Parse, deduplicate and sort records by user and time");
  CLI::App* match = sub("match", "Match tagged places against the gazetteer");
  CLI::App* events = sub("events", "Detect and filter travel events");
  CLI::App* network = sub("network", "Build a city or country network from an event stream");
  CLI::App* report = sub("report", "Write report tables from an event stream");
  CLI::App* run_all = sub("run-all", "Full pipeline into --output-dir");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(f);
    if (*ingest) return cmd_ingest(f);
    if (*match) return cmd_match(f);
    if (*events) return cmd_events(f);
    if (*network) return cmd_network(f);
    if (*report) return cmd_report(f);
    if (*run_all) return cmd_run_all(f);
  } catch (const std::exception& e) {
    std::cerr << "mobnet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
