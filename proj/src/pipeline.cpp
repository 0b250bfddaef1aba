#include "mobnet/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "text_util.hpp"

namespace mobnet {

namespace {

struct UserWork {
  UserRow row;
  std::uint64_t detected = 0;
  std::uint64_t speed_dropped = 0;
  std::vector<EventRow> events;
  std::vector<const Place*> new_places;  // first occurrence within the timeline
};

UserWork process_user(const UserTimeline& timeline, const Thresholds& thresholds,
                      const PlaceMatcher* matcher, EventAggregate& shard) {
  UserWork w;
  UserOutcome outcome = process_timeline(timeline, thresholds);
  w.row.summary = outcome.summary;
  w.row.dropped = outcome.user_dropped;
  w.detected = outcome.detected_events;
  w.speed_dropped = outcome.speed_dropped;
  if (!outcome.user_dropped) w.row.home_country = home_country(timeline, matcher);

  w.events.reserve(outcome.kept_events.size());
  for (const auto& e : outcome.kept_events) {
    w.events.push_back(to_row(e));
    shard.add(w.events.back(), matcher);
  }

  std::unordered_set<std::string_view> seen;
  for (const auto& r : timeline.records) {
    if (r.place && seen.insert(r.place->place_id).second) w.new_places.push_back(&*r.place);
  }
  return w;
}

std::size_t bin_of(std::uint64_t v) {
  return v == 0 ? 0 : static_cast<std::size_t>(std::bit_width(v));
}

void write_stream(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string directed_tag(bool directed) { return directed ? "directed" : "undirected"; }

}  // namespace

void EventAggregate::add(const EventRow& row, const PlaceMatcher* matcher) {
  ++events;
  if (matcher != nullptr) {
    const MatchResult o = match_endpoint(row.origin, *matcher);
    const MatchResult d = match_endpoint(row.destination, *matcher);
    match_types.add_event(o, d);
    const auto city = resolve_event_city(row, *matcher);
    city_tally.record(city.reason);
    if (city.pair) this->city.add(city.pair->first, city.pair->second);
  }
  auto country_pair = resolve_event_country(row, matcher);
  country_tally.record(country_pair.reason);
  if (country_pair.pair) country.add(country_pair.pair->first, country_pair.pair->second);
}

void EventAggregate::merge(const EventAggregate& other) {
  city.merge(other.city);
  country.merge(other.country);
  city_tally += other.city_tally;
  country_tally += other.country_tally;
  match_types.merge(other.match_types);
  events += other.events;
}

void HistogramBuilder::add(std::uint64_t value) {
  const std::size_t b = bin_of(value);
  if (counts_.size() <= b) counts_.resize(b + 1, 0);
  ++counts_[b];
}

Histogram HistogramBuilder::finish() const {
  Histogram h;
  if (counts_.empty()) return h;
  h.counts = counts_;
  h.lower_edges.push_back(0);
  for (std::size_t k = 1; k < counts_.size(); ++k) h.lower_edges.push_back(std::uint64_t{1} << (k - 1));
  return h;
}

std::optional<std::string> home_country(const UserTimeline& timeline, const PlaceMatcher* matcher) {
  std::vector<std::string> countries;
  countries.reserve(timeline.records.size());
  for (const auto& r : timeline.records) {
    countries.push_back(endpoint_country(to_endpoint(effective_location(r)), matcher).value_or(""));
  }
  return modal_country(countries);
}

PipelineResult run_pipeline(const PipelineOptions& options, const Gazetteer* gazetteer,
                            const PipelineSinks& sinks) {
  PipelineResult result;
  const unsigned threads = std::max(1u, options.threads);
  const std::size_t budget = options.max_memory_mb << 20;

  std::optional<PlaceMatcher> matcher;
  if (gazetteer != nullptr) matcher.emplace(*gazetteer);
  const PlaceMatcher* m = matcher ? &*matcher : nullptr;

  TimelineSorter sorter(SortOptions{options.tmp_dir, budget});
  result.ingest = read_records(options.inputs, options.timestamp_format, threads,
                               [&](TweetRecord&& r) { sorter.add(std::move(r)); });

  HistogramBuilder tweets_hist;
  HistogramBuilder events_hist;

  // Timelines are processed in batches bounded by a slice of the memory budget.
  const std::size_t batch_limit =
      std::max<std::size_t>(4096, budget / 4 / (sizeof(TweetRecord) + 64));
  std::vector<UserTimeline> batch;
  std::size_t batch_records = 0;

  auto run_batch = [&] {
    if (batch.empty()) return;
    const std::size_t n = batch.size();
    std::vector<UserWork> work(n);
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<EventAggregate> shards(workers);
    auto run_range = [&](std::size_t w) {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      for (std::size_t i = lo; i < hi; ++i) {
        work[i] = process_user(batch[i], options.thresholds, m, shards[w]);
      }
    };
    if (workers == 1) {
      run_range(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    }
    for (const auto& s : shards) result.aggregate.merge(s);

    for (std::size_t i = 0; i < n; ++i) {
      UserWork& w = work[i];
      ++result.users;
      result.events_detected += w.detected;
      result.events_speed_dropped += w.speed_dropped;
      if (w.row.dropped) {
        ++result.users_dropped;
        result.events_from_dropped_users += w.row.summary.travel_event_count;
      } else if (w.row.home_country) {
        ++result.home_country_users[*w.row.home_country];
      }
      tweets_hist.add(w.row.summary.geotagged_tweet_count);
      events_hist.add(w.row.summary.travel_event_count);
      for (const Place* p : w.new_places) {
        if (!result.places.contains(p->place_id)) {
          result.places.emplace(p->place_id, PlaceMatch{*p, MatchResult{}});
        }
      }
      if (sinks.on_timeline) sinks.on_timeline(batch[i]);
      if (sinks.on_user) sinks.on_user(w.row);
      if (sinks.on_event) {
        for (const auto& e : w.events) sinks.on_event(e);
      }
    }
    batch.clear();
    batch_records = 0;
  };

  sorter.finish([&](UserTimeline&& t) {
    batch_records += t.records.size();
    batch.push_back(std::move(t));
    if (batch_records >= batch_limit) run_batch();
  });
  run_batch();

  result.sort = sorter.stats();
  result.ingest.duplicates_dropped = result.sort.duplicates_dropped;
  result.histograms = {tweets_hist.finish(), events_hist.finish()};

  result.match_types = result.aggregate.match_types;
  if (m != nullptr) {
    for (auto& [id, pm] : result.places) {
      pm.match = m->match_place(id, centroid(pm.place.bbox));
      result.match_types.add_place(pm.match);
    }
  } else {
    for (auto& [id, pm] : result.places) result.match_types.add_place(pm.match);
  }
  return result;
}

std::string_view users_csv_header() { return "user_id,tweets,events,dropped,home_country"; }

std::string format_user_row(const UserRow& row) {
  std::string s;
  detail::append_integer(s, row.summary.user_id);
  s.push_back(',');
  detail::append_integer(s, row.summary.geotagged_tweet_count);
  s.push_back(',');
  detail::append_integer(s, row.summary.travel_event_count);
  s += row.dropped ? ",1," : ",0,";
  if (row.home_country) s += *row.home_country;
  return s;
}

std::optional<UserRow> parse_user_row(std::string_view line) {
  line = detail::strip_cr(line);
  std::vector<std::string_view> f;
  detail::split(line, ',', f);
  if (f.size() != 5) return std::nullopt;
  const auto user = detail::parse_number<UserId>(f[0]);
  const auto tweets = detail::parse_number<std::uint64_t>(f[1]);
  const auto events = detail::parse_number<std::uint64_t>(f[2]);
  if (!user || !tweets || !events || (f[3] != "0" && f[3] != "1")) return std::nullopt;
  UserRow row;
  row.summary = UserSummary{*user, *tweets, *events};
  row.dropped = f[3] == "1";
  if (!f[4].empty()) row.home_country = std::string(f[4]);
  return row;
}

std::string_view places_csv_header() {
  return "place_id,name,place_type,country_code,centroid_lat,centroid_lon,status,geoname_id,"
         "feature_class,distance_km";
}

std::string format_place_row(const PlaceMatch& p) {
  const GeoPoint c = centroid(p.place.bbox);
  std::string s = csv_field(p.place.place_id);
  s += ',';
  s += csv_field(p.place.name);
  s += ',';
  s += to_string(p.place.type);
  s += ',';
  s += p.place.country_code;
  s += ',';
  detail::append_double(s, c.lat());
  s += ',';
  detail::append_double(s, c.lon());
  s += ',';
  s += to_string(p.match.status);
  s += ',';
  if (p.match.matched()) {
    detail::append_integer(s, p.match.entry->geoname_id);
    s += ',';
    if (p.match.entry->feature_class != '\0') s += p.match.entry->feature_class;
    s += ',';
    detail::append_double(s, *p.match.distance_km);
  } else {
    s += ",,";
  }
  return s;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_stream(path, [&](std::ostream& out) { out.write(text.data(), static_cast<std::streamsize>(text.size())); });
}

void write_city_network(const std::filesystem::path& dir, const CityNetwork& directed_net,
                        bool directed, const Gazetteer& gazetteer, const ResolutionTally& tally) {
  const CityNetwork net = directed ? directed_net : directed_net.undirected();
  const std::string stem = "city_" + directed_tag(directed);
  write_stream(dir / (stem + "_edges.csv"), [&](std::ostream& o) { write_edges_csv(o, net); });
  write_stream(dir / "city_vertices.csv",
               [&](std::ostream& o) { write_city_vertices_csv(o, net, gazetteer); });
  write_text_file(dir / (stem + "_stats.json"),
                  stats_json(network_stats(net), Granularity::kCity, directed, &tally));
}

void write_country_network(const std::filesystem::path& dir, const CountryNetwork& directed_net,
                           bool directed, const std::map<std::string, GeoPoint>& points,
                           const ResolutionTally& tally) {
  const CountryNetwork net = directed ? directed_net : directed_net.undirected();
  const std::string stem = "country_" + directed_tag(directed);
  write_stream(dir / (stem + "_edges.csv"), [&](std::ostream& o) { write_edges_csv(o, net); });
  write_stream(dir / "country_vertices.csv",
               [&](std::ostream& o) { write_country_vertices_csv(o, net, points); });
  write_text_file(dir / (stem + "_stats.json"),
                  stats_json(network_stats(net), Granularity::kCountry, directed, &tally));
}

nlohmann::ordered_json write_reports(const std::filesystem::path& dir, const ReportInputs& in) {
  nlohmann::ordered_json summary;

  if (in.country_info != nullptr && in.home_country_users != nullptr) {
    const auto pen = penetration(*in.home_country_users, *in.country_info, in.min_penetration_users);
    write_stream(dir / "penetration.csv",
                 [&](std::ostream& o) { write_penetration_csv(o, pen, *in.country_info); });
    write_stream(dir / "top_penetration.csv", [&](std::ostream& o) {
      write_top_penetration_csv(o, top_penetration_by_continent(pen, *in.country_info));
    });
    std::size_t anomalies = 0;
    for (const auto& [cc, row] : pen.rows) anomalies += row.anomaly ? 1 : 0;
    summary["penetration_countries"] = pen.rows.size();
    summary["penetration_anomalies"] = anomalies;
    summary["penetration_missing_country_info"] = pen.missing_country_info;
    summary["penetration_below_min_users"] = pen.below_min_users;
  }

  if (in.country_info != nullptr && in.aggregate != nullptr) {
    const auto top = top_edges_by_continent(in.aggregate->country.undirected(), *in.country_info);
    write_stream(dir / "top_edges.csv", [&](std::ostream& o) { write_top_edges_csv(o, top); });
  }

  if (in.histograms != nullptr) {
    write_text_file(dir / "histograms.json", to_json(*in.histograms).dump(2) + "\n");
  }

  if (in.match_types != nullptr) {
    write_stream(dir / "match_types.csv", [&](std::ostream& o) { in.match_types->write_csv(o); });
  }

  if (in.aggregate != nullptr) {
    GeoJsonExport geo;
    if (in.geojson_granularity == Granularity::kCity) {
      const CityNetwork net =
          in.geojson_directed ? in.aggregate->city : in.aggregate->city.undirected();
      geo = export_geojson<GeonameId>(net, [&](const GeonameId& id) -> std::optional<GeoPoint> {
        if (in.gazetteer == nullptr) return std::nullopt;
        const GazetteerEntry* e = in.gazetteer->find(id);
        return e ? std::optional<GeoPoint>(e->point) : std::nullopt;
      });
    } else {
      const CountryNetwork net =
          in.geojson_directed ? in.aggregate->country : in.aggregate->country.undirected();
      const auto points = in.gazetteer ? country_points(*in.gazetteer) : std::map<std::string, GeoPoint>{};
      geo = export_geojson<std::string>(net, [&](const std::string& cc) -> std::optional<GeoPoint> {
        const auto it = points.find(cc);
        return it == points.end() ? std::nullopt : std::optional<GeoPoint>(it->second);
      });
    }
    write_text_file(dir / "network.geojson", geo.collection.dump() + "\n");
    summary["geojson_features"] = geo.collection["features"].size();
    summary["geojson_skipped_edges"] = geo.skipped_edges;
  }
  return summary;
}

nlohmann::ordered_json summary_json(const PipelineResult& r) {
  nlohmann::ordered_json j;
  j["lines"] = r.ingest.lines;
  j["records_accepted"] = r.ingest.accepted;
  j["rejected_no_location"] = r.ingest.rejected_no_location;
  j["rejected_malformed"] = r.ingest.rejected_malformed;
  j["duplicates_dropped"] = r.sort.duplicates_dropped;
  j["sort_runs_spilled"] = r.sort.runs_spilled;
  j["sort_peak_buffered_bytes"] = r.sort.peak_buffered_bytes;
  j["users"] = r.users;
  j["users_dropped"] = r.users_dropped;
  j["events_detected"] = r.events_detected;
  j["events_speed_dropped"] = r.events_speed_dropped;
  j["events_from_dropped_users"] = r.events_from_dropped_users;
  j["events_kept"] = r.aggregate.events;
  j["unique_places"] = r.places.size();
  std::uint64_t unmatched = 0;
  for (const auto& [id, pm] : r.places) unmatched += pm.match.matched() ? 0 : 1;
  j["unique_places_unmatched"] = unmatched;
  return j;
}

}  // namespace mobnet
