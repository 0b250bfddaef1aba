#include "mobnet/travel.hpp"

#include <stdexcept>

#include "text_util.hpp"

namespace mobnet {

namespace {

constexpr std::size_t kEventFieldCount = 16;

void append_endpoint(std::string& out, const EventEndpoint& ep) {
  out += ep.place_id;
  out.push_back('\t');
  detail::append_double(out, ep.point.lat());
  out.push_back('\t');
  detail::append_double(out, ep.point.lon());
  out.push_back('\t');
  out += ep.country_code;
}

std::optional<GeoPoint> parse_point(std::string_view lat_s, std::string_view lon_s) {
  const auto lat = detail::parse_number<double>(lat_s);
  const auto lon = detail::parse_number<double>(lon_s);
  if (!lat || !lon || !GeoPoint::valid(*lat, *lon)) return std::nullopt;
  return GeoPoint(*lat, *lon);
}

}  // namespace

LocRef effective_location(const TweetRecord& r) {
  if (r.point) return {*r.point, r.place};
  if (!r.place) throw std::invalid_argument("record has neither coordinates nor place");
  return {centroid(r.place->bbox), r.place};
}

bool same_location(const LocRef& a, const LocRef& b) {
  if (a.place && b.place) {
    return a.place->place_id == b.place->place_id || contains(a.place->bbox, b.place->bbox) ||
           contains(b.place->bbox, a.place->bbox);
  }
  if (a.place) return contains(a.place->bbox, b.point);
  if (b.place) return contains(b.place->bbox, a.point);
  return false;
}

std::vector<TravelEvent> detect_events(std::span<const TweetRecord> timeline, const Thresholds& t) {
  std::vector<TravelEvent> events;
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    const TweetRecord& prev = timeline[i - 1];
    const TweetRecord& cur = timeline[i];
    const std::int64_t gap = cur.timestamp - prev.timestamp;
    if (gap < 0) throw std::logic_error("timeline is not chronological");
    if (gap > t.max_gap_seconds) continue;

    LocRef from = effective_location(prev);
    LocRef to = effective_location(cur);
    if (same_location(from, to)) continue;
    const double d = haversine_km(from.point, to.point);
    if (!(d > t.min_distance_km)) continue;

    events.push_back(TravelEvent{cur.user_id, std::move(from), std::move(to), cur.timestamp, d,
                                 static_cast<double>(gap) / 3600.0});
  }
  return events;
}

Verdict speed_filter(const TravelEvent& e, const Thresholds& t) {
  if (e.elapsed_h <= 0.0) return Verdict::kDrop;
  return e.distance_km / e.elapsed_h > t.max_speed_kmh ? Verdict::kDrop : Verdict::kKeep;
}

Verdict user_filters(const UserSummary& s, const Thresholds& t) {
  if (s.geotagged_tweet_count > t.max_user_tweets) return Verdict::kDrop;
  if (s.travel_event_count > t.max_user_events) return Verdict::kDrop;
  return Verdict::kKeep;
}

UserOutcome process_timeline(const UserTimeline& timeline, const Thresholds& t) {
  UserOutcome out;
  out.summary.user_id = timeline.user_id;
  out.summary.geotagged_tweet_count = timeline.raw_record_count;

  auto detected = detect_events(timeline.records, t);
  out.detected_events = detected.size();
  for (auto& e : detected) {
    if (speed_filter(e, t) == Verdict::kKeep) {
      out.kept_events.push_back(std::move(e));
    } else {
      ++out.speed_dropped;
    }
  }
  out.summary.travel_event_count = out.kept_events.size();
  if (user_filters(out.summary, t) == Verdict::kDrop) {
    out.user_dropped = true;
    out.kept_events.clear();
  }
  return out;
}

EventEndpoint to_endpoint(const LocRef& loc) {
  EventEndpoint ep;
  ep.point = loc.point;
  ep.match_point = loc.point;
  if (loc.place) {
    ep.place_id = loc.place->place_id;
    ep.match_point = centroid(loc.place->bbox);
    ep.country_code = loc.place->country_code;
  }
  return ep;
}

EventRow to_row(const TravelEvent& e) {
  return EventRow{e.user_id, e.timestamp, to_endpoint(e.origin), to_endpoint(e.destination),
                  e.distance_km, e.elapsed_h};
}

std::string_view event_stream_header() {
  return "#user_id\tts\torigin_place_id\torigin_lat\torigin_lon\torigin_country"
         "\tdest_place_id\tdest_lat\tdest_lon\tdest_country\tdistance_km\telapsed_h"
         "\torigin_match_lat\torigin_match_lon\tdest_match_lat\tdest_match_lon";
}

void append_event_row(std::string& out, const EventRow& row) {
  detail::append_integer(out, row.user_id);
  out.push_back('\t');
  detail::append_integer(out, row.timestamp);
  out.push_back('\t');
  append_endpoint(out, row.origin);
  out.push_back('\t');
  append_endpoint(out, row.destination);
  out.push_back('\t');
  detail::append_double(out, row.distance_km);
  out.push_back('\t');
  detail::append_double(out, row.elapsed_h);
  for (const GeoPoint* p : {&row.origin.match_point, &row.destination.match_point}) {
    out.push_back('\t');
    detail::append_double(out, p->lat());
    out.push_back('\t');
    detail::append_double(out, p->lon());
  }
}

std::optional<EventRow> parse_event_row(std::string_view line) {
  line = detail::strip_cr(line);
  if (line.empty() || line.front() == '#') return std::nullopt;
  thread_local std::vector<std::string_view> f;
  detail::split(line, '\t', f);
  if (f.size() != kEventFieldCount) return std::nullopt;

  EventRow row;
  const auto user = detail::parse_number<UserId>(f[0]);
  const auto ts = detail::parse_number<Timestamp>(f[1]);
  const auto o_pt = parse_point(f[3], f[4]);
  const auto d_pt = parse_point(f[7], f[8]);
  const auto dist = detail::parse_number<double>(f[10]);
  const auto elapsed = detail::parse_number<double>(f[11]);
  const auto o_match = parse_point(f[12], f[13]);
  const auto d_match = parse_point(f[14], f[15]);
  if (!user || !ts || !o_pt || !d_pt || !dist || !elapsed || !o_match || !d_match) {
    return std::nullopt;
  }
  row.user_id = *user;
  row.timestamp = *ts;
  row.origin = EventEndpoint{std::string(f[2]), *o_pt, *o_match, std::string(f[5])};
  row.destination = EventEndpoint{std::string(f[6]), *d_pt, *d_match, std::string(f[9])};
  row.distance_km = *dist;
  row.elapsed_h = *elapsed;
  return row;
}

}  // namespace mobnet
