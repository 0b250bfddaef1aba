#include "mobnet/network.hpp"

#include <ostream>

#include <json.hpp>

#include "text_util.hpp"

namespace mobnet {

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::kCity ? "city" : "country";
}

double edge_density(std::uint64_t vertices, std::uint64_t edges, bool directed) noexcept {
  if (vertices < 2) return 0.0;
  const double v = static_cast<double>(vertices);
  const double possible = directed ? v * (v - 1.0) : v * (v - 1.0) / 2.0;
  return static_cast<double>(edges) / possible;
}

MatchResult match_endpoint(const EventEndpoint& ep, const PlaceMatcher& matcher) {
  if (ep.has_place()) return matcher.match_place(ep.place_id, ep.match_point);
  return matcher.match_point(ep.match_point);
}

std::optional<std::string> endpoint_country(const EventEndpoint& ep, const PlaceMatcher* matcher) {
  if (!ep.country_code.empty()) return ep.country_code;
  if (matcher == nullptr) return std::nullopt;
  const MatchResult m = match_endpoint(ep, *matcher);
  if (!m.matched() || m.entry->country_code.empty()) return std::nullopt;
  return m.entry->country_code;
}

Resolution<GeonameId> resolve_event_city(const EventRow& e, const PlaceMatcher& matcher) {
  const MatchResult o = match_endpoint(e.origin, matcher);
  const MatchResult d = match_endpoint(e.destination, matcher);
  if (!o.matched() || !d.matched()) return {std::nullopt, Exclusion::kUnmatchedEndpoint};
  if (o.entry->geoname_id == d.entry->geoname_id) return {std::nullopt, Exclusion::kSelfLoop};
  return {std::pair{o.entry->geoname_id, d.entry->geoname_id}, Exclusion::kNone};
}

Resolution<GeonameId> resolve_event_city(const TravelEvent& e, const PlaceMatcher& matcher) {
  return resolve_event_city(to_row(e), matcher);
}

Resolution<std::string> resolve_event_country(const EventRow& e, const PlaceMatcher* matcher) {
  auto o = endpoint_country(e.origin, matcher);
  auto d = endpoint_country(e.destination, matcher);
  if (!o || !d) return {std::nullopt, Exclusion::kNoCountry};
  if (*o == *d) return {std::nullopt, Exclusion::kSelfLoop};
  return {std::pair{std::move(*o), std::move(*d)}, Exclusion::kNone};
}

Resolution<std::string> resolve_event_country(const TravelEvent& e, const PlaceMatcher* matcher) {
  return resolve_event_country(to_row(e), matcher);
}

void ResolutionTally::record(Exclusion reason) {
  ++offered;
  switch (reason) {
    case Exclusion::kNone: ++resolved; break;
    case Exclusion::kUnmatchedEndpoint: ++unmatched_endpoint; break;
    case Exclusion::kSelfLoop: ++self_loop; break;
    case Exclusion::kNoCountry: ++no_country; break;
  }
}

ResolutionTally& ResolutionTally::operator+=(const ResolutionTally& o) {
  offered += o.offered;
  resolved += o.resolved;
  unmatched_endpoint += o.unmatched_endpoint;
  self_loop += o.self_loop;
  no_country += o.no_country;
  return *this;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename Key>
void write_edges_csv(std::ostream& out, const TravelNetwork<Key>& n) {
  out << "origin_key,dest_key,weight\n";
  for (const auto& [e, w] : n.edges()) {
    if constexpr (std::is_same_v<Key, std::string>) {
      out << csv_field(e.first) << ',' << csv_field(e.second) << ',' << w << '\n';
    } else {
      out << e.first << ',' << e.second << ',' << w << '\n';
    }
  }
}

template void write_edges_csv<GeonameId>(std::ostream&, const CityNetwork&);
template void write_edges_csv<std::string>(std::ostream&, const CountryNetwork&);

void write_city_vertices_csv(std::ostream& out, const CityNetwork& n, const Gazetteer& gazetteer) {
  out << "geoname_id,name,country_code,feature_class,lat,lon\n";
  for (GeonameId id : n.vertices()) {
    out << id << ',';
    if (const GazetteerEntry* e = gazetteer.find(id)) {
      out << csv_field(e->name) << ',' << e->country_code << ',';
      if (e->feature_class != '\0') out << e->feature_class;
      out << ',' << detail::format_double(e->point.lat()) << ','
          << detail::format_double(e->point.lon());
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

void write_country_vertices_csv(std::ostream& out, const CountryNetwork& n,
                                const std::map<std::string, GeoPoint>& country_points) {
  out << "country_code,lat,lon\n";
  for (const auto& cc : n.vertices()) {
    out << csv_field(cc) << ',';
    if (auto it = country_points.find(cc); it != country_points.end()) {
      out << detail::format_double(it->second.lat()) << ','
          << detail::format_double(it->second.lon());
    } else {
      out << ',';
    }
    out << '\n';
  }
}

std::string stats_json(const NetworkStats& s, Granularity g, bool directed,
                       const ResolutionTally* tally) {
  nlohmann::ordered_json j;
  j["granularity"] = to_string(g);
  j["directed"] = directed;
  j["vertex_count"] = s.vertex_count;
  j["edge_count"] = s.edge_count;
  j["edge_density"] = s.edge_density;
  j["density_defined"] = s.density_defined;
  j["total_weight"] = s.total_weight;
  if (tally != nullptr) {
    j["events_offered"] = tally->offered;
    j["events_resolved"] = tally->resolved;
    j["excluded_unmatched_endpoint"] = tally->unmatched_endpoint;
    j["excluded_self_loop"] = tally->self_loop;
    j["excluded_no_country"] = tally->no_country;
  }
  return j.dump(2) + "\n";
}

}  // namespace mobnet
