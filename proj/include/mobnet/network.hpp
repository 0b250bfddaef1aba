#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "mobnet/gazetteer.hpp"
#include "mobnet/travel.hpp"

namespace mobnet {

enum class Granularity { kCity, kCountry };

std::string_view to_string(Granularity g) noexcept;

/// Weighted origin-destination graph. Edge weights count travel events;
/// self-loops are rejected. Undirected networks store each pair once with the
/// smaller key first.
template <typename Key>
class TravelNetwork {
public:
  using Edge = std::pair<Key, Key>;
  using EdgeMap = std::map<Edge, std::uint64_t>;

  explicit TravelNetwork(bool directed = true) : directed_(directed) {}

  bool directed() const noexcept { return directed_; }

  void add(const Key& origin, const Key& dest, std::uint64_t weight = 1) {
    if (origin == dest) throw std::invalid_argument("self-loop edge");
    if (weight == 0) return;
    Edge e = (directed_ || origin < dest) ? Edge{origin, dest} : Edge{dest, origin};
    vertices_.insert(origin);
    vertices_.insert(dest);
    edges_[std::move(e)] += weight;
  }

  /// Associative, commutative merge of shard-local counts.
  void merge(const TravelNetwork& other) {
    if (other.directed_ != directed_) throw std::invalid_argument("mixed directedness in merge");
    for (const auto& [e, w] : other.edges_) {
      vertices_.insert(e.first);
      vertices_.insert(e.second);
      edges_[e] += w;
    }
  }

  /// Folds u->v and v->u into one canonical undirected edge.
  TravelNetwork undirected() const {
    TravelNetwork out(false);
    for (const auto& [e, w] : edges_) out.add(e.first, e.second, w);
    return out;
  }

  std::uint64_t weight(const Key& origin, const Key& dest) const {
    const Edge e = (directed_ || origin < dest) ? Edge{origin, dest} : Edge{dest, origin};
    const auto it = edges_.find(e);
    return it == edges_.end() ? 0 : it->second;
  }

  const EdgeMap& edges() const noexcept { return edges_; }
  const std::set<Key>& vertices() const noexcept { return vertices_; }

  friend bool operator==(const TravelNetwork&, const TravelNetwork&) = default;

private:
  bool directed_;
  std::set<Key> vertices_;
  EdgeMap edges_;
};

using CityNetwork = TravelNetwork<GeonameId>;
using CountryNetwork = TravelNetwork<std::string>;

/// Builds a network whose edge weights equal the multiplicity of each pair.
template <typename Key>
TravelNetwork<Key> build_network(std::span<const std::pair<Key, Key>> pairs, bool directed) {
  TravelNetwork<Key> net(directed);
  for (const auto& [o, d] : pairs) net.add(o, d);
  return net;
}

struct NetworkStats {
  std::uint64_t vertex_count = 0;
  std::uint64_t edge_count = 0;
  double edge_density = 0.0;
  bool density_defined = false;  // false when fewer than two vertices
  std::uint64_t total_weight = 0;
};

/// E / (V(V-1)) directed, E / (V(V-1)/2) undirected; 0 (undefined) for V < 2.
double edge_density(std::uint64_t vertices, std::uint64_t edges, bool directed) noexcept;

template <typename Key>
NetworkStats network_stats(const TravelNetwork<Key>& n) {
  NetworkStats s;
  s.vertex_count = n.vertices().size();
  s.edge_count = n.edges().size();
  s.density_defined = s.vertex_count >= 2;
  s.edge_density = edge_density(s.vertex_count, s.edge_count, n.directed());
  for (const auto& [e, w] : n.edges()) s.total_weight += w;
  return s;
}

enum class Exclusion { kNone, kUnmatchedEndpoint, kSelfLoop, kNoCountry };

template <typename Key>
struct Resolution {
  std::optional<std::pair<Key, Key>> pair;
  Exclusion reason = Exclusion::kNone;
};

/// Gazetteer entry for one endpoint: tagged places are matched by their
/// centroid (memoized per place), bare coordinates by the point itself.
MatchResult match_endpoint(const EventEndpoint& ep, const PlaceMatcher& matcher);

/// Country of an endpoint: the tagged place's code, else the country of its
/// gazetteer match (when a matcher is given).
std::optional<std::string> endpoint_country(const EventEndpoint& ep, const PlaceMatcher* matcher);

Resolution<GeonameId> resolve_event_city(const EventRow& e, const PlaceMatcher& matcher);
Resolution<GeonameId> resolve_event_city(const TravelEvent& e, const PlaceMatcher& matcher);
Resolution<std::string> resolve_event_country(const EventRow& e, const PlaceMatcher* matcher);
Resolution<std::string> resolve_event_country(const TravelEvent& e, const PlaceMatcher* matcher);

/// Counts of events offered to one network and why any were left out.
struct ResolutionTally {
  std::uint64_t offered = 0;
  std::uint64_t resolved = 0;
  std::uint64_t unmatched_endpoint = 0;
  std::uint64_t self_loop = 0;
  std::uint64_t no_country = 0;

  void record(Exclusion reason);
  ResolutionTally& operator+=(const ResolutionTally& o);
};

/// Edge list as CSV: origin_key,dest_key,weight (header included).
template <typename Key>
void write_edges_csv(std::ostream& out, const TravelNetwork<Key>& n);

/// City vertices: geoname_id,name,country_code,feature_class,lat,lon.
void write_city_vertices_csv(std::ostream& out, const CityNetwork& n, const Gazetteer& gazetteer);
/// Country vertices: country_code,lat,lon (coordinates blank when unknown).
void write_country_vertices_csv(std::ostream& out, const CountryNetwork& n,
                                const std::map<std::string, GeoPoint>& country_points);

/// Stats plus exclusion tally as a JSON document.
std::string stats_json(const NetworkStats& s, Granularity g, bool directed,
                       const ResolutionTally* tally = nullptr);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

}  // namespace mobnet
