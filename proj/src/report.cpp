#include "mobnet/report.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "text_util.hpp"

namespace mobnet {

namespace {

constexpr std::size_t kOtherRow = 9;
constexpr std::size_t kNoneRow = 10;

std::size_t label_index(std::string_view label) {
  for (std::size_t i = 0; i < kMatchTypeLabels.size(); ++i) {
    if (kMatchTypeLabels[i] == label) return i;
  }
  throw std::invalid_argument("unknown match type label: " + std::string(label));
}

std::size_t bin_of(std::uint64_t v) {
  return v == 0 ? 0 : static_cast<std::size_t>(std::bit_width(v));
}

}  // namespace

bool is_continent_code(std::string_view c) noexcept {
  return c == "AF" || c == "AS" || c == "EU" || c == "NA" || c == "OC" || c == "SA" || c == "AN";
}

std::string_view continent_name(std::string_view code) noexcept {
  if (code == "AF") return "Africa";
  if (code == "AS") return "Asia";
  if (code == "EU") return "Europe";
  if (code == "NA") return "North America";
  if (code == "OC") return "Oceania";
  if (code == "SA") return "South America";
  if (code == "AN") return "Antarctica";
  return "";
}

const CountryInfo* CountryTable::find(std::string_view code) const {
  const auto it = countries.find(std::string(code));
  return it == countries.end() ? nullptr : &it->second;
}

CountryTable parse_country_info(std::istream& in) {
  CountryTable table;
  std::string line;
  std::vector<std::string_view> f;
  while (std::getline(in, line)) {
    const std::string_view l = detail::strip_cr(line);
    if (l.empty() || l.front() == '#') continue;
    detail::split(l, '\t', f);
    if (f.size() < 9 || f[0].size() != 2 || !is_continent_code(f[8])) {
      ++table.skipped_malformed;
      continue;
    }
    std::uint64_t population = 0;
    if (!f[7].empty()) {
      const auto pop = detail::parse_number<std::uint64_t>(f[7]);
      if (!pop) {
        ++table.skipped_malformed;
        continue;
      }
      population = *pop;
    }
    CountryInfo info{std::string(f[0]), std::string(f[4]), std::string(f[8]), population};
    table.countries.insert_or_assign(info.country_code, std::move(info));
  }
  return table;
}

CountryTable load_country_info(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open country info: " + path.string());
  return parse_country_info(in);
}

std::optional<std::string> modal_country(std::span<const std::string> record_countries) {
  std::unordered_map<std::string_view, std::pair<std::size_t, std::size_t>> tally;  // count, first
  for (std::size_t i = 0; i < record_countries.size(); ++i) {
    const std::string& c = record_countries[i];
    if (c.empty()) continue;
    auto [it, inserted] = tally.try_emplace(c, 0, i);
    ++it->second.first;
  }
  std::optional<std::string> best;
  std::size_t best_count = 0;
  std::size_t best_first = 0;
  for (const auto& [country, cf] : tally) {
    if (cf.first > best_count || (cf.first == best_count && cf.second < best_first)) {
      best = std::string(country);
      best_count = cf.first;
      best_first = cf.second;
    }
  }
  return best;
}

PenetrationReport penetration(const std::map<std::string, std::uint64_t>& user_home_counts,
                              const CountryTable& info, std::uint64_t min_users) {
  PenetrationReport report;
  for (const auto& [cc, users] : user_home_counts) {
    if (users == 0) continue;
    const CountryInfo* ci = info.find(cc);
    if (ci == nullptr || ci->population == 0) {
      ++report.missing_country_info;
      continue;
    }
    if (users < min_users) {
      ++report.below_min_users;
      continue;
    }
    PenetrationRow row;
    row.users = users;
    row.population = ci->population;
    row.ratio = static_cast<double>(users) / static_cast<double>(ci->population);
    row.anomaly = row.ratio > 1.0;
    report.rows.emplace(cc, row);
  }
  return report;
}

std::map<std::string, ContinentTopPenetration> top_penetration_by_continent(
    const PenetrationReport& r, const CountryTable& info) {
  std::map<std::string, ContinentTopPenetration> top;
  for (const auto& [cc, row] : r.rows) {
    const CountryInfo* ci = info.find(cc);
    if (ci == nullptr) continue;
    auto [it, inserted] = top.try_emplace(ci->continent, ContinentTopPenetration{cc, row.ratio});
    if (!inserted && row.ratio > it->second.ratio) it->second = ContinentTopPenetration{cc, row.ratio};
  }
  return top;
}

std::map<std::string, ContinentTopEdge> top_edges_by_continent(const CountryNetwork& undirected,
                                                               const CountryTable& info) {
  if (undirected.directed()) throw std::invalid_argument("top edges need an undirected network");
  std::map<std::string, ContinentTopEdge> top;
  for (const auto& [edge, w] : undirected.edges()) {
    const CountryInfo* a = info.find(edge.first);
    const CountryInfo* b = info.find(edge.second);
    if (a == nullptr || b == nullptr || a->continent != b->continent) continue;
    auto it = top.find(a->continent);
    if (it == top.end()) {
      top.emplace(a->continent, ContinentTopEdge{edge.first, edge.second, w});
    } else if (w > it->second.weight) {
      it->second = ContinentTopEdge{edge.first, edge.second, w};
    }
  }
  return top;
}

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram log_histogram(std::span<const std::uint64_t> values) {
  Histogram h;
  if (values.empty()) return h;
  const std::uint64_t max = *std::max_element(values.begin(), values.end());
  const std::size_t bins = bin_of(max) + 1;
  h.counts.assign(bins, 0);
  h.lower_edges.reserve(bins);
  h.lower_edges.push_back(0);
  for (std::size_t k = 1; k < bins; ++k) h.lower_edges.push_back(std::uint64_t{1} << (k - 1));
  for (auto v : values) ++h.counts[bin_of(v)];
  return h;
}

UserHistograms histograms(std::span<const UserSummary> summaries) {
  std::vector<std::uint64_t> tweets;
  std::vector<std::uint64_t> events;
  tweets.reserve(summaries.size());
  events.reserve(summaries.size());
  for (const auto& s : summaries) {
    tweets.push_back(s.geotagged_tweet_count);
    events.push_back(s.travel_event_count);
  }
  return {log_histogram(tweets), log_histogram(events)};
}

nlohmann::ordered_json to_json(const UserHistograms& h) {
  auto one = [](const Histogram& x) {
    nlohmann::ordered_json j;
    j["lower_edges"] = x.lower_edges;
    j["counts"] = x.counts;
    j["users"] = x.total();
    return j;
  };
  nlohmann::ordered_json j;
  j["binning"] = "log2: [0,1), [1,2), [2,4), ...";
  j["tweets_per_user"] = one(h.tweets_per_user);
  j["events_per_user"] = one(h.events_per_user);
  return j;
}

std::string_view match_type_label(const MatchResult& m) noexcept {
  if (!m.matched()) return kMatchTypeLabels[kNoneRow];
  const char c = m.entry->feature_class;
  if (!is_known_feature_class(c)) return kMatchTypeLabels[kOtherRow];
  for (std::size_t i = 0; i < kOtherRow; ++i) {
    if (kMatchTypeLabels[i].front() == c) return kMatchTypeLabels[i];
  }
  return kMatchTypeLabels[kOtherRow];
}

void MatchTypeBreakdown::add_place(const MatchResult& m) {
  ++rows_[label_index(match_type_label(m))].places;
}

void MatchTypeBreakdown::add_place(std::string_view label) { ++rows_[label_index(label)].places; }

void MatchTypeBreakdown::add_event(const MatchResult& origin, const MatchResult& dest) {
  const std::size_t a = label_index(match_type_label(origin));
  const std::size_t b = label_index(match_type_label(dest));
  ++rows_[a].events;
  if (b != a) ++rows_[b].events;
}

void MatchTypeBreakdown::merge(const MatchTypeBreakdown& other) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    rows_[i].places += other.rows_[i].places;
    rows_[i].events += other.rows_[i].events;
  }
}

const MatchTypeRow& MatchTypeBreakdown::row(std::string_view label) const {
  return rows_[label_index(label)];
}

std::uint64_t MatchTypeBreakdown::total_places() const noexcept {
  std::uint64_t t = 0;
  for (const auto& r : rows_) t += r.places;
  return t;
}

void MatchTypeBreakdown::write_csv(std::ostream& out) const {
  out << "feature_class,places,events\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    out << kMatchTypeLabels[i] << ',' << rows_[i].places << ',' << rows_[i].events << '\n';
  }
}

MatchTypeBreakdown match_type_breakdown(
    std::span<const MatchResult> place_matches,
    std::span<const std::pair<MatchResult, MatchResult>> event_matches) {
  MatchTypeBreakdown b;
  for (const auto& m : place_matches) b.add_place(m);
  for (const auto& [o, d] : event_matches) b.add_event(o, d);
  return b;
}

template <typename Key>
GeoJsonExport export_geojson(const TravelNetwork<Key>& n,
                             const std::function<std::optional<GeoPoint>(const Key&)>& coords) {
  GeoJsonExport out;
  auto features = nlohmann::ordered_json::array();
  for (const auto& [edge, w] : n.edges()) {
    const auto a = coords(edge.first);
    const auto b = coords(edge.second);
    if (!a || !b) {
      ++out.skipped_edges;
      continue;
    }
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "LineString"},
                     {"coordinates", {{a->lon(), a->lat()}, {b->lon(), b->lat()}}}};
    f["properties"] = {{"origin", edge.first}, {"dest", edge.second}, {"weight", w},
                       {"directed", n.directed()}};
    features.push_back(std::move(f));
  }
  out.collection["type"] = "FeatureCollection";
  out.collection["features"] = std::move(features);
  return out;
}

template GeoJsonExport export_geojson<GeonameId>(
    const CityNetwork&, const std::function<std::optional<GeoPoint>(const GeonameId&)>&);
template GeoJsonExport export_geojson<std::string>(
    const CountryNetwork&, const std::function<std::optional<GeoPoint>(const std::string&)>&);

std::map<std::string, GeoPoint> country_points(const Gazetteer& gazetteer) {
  struct Pick {
    const GazetteerEntry* entry = nullptr;
    bool political = false;
  };
  auto better = [](const GazetteerEntry& a, const GazetteerEntry& b) {
    if (a.population != b.population) return a.population > b.population;
    return a.geoname_id < b.geoname_id;
  };
  std::map<std::string, Pick> picks;
  for (const auto& e : gazetteer.entries()) {
    if (e.country_code.empty()) continue;
    const bool political = e.feature_class == 'A' && e.feature_code.starts_with("PCL");
    if (!political && e.feature_class != 'P') continue;
    Pick& p = picks[e.country_code];
    if (p.entry == nullptr || (political && !p.political) ||
        (political == p.political && better(e, *p.entry))) {
      p = Pick{&e, political};
    }
  }
  std::map<std::string, GeoPoint> out;
  for (const auto& [cc, p] : picks) out.emplace(cc, p.entry->point);
  return out;
}

void write_penetration_csv(std::ostream& out, const PenetrationReport& r, const CountryTable& info) {
  out << "country_code,continent,users,population,penetration,anomaly\n";
  for (const auto& [cc, row] : r.rows) {
    const CountryInfo* ci = info.find(cc);
    out << cc << ',' << (ci ? ci->continent : std::string()) << ',' << row.users << ','
        << row.population << ',' << detail::format_double(row.ratio) << ','
        << (row.anomaly ? "true" : "false") << '\n';
  }
}

void write_top_edges_csv(std::ostream& out, const std::map<std::string, ContinentTopEdge>& top) {
  out << "continent,country_a,country_b,weight\n";
  for (const auto& [continent, e] : top) {
    out << continent << ',' << e.a << ',' << e.b << ',' << e.weight << '\n';
  }
}

void write_top_penetration_csv(std::ostream& out,
                               const std::map<std::string, ContinentTopPenetration>& top) {
  out << "continent,country_code,penetration\n";
  for (const auto& [continent, t] : top) {
    out << continent << ',' << t.country_code << ',' << detail::format_double(t.ratio) << '\n';
  }
}

}  // namespace mobnet
