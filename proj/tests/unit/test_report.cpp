#include <doctest.h>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mobnet/report.hpp"
#include "oracles.hpp"

using namespace mobnet;

namespace {

const char* kCountryInfo =
    "#ISO\tISO3\tISO-Numeric\tfips\tCountry\tCapital\tArea(in sq km)\tPopulation\tContinent\n"
    "US\tUSA\t840\tUS\tUnited States\tWashington\t9629091\t310232863\tNA\n"
    "CA\tCAN\t124\tCA\tCanada\tOttawa\t9984670\t33679000\tNA\n"
    "MX\tMEX\t484\tMX\tMexico\tMexico City\t1972550\t112468855\tNA\n"
    "FR\tFRA\t250\tFR\tFrance\tParis\t547030\t64768389\tEU\n"
    "DE\tDEU\t276\tGM\tGermany\tBerlin\t357021\t81802257\tEU\n"
    "AQ\tATA\t010\tAY\tAntarctica\t\t14000000\t0\tAN\n"
    "XX\tbroken\n"
    "VA\tVAT\t336\tVT\tVatican\tVatican City\t0.44\t921\tEU\n";

CountryTable table() {
  std::istringstream in(kCountryInfo);
  return parse_country_info(in);
}

// Strict structural check of a GeoJSON FeatureCollection of LineStrings.
bool valid_geojson(const nlohmann::ordered_json& j, std::string& why) {
  auto fail = [&](std::string w) {
    why = std::move(w);
    return false;
  };
  if (!j.is_object() || j.value("type", "") != "FeatureCollection") return fail("collection type");
  if (!j.contains("features") || !j["features"].is_array()) return fail("features array");
  for (const auto& f : j["features"]) {
    if (f.value("type", "") != "Feature") return fail("feature type");
    if (!f.contains("geometry") || !f["geometry"].is_object()) return fail("geometry");
    const auto& g = f["geometry"];
    if (g.value("type", "") != "LineString") return fail("geometry type");
    const auto& c = g["coordinates"];
    if (!c.is_array() || c.size() < 2) return fail("coordinates");
    for (const auto& pos : c) {
      if (!pos.is_array() || pos.size() != 2 || !pos[0].is_number() || !pos[1].is_number()) {
        return fail("position");
      }
      const double lon = pos[0];
      const double lat = pos[1];
      if (lon < -180 || lon > 180 || lat < -90 || lat > 90) return fail("position range");
    }
    if (!f.contains("properties") || !f["properties"].is_object()) return fail("properties");
    const auto& p = f["properties"];
    if (!p.contains("origin") || !p.contains("dest")) return fail("endpoints");
    if (!p["weight"].is_number_unsigned() || p["weight"].get<std::uint64_t>() == 0) {
      return fail("weight");
    }
  }
  return true;
}

}  // namespace

TEST_CASE("country info parsing") {
  const CountryTable t = table();
  CHECK(t.countries.size() == 7);
  CHECK(t.skipped_malformed == 1);
  REQUIRE(t.find("US") != nullptr);
  CHECK(t.find("US")->population == 310232863);
  CHECK(t.find("US")->continent == "NA");
  CHECK(t.find("DE")->name == "Germany");
  CHECK(t.find("ZZ") == nullptr);
  CHECK(continent_name("OC") == "Oceania");
}

TEST_CASE("modal country ties go to the earliest") {
  const std::vector<std::string> a = {"FR", "US", "US", "FR", "", ""};
  CHECK(modal_country(a) == "FR");
  const std::vector<std::string> b = {"DE", "US", "US"};
  CHECK(modal_country(b) == "US");
  const std::vector<std::string> none = {"", ""};
  CHECK_FALSE(modal_country(none).has_value());
}

TEST_CASE("penetration rows") {
  const CountryTable t = table();
  const std::map<std::string, std::uint64_t> homes = {
      {"US", 6000}, {"CA", 4999}, {"FR", 5000}, {"AQ", 9000}, {"ZZ", 9000}, {"VA", 5000}};
  const PenetrationReport r = penetration(homes, t, 5000);
  CHECK(r.rows.size() == 3);
  CHECK(r.below_min_users == 1);
  CHECK(r.missing_country_info == 2);
  CHECK(r.rows.at("US").ratio == 6000.0 / 310232863.0);
  CHECK_FALSE(r.rows.at("US").anomaly);
  CHECK(r.rows.at("VA").anomaly);

  const auto top = top_penetration_by_continent(r, t);
  CHECK(top.at("NA").country_code == "US");
  CHECK(top.at("EU").country_code == "VA");

  std::ostringstream out;
  write_penetration_csv(out, r, t);
  CHECK(out.str().starts_with("country_code,continent,users,population,penetration,anomaly\n"));
  CHECK(out.str().find("VA,EU,5000,921,") != std::string::npos);
}

TEST_CASE("top edges per continent equal the brute-force argmax") {
  const CountryTable t = table();
  const std::vector<std::string> codes = {"US", "CA", "MX", "FR", "DE", "VA", "AQ", "ZZ"};
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
  std::uniform_int_distribution<std::uint64_t> weight(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    CountryNetwork directed;
    for (int i = 0; i < 30; ++i) {
      const auto& a = codes[pick(rng)];
      const auto& b = codes[pick(rng)];
      if (a != b) directed.add(a, b, weight(rng));
    }
    const CountryNetwork und = directed.undirected();
    std::vector<std::pair<std::pair<std::string, std::string>, std::uint64_t>> edges(
        und.edges().begin(), und.edges().end());
    std::shuffle(edges.begin(), edges.end(), rng);
    const auto want = oracle::top_edges(edges, t);
    const auto got = top_edges_by_continent(und, t);
    REQUIRE(got.size() == want.size());
    for (const auto& [continent, e] : want) {
      REQUIRE(got.contains(continent));
      CHECK(got.at(continent).a == e.a);
      CHECK(got.at(continent).b == e.b);
      CHECK(got.at(continent).weight == e.weight);
    }
  }
  CHECK_THROWS(top_edges_by_continent(CountryNetwork(true), t));
}

TEST_CASE("log histogram bins and mass") {
  const std::vector<std::uint64_t> v = {0, 0, 1, 2, 3, 4, 7, 8, 1000};
  const Histogram h = log_histogram(v);
  CHECK(h.lower_edges == std::vector<std::uint64_t>{0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512});
  CHECK(h.counts == std::vector<std::uint64_t>{2, 1, 2, 2, 1, 0, 0, 0, 0, 0, 1});
  CHECK(h.total() == v.size());
  CHECK(log_histogram({}).empty());

  std::mt19937_64 rng(79);
  std::geometric_distribution<std::uint64_t> g(0.01);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint64_t> xs(1 + trial * 13);
    for (auto& x : xs) x = g(rng);
    const Histogram hh = log_histogram(xs);
    CHECK(hh.total() == xs.size());
    for (auto x : xs) {
      // Each value lies in exactly one bin [edge_k, edge_{k+1}).
      int hits = 0;
      for (std::size_t k = 0; k < hh.lower_edges.size(); ++k) {
        const std::uint64_t lo = hh.lower_edges[k];
        const std::uint64_t hi = k + 1 < hh.lower_edges.size() ? hh.lower_edges[k + 1] : UINT64_MAX;
        hits += (x >= lo && x < hi) ? 1 : 0;
      }
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("user histograms") {
  const std::vector<UserSummary> users = {{1, 10, 0}, {2, 1, 0}, {3, 500, 40}};
  const UserHistograms h = histograms(users);
  CHECK(h.tweets_per_user.total() == 3);
  CHECK(h.events_per_user.total() == 3);
  const auto j = to_json(h);
  CHECK(j["tweets_per_user"]["users"] == 3);
  CHECK(j["events_per_user"]["counts"][0] == 2);
}

TEST_CASE("match-type breakdown") {
  GazetteerEntry park;
  park.geoname_id = 1;
  park.feature_class = 'L';
  GazetteerEntry town;
  town.geoname_id = 2;
  town.feature_class = 'P';
  GazetteerEntry odd;
  odd.geoname_id = 3;
  odd.feature_class = '\0';
  const MatchResult mp{MatchStatus::kMatchedFullPass, &park, 1.0};
  const MatchResult mt{MatchStatus::kMatchedCityPass, &town, 2.0};
  const MatchResult mo{MatchStatus::kMatchedFullPass, &odd, 3.0};
  const MatchResult none{};

  CHECK(match_type_label(mp) == "L");
  CHECK(match_type_label(mo) == "Other");
  CHECK(match_type_label(none) == "None");

  const std::vector<MatchResult> places = {mp, mt, mt, none, mo};
  const std::vector<std::pair<MatchResult, MatchResult>> events = {{mt, mt}, {mt, mp}, {none, mp}};
  const MatchTypeBreakdown b = match_type_breakdown(places, events);
  CHECK(b.row("P").places == 2);
  CHECK(b.row("P").events == 2);
  CHECK(b.row("L").events == 2);
  CHECK(b.row("None").events == 1);
  CHECK(b.row("Other").places == 1);
  CHECK(b.total_places() == places.size());

  MatchTypeBreakdown by_label;
  for (const auto* l : {"L", "P", "P", "None", "Other"}) by_label.add_place(l);
  for (const auto& [o, d] : events) by_label.add_event(o, d);
  CHECK(by_label == b);
  CHECK_THROWS(by_label.add_place("Q"));

  std::ostringstream out;
  b.write_csv(out);
  CHECK(out.str().starts_with("feature_class,places,events\nA,0,0\nH,0,0\nL,1,2\n"));
}

TEST_CASE("GeoJSON export") {
  CountryNetwork n;
  n.add("US", "CA", 3);
  n.add("CA", "US", 1);
  n.add("US", "ZZ", 2);
  const std::map<std::string, GeoPoint> pts = {{"US", GeoPoint(39.8, -98.6)},
                                               {"CA", GeoPoint(56.1, -106.3)}};
  const auto und = n.undirected();
  const GeoJsonExport g = export_geojson<std::string>(und, [&](const std::string& k) {
    const auto it = pts.find(k);
    return it == pts.end() ? std::nullopt : std::optional<GeoPoint>(it->second);
  });
  std::string why;
  CHECK_MESSAGE(valid_geojson(g.collection, why), why);
  CHECK(g.skipped_edges == 1);
  REQUIRE(g.collection["features"].size() == 1);
  const auto& f = g.collection["features"][0];
  CHECK(f["properties"]["weight"] == 4);
  CHECK(f["properties"]["origin"] == "CA");
  CHECK(f["geometry"]["coordinates"][0][0] == -106.3);
  CHECK(f["geometry"]["coordinates"][0][1] == 56.1);

  // The validator itself rejects broken documents.
  auto broken = g.collection;
  broken["features"][0]["geometry"]["coordinates"][0] = {200.0, 0.0};
  CHECK_FALSE(valid_geojson(broken, why));
  broken = g.collection;
  broken["features"][0]["properties"].erase("weight");
  CHECK_FALSE(valid_geojson(broken, why));
}

TEST_CASE("country points prefer the political entity") {
  auto e = [](GeonameId id, char c, std::string code, std::uint64_t pop, double lat) {
    GazetteerEntry x;
    x.geoname_id = id;
    x.name = "n";
    x.point = GeoPoint(lat, 0);
    x.feature_class = c;
    x.feature_code = std::move(code);
    x.country_code = "FR";
    x.population = pop;
    return x;
  };
  Gazetteer g({e(1, 'P', "PPLC", 2'000'000, 48.8), e(2, 'A', "PCLI", 64'000'000, 46.0),
               e(3, 'P', "PPL", 500'000, 45.7)});
  CHECK(country_points(g).at("FR") == GeoPoint(46.0, 0));
  Gazetteer g2({e(1, 'P', "PPLC", 2'000'000, 48.8), e(3, 'P', "PPL", 500'000, 45.7),
                e(4, 'H', "LK", 0, 10.0)});
  CHECK(country_points(g2).at("FR") == GeoPoint(48.8, 0));
}
