#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "cuescope/documents.hpp"
#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"
#include "cuescope/pipeline.hpp"
#include "cuescope/report.hpp"
#include "cuescope/synth.hpp"

using namespace cuescope;

namespace {

struct Documents {
  std::string manifest;
  std::string frames;
};

Documents synthetic_documents(std::uint64_t seed, double duration = 60.0) {
  const ModalityLayout layout({{"face", 6}, {"head", 3}, {"gaze", 2}}, 30.0);
  const std::vector<AnomalySpec> specs = {{30.0, 45.0, "head", AnomalyKind::mean_shift, 4.0}};
  const auto s = generate_stream(layout, duration, seed, specs, "doc");
  return {render_manifest(layout, "doc-session"), serialize_frames(s.stream)};
}

}  // namespace

TEST_CASE("pipeline config: partial documents keep defaults") {
  const auto o = parse_pipeline_config(R"({"window_s": 10, "gmm": {"k": 2, "covariance": "full"}})");
  CHECK(o.scoring.window_s == 10.0);
  CHECK(o.scoring.gmm.k == 2);
  CHECK(o.scoring.gmm.covariance == CovarianceType::full);
  CHECK(o.scoring.gmm.discount_r == GmmConfig{}.discount_r);
  CHECK(o.impute == ImputePolicy{});
  CHECK(o.norm == NormOptions{});
  CHECK(parse_pipeline_config("{}") == PipelineOptions{});
}

TEST_CASE("pipeline config: every field") {
  const auto o = parse_pipeline_config(R"({
    "window_s": 12.5, "aggregation": "max", "attribution": "raw", "min_coverage": 0.25,
    "gmm": {"k": 4, "discount_r": 0.01, "schedule": "inverse_time", "covariance": "diagonal",
            "reg_eps": 1e-5, "smoothing_alpha": 0.02, "seed": 77, "init_frames": 100},
    "impute": {"confidence_threshold": 0.3, "max_gap_s": 2.0},
    "normalize": {"mode": "streaming", "std_floor": 1e-4, "streaming_rate": 0.01}})");
  CHECK(o.scoring.aggregation == Aggregation::max);
  CHECK(o.scoring.attribution == AttributionMode::raw);
  CHECK(o.scoring.min_coverage == 0.25);
  CHECK(o.scoring.gmm.schedule == DiscountSchedule::inverse_time);
  CHECK(o.scoring.gmm.seed == 77);
  CHECK(o.scoring.gmm.init_frames == 100);
  CHECK(o.impute.confidence_threshold == 0.3);
  CHECK(o.norm.mode == NormMode::streaming);
  CHECK(o.norm.streaming_rate == 0.01);
  CHECK(parse_pipeline_config(render_pipeline_config(o)) == o);
}

TEST_CASE("pipeline config: errors") {
  const auto kind_of = [](std::string_view doc) {
    try {
      parse_pipeline_config(doc);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;  // sentinel: no error raised
  };
  CHECK(kind_of("{") == ErrorKind::schema);
  CHECK(kind_of("[1]") == ErrorKind::schema);
  CHECK(kind_of(R"({"window_s": "long"})") == ErrorKind::schema);
  CHECK(kind_of(R"({"aggregation": "median"})") == ErrorKind::parameter);
  CHECK(kind_of(R"({"normalize": {"mode": "robust"}})") == ErrorKind::parameter);
  CHECK(kind_of(R"({"gmm": {"k": 0}})") != ErrorKind::io);
  CHECK(kind_of(R"({"gmm": {"discount_r": 1.5}})") != ErrorKind::io);
}

TEST_CASE("property: rendered configs parse back unchanged") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    PipelineOptions o;
    o.scoring.window_s = 1.0 + 30.0 * u(rng);
    o.scoring.min_coverage = u(rng);
    o.scoring.aggregation = trial % 2 ? Aggregation::max : Aggregation::mean;
    o.scoring.gmm.k = 1 + static_cast<std::size_t>(trial % 5);
    o.scoring.gmm.discount_r = 1e-5 + 0.5 * u(rng);
    o.scoring.gmm.reg_eps = 1e-8 + u(rng) * 1e-3;
    o.scoring.gmm.smoothing_alpha = u(rng) * 0.1;
    o.scoring.gmm.seed = rng();
    o.impute.max_gap_s = 5.0 * u(rng);
    o.norm.std_floor = 1e-9 + u(rng);
    CHECK(parse_pipeline_config(render_pipeline_config(o)) == o);
  }
}

TEST_CASE("analyze_documents: session id falls back to the manifest") {
  const auto d = synthetic_documents(1);
  CHECK(analyze_documents(d.manifest, d.frames, "", {}).series.session_id == "doc-session");
  CHECK(analyze_documents(d.manifest, d.frames, "given", {}).series.session_id == "given");
}

TEST_CASE("analyze_documents: identical inputs give byte-identical reports") {
  const auto d = synthetic_documents(2);
  PipelineOptions o;
  o.scoring.gmm.seed = 5;
  const auto a = render_report(select_top_k(analyze_documents(d.manifest, d.frames, "", o).series, 3));
  const auto b = render_report(select_top_k(analyze_documents(d.manifest, d.frames, "", o).series, 3));
  CHECK(a == b);
  const auto top = nlohmann::json::parse(a)["scenes"][0];
  CHECK(top["start_s"] == 30.0);
  CHECK(top["top_modality"] == "head");
}

TEST_CASE("analyze_documents propagates ingest errors") {
  const auto d = synthetic_documents(3);
  CHECK_THROWS_AS(analyze_documents(d.manifest, R"({"i": 0, "x": [1]})", "", {}), Error);
  CHECK_THROWS_AS(analyze_documents("{}", d.frames, "", {}), Error);
}

TEST_CASE("series snapshot round-trips exactly") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto o = PipelineOptions{};
    o.scoring.gmm.seed = seed;
    const auto d = synthetic_documents(seed);
    const auto series = analyze_documents(d.manifest, d.frames, "", o).series;
    const auto back = parse_series_snapshot(render_series_snapshot(series));
    CHECK(back == series);
    CHECK(render_report(select_top_k(back, 3)) == render_report(select_top_k(series, 3)));
  }
  CHECK_THROWS_AS(parse_series_snapshot("{}"), Error);
}

TEST_CASE("series document") {
  const auto d = synthetic_documents(4);
  const auto series = analyze_documents(d.manifest, d.frames, "", {}).series;
  const auto text = render_series(series);
  const auto doc = nlohmann::ordered_json::parse(text);
  REQUIRE(doc["windows"].size() == 4);
  CHECK(doc["windows"][0]["unscored"] == true);
  CHECK(doc["windows"][0]["outlierness"].is_null());
  CHECK(doc["windows"][0]["representative_frame"].is_null());
  CHECK(doc["windows"][1]["outlierness"].is_number());
  CHECK(doc["modalities"][2]["name"] == "gaze");
  CHECK(doc["generator"] == kGeneratorVersion);
  CHECK(doc["windows"][3]["importances"].size() == 3);
  CHECK(text.find("\"duration_s\": 60.000000") != std::string::npos);
}

TEST_CASE("json writer formatting") {
  CHECK(format_fixed(1.0, 6) == "1.000000");
  CHECK(format_fixed(-0.0000001, 6) == "0.000000");
  CHECK(format_fixed(-2.5, 1) == "-2.5");
  CHECK(format_fixed(0.05, 1) == "0.1");
  CHECK(format_shortest(0.1) == "0.1");
  CHECK(format_shortest(1e300) == "1e+300");

  JsonWriter w;
  w.begin_object();
  w.key("s").value("quote \" backslash \\ newline \n tab \t");
  w.key("n").fixed(std::numeric_limits<double>::quiet_NaN());
  w.key("i").value(static_cast<long long>(-4));
  w.key("e").begin_array().end_array();
  w.key("o").begin_object().end_object();
  w.end_object();
  const auto doc = nlohmann::json::parse(w.str());
  CHECK(doc["s"] == "quote \" backslash \\ newline \n tab \t");
  CHECK(doc["n"].is_null());
  CHECK(doc["i"] == -4);
  CHECK(w.str() == "{\n  \"s\": \"quote \\\" backslash \\\\ newline \\n tab \\t\",\n  \"n\": null,\n  \"i\": -4,\n  \"e\": [],\n  \"o\": {}\n}\n");
}

TEST_CASE("property: shortest form parses back to the same double through the JSON reader") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    const auto b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(nlohmann::json::parse(format_shortest(v)).get<double>() == v);
  }
}
