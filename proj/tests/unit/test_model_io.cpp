#include <doctest.h>

#include <random>
#include <string>

#include "seqdetect/errors.hpp"
#include "seqdetect/model_io.hpp"

using namespace seqdetect;

namespace {

DetectorModel trained_model() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureVector> data(200);
    for (auto& fv : data) fv.values = {u(rng), u(rng) * 1e-7, u(rng) * 3.0};
    TrainOptions opt;
    opt.k = 2;
    opt.alpha = 0.05;
    opt.partition_seed = 0xFFFFFFFFFFFFFFF1ULL;  // exercises the full 64-bit range
    return train(data, opt);
}

}  // namespace

TEST_CASE("model round trip reproduces every field") {
    const auto model = trained_model();
    const std::string text = save_model(model);
    const auto loaded = load_model(text);
    CHECK(loaded == model);
    CHECK(loaded.partition_seed == 0xFFFFFFFFFFFFFFF1ULL);
    CHECK(save_model(loaded) == text);
}

TEST_CASE("truncated model is a parse error with a byte offset") {
    const std::string text = save_model(trained_model());
    const std::string cut = text.substr(0, text.size() / 2);
    try {
        (void)load_model(cut);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.unit() == ParseError::Unit::Byte);
        CHECK(e.offset() > 0);
        CHECK(e.offset() <= cut.size() + 1);
    }
    CHECK_THROWS_AS(load_model(""), ParseError);
    CHECK_THROWS_AS(load_model("{\"format\": "), ParseError);
}

TEST_CASE("schema and invariant violations") {
    const std::string good = save_model(trained_model());
    auto replace = [&](const std::string& from, const std::string& to) {
        std::string s = good;
        const auto pos = s.find(from);
        REQUIRE(pos != std::string::npos);
        s.replace(pos, from.size(), to);
        return s;
    };
    CHECK_THROWS_AS(load_model(replace("\"version\":1", "\"version\":2")), VersionError);
    CHECK_THROWS_WITH_AS(load_model(replace("\"m\":3", "\"m\":0")), doctest::Contains("m must be >= 1"),
                         ValidationError);
    CHECK_THROWS_AS(load_model(replace("\"k\":2", "\"k\":5000")), ValidationError);
    CHECK_THROWS_AS(load_model(replace("\"k\":2", "\"kk\":2")), ValidationError);
    CHECK_THROWS_AS(load_model(replace("\"alpha\":0.05", "\"alpha\":1.5")), ValidationError);
    CHECK_THROWS_AS(load_model(replace("\"format\":\"seqdetect-model\"", "\"format\":\"other\"")), ValidationError);
    CHECK_THROWS_AS(load_model(replace("\"phi_convention\":\"power_minus\"", "\"phi_convention\":\"cubic\"")),
                    ValidationError);
    CHECK_THROWS_AS(load_model("[1,2,3]"), ValidationError);
}

TEST_CASE("reference rows with the wrong dimension are rejected") {
    const std::string doc = R"({"format":"seqdetect-model","version":1,"m":2,"k":1,"alpha":0.05,)"
                            R"("d_alpha":0.1,"phi":0.5,"m1_count":10,"partition_seed":1,)"
                            R"("reference_points":[[0.1,0.2],[0.3]]})";
    CHECK_THROWS_AS(load_model(doc), ValidationError);
}
