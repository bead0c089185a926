#include "seqdetect/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqdetect/errors.hpp"

namespace seqdetect {

namespace {

using Json = nlohmann::ordered_json;
constexpr std::string_view kFormatTag = "seqdetect-model";

const Json& field(const Json& doc, const char* name) {
    const auto it = doc.find(name);
    if (it == doc.end()) throw ValidationError(std::string("model: missing field '") + name + "'");
    return *it;
}

template <typename T>
T get_as(const Json& doc, const char* name) {
    const Json& value = field(doc, name);
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("model: field '") + name + "' has the wrong type");
    }
}

}  // namespace

std::string save_model(const DetectorModel& model) {
    Json doc;
    doc["format"] = kFormatTag;
    doc["version"] = kModelFormatVersion;
    doc["m"] = model.m;
    doc["k"] = model.k;
    doc["alpha"] = model.alpha;
    doc["d_alpha"] = model.d_alpha;
    doc["phi"] = model.phi;
    doc["phi_convention"] = to_string(model.phi_convention);
    doc["m1_count"] = model.m1_count;
    doc["partition_seed"] = model.partition_seed;
    Json points = Json::array();
    for (std::size_t i = 0; i < model.reference_points.size(); ++i) {
        const auto p = model.reference_points[i];
        points.push_back(Json(std::vector<double>(p.begin(), p.end())));
    }
    doc["reference_points"] = std::move(points);
    return doc.dump() + "\n";
}

void save_model_file(const DetectorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << save_model(model);
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

DetectorModel load_model(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model: malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw ValidationError("model: top level must be an object");
    if (get_as<std::string>(doc, "format") != kFormatTag) {
        throw ValidationError("model: not a seqdetect model document");
    }
    const int version = get_as<int>(doc, "version");
    if (version != kModelFormatVersion) {
        throw VersionError("model: unsupported format version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    }

    DetectorModel model;
    model.m = get_as<int>(doc, "m");
    model.k = get_as<int>(doc, "k");
    model.alpha = get_as<double>(doc, "alpha");
    model.d_alpha = get_as<double>(doc, "d_alpha");
    model.phi = get_as<double>(doc, "phi");
    model.m1_count = get_as<std::uint64_t>(doc, "m1_count");
    model.partition_seed = get_as<std::uint64_t>(doc, "partition_seed");
    if (doc.contains("phi_convention")) {
        try {
            model.phi_convention = parse_phi_convention(get_as<std::string>(doc, "phi_convention"));
        } catch (const ConfigError& e) {
            throw ValidationError(std::string("model: ") + e.what());
        }
    }
    if (model.m < 1) throw ValidationError("model: m must be >= 1, got " + std::to_string(model.m));

    const Json& points = field(doc, "reference_points");
    if (!points.is_array()) throw ValidationError("model: reference_points must be an array");
    model.reference_points = PointSet(static_cast<std::size_t>(model.m));
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<double> row;
        try {
            row = points[i].get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("model: reference point " + std::to_string(i) + " is not a numeric array");
        }
        if (row.size() != static_cast<std::size_t>(model.m)) {
            throw ValidationError("model: reference point " + std::to_string(i) + " has dimension " +
                                  std::to_string(row.size()) + ", expected " + std::to_string(model.m));
        }
        model.reference_points.push_back(row);
    }
    model.validate();
    return model;
}

DetectorModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_model(buffer.str());
}

}  // namespace seqdetect
