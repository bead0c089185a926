#include "seqdetect/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "seqdetect/calibration.hpp"
#include "seqdetect/detector.hpp"
#include "seqdetect/errors.hpp"
#include "seqdetect/feature_io.hpp"
#include "seqdetect/model_io.hpp"
#include "seqdetect/simkit.hpp"
#include "seqdetect/specfun.hpp"

namespace seqdetect::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Raised for bad flag values discovered after parsing.
class UsageError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::string command;
    std::string input;
    std::string model;
    std::string output;
    std::string calibration;
    std::string trace;
    int k = 1;
    double alpha = 0.05;
    double fraction = 0.5;
    FeatureWeights weights;
    double far = 0.01;
    std::optional<double> threshold;
    int n_end = 5;
    std::string empty_frame_policy = "skip";
    std::string phi_convention = "power_minus";
    std::optional<std::uint64_t> seed;
    bool force = false;

    // simulate
    int dim = 2;
    double d_alpha = 1e-3;
    double phi = 2.0;
    std::size_t runs = 10000;
    std::vector<double> periods{100.0, 1000.0};
    std::size_t max_steps = 0;
    bool truncate_at_phi = true;
};

Json echo(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["input"] = c.input;
    j["model"] = c.model;
    j["output"] = c.output;
    j["calibration"] = c.calibration;
    j["trace"] = c.trace;
    j["k"] = c.k;
    j["alpha"] = c.alpha;
    j["fraction"] = c.fraction;
    j["w_motion"] = c.weights.motion;
    j["w_location"] = c.weights.location;
    j["w_appearance"] = c.weights.appearance;
    j["far"] = c.far;
    j["threshold"] = c.threshold ? Json(*c.threshold) : Json(nullptr);
    j["n_end"] = c.n_end;
    j["empty_frame_policy"] = c.empty_frame_policy;
    j["phi_convention"] = c.phi_convention;
    j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    if (c.command == "simulate") {
        j["dim"] = c.dim;
        j["d_alpha"] = c.d_alpha;
        j["phi"] = c.phi;
        j["runs"] = c.runs;
        j["periods"] = c.periods;
        j["max_steps"] = c.max_steps;
        j["truncate_at_phi"] = c.truncate_at_phi;
    }
    return j;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw InternalError("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void check_writable(const std::string& path, bool force) {
    if (!path.empty() && fs::exists(path) && !force) {
        throw UsageError("refusing to overwrite '" + path + "' (pass --force)");
    }
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty()) {
        out << content;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot open '" + path + "' for writing");
    file << content;
    if (!file) throw DataError("failed writing '" + path + "'");
}

Json provenance(const RunConfig& c, const std::string& model_hash) {
    Json p;
    p["tool"] = "seqdetect";
    p["config"] = echo(c);
    p["model_sha256"] = model_hash;
    return p;
}

std::uint64_t require_seed(const RunConfig& c) {
    if (!c.seed) throw UsageError(c.command + " requires --seed");
    return *c.seed;
}

void require_path(const std::string& value, const char* flag, const std::string& command) {
    if (value.empty()) throw UsageError(command + " requires " + flag);
}

int cmd_train(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    require_path(c.input, "--input", c.command);
    require_path(c.model, "--model", c.command);
    TrainOptions options;
    options.k = c.k;
    options.alpha = c.alpha;
    options.partition_fraction = c.fraction;
    options.partition_seed = require_seed(c);
    options.phi_convention = parse_phi_convention(c.phi_convention);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    if (!(c.fraction > 0.0 && c.fraction < 1.0)) throw UsageError("--fraction must lie in (0, 1)");
    if (c.k < 1) throw UsageError("--k must be >= 1");
    check_writable(c.model, c.force);
    check_writable(c.output, c.force);

    const FeatureTable table = read_feature_csv_file(c.input, c.weights);
    const auto dataset = table.flatten();
    if (dataset.empty()) throw TrainingError("empty dataset");

    const DetectorModel model = train(dataset, options);
    const std::string text = save_model(model);
    emit(c.model, text, out);
    log.info("trained on {} vectors: M1 = {}, M2 = {}, d_alpha = {}, phi = {}", dataset.size(), model.m1_count,
             model.m2_count(), model.d_alpha, model.phi);

    Json summary;
    summary["M"] = dataset.size();
    summary["M1"] = model.m1_count;
    summary["M2"] = model.m2_count();
    summary["m"] = model.m;
    summary["k"] = model.k;
    summary["alpha"] = model.alpha;
    summary["d_alpha"] = model.d_alpha;
    summary["phi"] = model.phi;
    summary["phi_convention"] = to_string(model.phi_convention);
    summary["provenance"] = provenance(c, sha256_hex(text));
    emit(c.output, summary.dump(2) + "\n", out);
    return kOk;
}

Json calibration_json(const Calibration& cal) {
    Json j;
    j["m"] = cal.m;
    j["v_m"] = cal.v_m;
    j["d_alpha"] = cal.d_alpha;
    j["phi"] = cal.phi;
    j["theta"] = cal.theta;
    j["omega0"] = cal.omega0;
    j["omega0_exact"] = cal.omega0_exact ? Json(*cal.omega0_exact) : Json(nullptr);
    j["target_far"] = cal.target_far;
    j["h"] = cal.h;
    j["far_bound"] = cal.far_bound;
    j["warnings"] = cal.warnings;
    return j;
}

int cmd_calibrate(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    require_path(c.model, "--model", c.command);
    if (!(c.far > 0.0 && c.far < 1.0)) throw UsageError("--far must lie in (0, 1)");
    check_writable(c.output, c.force);

    const std::string text = read_file(c.model, "model file");
    const DetectorModel model = load_model(text);
    const Calibration cal = calibrate(model, c.far);
    for (const auto& w : cal.warnings) log.warn("{}", w);
    log.info("omega0 = {}, h = {} for target FAR {}", cal.omega0, cal.h, cal.target_far);

    Json doc = calibration_json(cal);
    Json prov = provenance(c, sha256_hex(text));
    prov["phi_convention"] = to_string(model.phi_convention);
    doc["provenance"] = std::move(prov);
    emit(c.output, doc.dump(2) + "\n", out);
    return kOk;
}

int cmd_detect(RunConfig c, std::ostream& out, spdlog::logger& log) {
    require_path(c.model, "--model", c.command);
    require_path(c.input, "--input", c.command);
    if (c.n_end < 1) throw UsageError("--n-end must be >= 1");
    check_writable(c.output, c.force);
    check_writable(c.trace, c.force);

    const std::string model_text = read_file(c.model, "model file");
    const DetectorModel model = load_model(model_text);

    std::string threshold_source;
    double h = 0.0;
    if (c.threshold) {
        h = *c.threshold;
        threshold_source = "flag";
    } else if (!c.calibration.empty()) {
        const std::string text = read_file(c.calibration, "calibration file");
        Json cal;
        try {
            cal = Json::parse(text);
            h = cal.at("h").get<double>();
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("calibration: ") + e.what(), e.byte);
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("calibration: missing numeric field 'h'");
        }
        threshold_source = "calibration:" + sha256_hex(text);
    } else {
        if (!(c.far > 0.0 && c.far < 1.0)) throw UsageError("--far must lie in (0, 1)");
        h = calibrate(model, c.far).h;
        threshold_source = "far";
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("threshold h must be positive");

    DetectorOptions options;
    options.threshold = h;
    options.n_end = c.n_end;
    options.empty_frame_policy = parse_empty_frame_policy(c.empty_frame_policy);

    const FeatureTable table = read_feature_csv_file(c.input, c.weights);
    if (table.dim != 0 && table.dim != static_cast<std::size_t>(model.m)) {
        throw DataError("stream has " + std::to_string(table.dim) + " features per object, model expects " +
                        std::to_string(model.m));
    }
    const OfflineResult result = run_offline(table.frames, model, options);
    log.info("{} frames, {} events at h = {}", table.frames.size(), result.events.size(), h);

    Json header;
    Json prov = provenance(c, sha256_hex(model_text));
    prov["threshold"] = h;
    prov["threshold_source"] = threshold_source;
    header["provenance"] = std::move(prov);
    std::string events = header.dump() + "\n";
    for (const auto& e : result.events) {
        Json rec;
        rec["tau_start"] = e.tau_start;
        rec["tau_end"] = e.tau_end;
        rec["peak_statistic"] = e.peak_statistic;
        rec["truncated"] = e.truncated;
        events += rec.dump() + "\n";
    }
    emit(c.output, events, out);

    if (!c.trace.empty()) {
        std::string csv = "frame_id,delta,s,alarm\n";
        for (const auto& r : result.trace) {
            csv += fmt::format("{},{},{},{}\n", r.frame_id, r.delta ? fmt::format("{}", *r.delta) : std::string(),
                               r.s, r.alarm ? 1 : 0);
        }
        emit(c.trace, csv, out);
    }
    return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    const std::uint64_t seed = require_seed(c);
    if (c.dim < 1) throw UsageError("--dim must be >= 1");
    if (!(c.d_alpha >= 0.0)) throw UsageError("--d-alpha must be >= 0");
    if (!(c.phi > 0.0)) throw UsageError("--phi must be > 0");
    if (c.runs < 1) throw UsageError("--runs must be >= 1");
    if (c.periods.empty()) throw UsageError("--periods must list at least one period");
    for (double p : c.periods) {
        if (!(p > 1.0)) throw UsageError("--periods entries must exceed 1");
    }
    check_writable(c.output, c.force);

    const double v_m = specfun::volume_constant(c.dim);
    const double th = theta(v_m, c.d_alpha, c.dim);
    const double omega0 = omega0_lambert(v_m, th, c.phi);

    std::vector<sim::SimulationRow> rows;
    for (std::size_t i = 0; i < c.periods.size(); ++i) {
        sim::SimConfig cfg;
        cfg.m = c.dim;
        cfg.n_samples = c.runs;
        cfg.seed = seed + i * c.runs;
        cfg.omega0 = omega0;
        cfg.h = std::log(c.periods[i]) / omega0;
        cfg.max_steps = c.max_steps;
        const auto est = sim::estimate_false_alarm_period(
            cfg, c.d_alpha, c.truncate_at_phi ? std::optional<double>(c.phi) : std::nullopt);
        log.info("bound period {}: mean {} +- {} ({} censored)", est.bound_period, est.mean_period,
                 est.std_error, est.censored);
        rows.push_back({cfg.h, omega0, est});
    }

    std::ostringstream csv;
    csv << "# provenance: " << provenance(c, "").dump() << "\n";
    sim::write_simulation_report(csv, rows);
    emit(c.output, csv.str(), out);
    return kOk;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("seqdetect", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::info);
    if (const char* env = std::getenv("SEQDETECT_LOG")) {
        logger->set_level(spdlog::level::from_str(env));
    }
    return logger;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto log = make_logger(err);
    RunConfig c;

    CLI::App app{"Sequential kNN anomaly detection with analytic false alarm calibration", "seqdetect"};
    app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
    app.require_subcommand(1);
    app.add_option("--input", c.input, "Feature CSV");
    app.add_option("--model", c.model, "Model file (written by train, read otherwise)");
    app.add_option("--output", c.output, "Output file (stdout when omitted)");
    app.add_option("--calibration", c.calibration, "Calibration JSON providing h (detect)");
    app.add_option("--trace", c.trace, "Per-frame trace CSV (detect)");
    app.add_option("--k", c.k, "Neighbour order")->capture_default_str();
    app.add_option("--alpha", c.alpha, "Significance level")->capture_default_str();
    app.add_option("--fraction", c.fraction, "Share of the data used for the percentile")->capture_default_str();
    app.add_option("--w-motion", c.weights.motion, "Weight of the motion feature")->capture_default_str();
    app.add_option("--w-location", c.weights.location, "Weight of the location features")->capture_default_str();
    app.add_option("--w-appearance", c.weights.appearance, "Weight of the class probabilities")->capture_default_str();
    app.add_option("--far", c.far, "Target false alarm rate per frame")->capture_default_str();
    app.add_option("--threshold", c.threshold, "Explicit decision threshold h (detect)");
    app.add_option("--n-end", c.n_end, "Consecutive decreasing frames that close an event")->capture_default_str();
    app.add_option("--seed", c.seed, "Random seed");
    app.add_option("--empty-frame-policy", c.empty_frame_policy, "skip or floor")
        ->check(CLI::IsMember({"skip", "floor"}))
        ->capture_default_str();
    app.add_option("--phi-convention", c.phi_convention, "power_minus or raw_distance")
        ->check(CLI::IsMember({"power_minus", "raw_distance"}))
        ->capture_default_str();
    app.add_flag("--force", c.force, "Overwrite existing outputs");
    app.add_option("--dim", c.dim, "Dimension m (simulate)")->capture_default_str();
    app.add_option("--d-alpha", c.d_alpha, "Baseline distance d_alpha (simulate)")->capture_default_str();
    app.add_option("--phi", c.phi, "Evidence bound phi (simulate)")->capture_default_str();
    app.add_option("--runs", c.runs, "Monte Carlo runs per row (simulate)")->capture_default_str();
    app.add_option("--periods", c.periods, "Target bound periods exp(omega0 h) (simulate)")->delimiter(',');
    app.add_option("--max-steps", c.max_steps, "Run horizon; 0 = 100 * bound period (simulate)")
        ->capture_default_str();
    app.add_option("--truncate-at-phi", c.truncate_at_phi, "Reject evidence above phi (simulate)")
        ->capture_default_str();

    app.add_subcommand("train", "Fit a model from nominal feature vectors")->fallthrough();
    app.add_subcommand("calibrate", "Threshold h for a target false alarm rate")->fallthrough();
    app.add_subcommand("detect", "Run the detector over a feature stream")->fallthrough();
    app.add_subcommand("simulate", "Monte Carlo check of the false alarm bound")->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        if (c.command == "train") return cmd_train(c, out, *log);
        if (c.command == "calibrate") return cmd_calibrate(c, out, *log);
        if (c.command == "detect") return cmd_detect(c, out, *log);
        return cmd_simulate(c, out, *log);
    } catch (const UsageError& e) {
        log->error("{}", e.what());
        return kUsage;
    } catch (const ConfigError& e) {
        log->error("{}", e.what());
        return kUsage;
    } catch (const DomainError& e) {
        log->error("{}", e.what());
        return kUsage;
    } catch (const DataError& e) {
        log->error("{}", e.what());
        return kData;
    } catch (const DegenerateError& e) {
        log->error("{}", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        log->critical("internal error: {}", e.what());
        return kNumeric;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace seqdetect::cli
