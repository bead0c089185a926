#include "seqdetect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqdetect/errors.hpp"

namespace seqdetect {

std::string_view to_string(EmptyFramePolicy p) { return p == EmptyFramePolicy::Skip ? "skip" : "floor"; }

EmptyFramePolicy parse_empty_frame_policy(std::string_view text) {
    if (text == "skip") return EmptyFramePolicy::Skip;
    if (text == "floor") return EmptyFramePolicy::Floor;
    throw ConfigError("unknown empty-frame policy '" + std::string(text) + "'");
}

void DetectorOptions::validate() const {
    if (!(threshold > 0.0) || std::isnan(threshold)) throw ConfigError("threshold h must be > 0");
    if (n_end < 1) throw ConfigError("n_end must be >= 1");
}

namespace {

double evidence(std::span<const FeatureVector> objects, const KdTree& index, int m, int k, double baseline) {
    if (objects.empty()) throw DataError("anomaly_evidence: frame has no objects");
    double worst = 0.0;
    for (const auto& obj : objects) {
        if (obj.dim() != static_cast<std::size_t>(m)) {
            throw DataError("dimension mismatch: object " + std::to_string(obj.object_id) + " in frame " +
                            std::to_string(obj.frame_id) + " has " + std::to_string(obj.dim()) +
                            " values, model expects " + std::to_string(m));
        }
        worst = std::max(worst, index.kth_distance(obj.values, k));
    }
    return std::pow(worst, m) - baseline;
}

std::vector<EvidencePoint> segment(const std::vector<EvidencePoint>& points, std::uint64_t from, std::uint64_t to) {
    std::vector<EvidencePoint> out;
    for (const auto& p : points) {
        if (p.frame_id >= from && p.frame_id <= to) out.push_back(p);
    }
    return out;
}

}  // namespace

double anomaly_evidence(std::span<const FeatureVector> frame_objects, const DetectorModel& model,
                        const KdTree& index) {
    return evidence(frame_objects, index, model.m, model.k, model.baseline());
}

double anomaly_evidence(std::span<const FeatureVector> frame_objects, const DetectorModel& model) {
    if (frame_objects.empty()) throw DataError("anomaly_evidence: frame has no objects");
    double worst = 0.0;
    for (const auto& obj : frame_objects) {
        if (obj.dim() != static_cast<std::size_t>(model.m)) {
            throw DataError("dimension mismatch: object has " + std::to_string(obj.dim()) +
                            " values, model expects " + std::to_string(model.m));
        }
        worst = std::max(worst, knn_distance(obj.values, model.reference_points, model.k));
    }
    return std::pow(worst, model.m) - model.baseline();
}

double update_statistic(double s_prev, double delta) {
    if (!std::isfinite(delta)) throw DataError("update_statistic: non-finite evidence");
    return std::max(s_prev + delta, 0.0);
}

StepOutcome advance(DetectorState& state, std::uint64_t frame_id, std::optional<double> delta,
                    const DetectorOptions& options) {
    if (state.last_frame && frame_id <= *state.last_frame) {
        throw DataError("frames out of order: " + std::to_string(frame_id) + " after " +
                        std::to_string(*state.last_frame));
    }
    state.last_frame = frame_id;

    StepOutcome out;
    out.record.frame_id = frame_id;
    out.record.delta = delta;
    if (!delta) {
        out.record.s = state.s;
        out.record.alarm = state.in_alarm;
        return out;
    }

    const double s_prev = state.s;
    state.s = update_statistic(s_prev, *delta);

    if (!state.in_alarm) {
        if (state.s == 0.0) {
            state.last_zero_frame = frame_id;
            state.since_zero.clear();
        }
        state.since_zero.push_back({frame_id, *delta});
        if (state.s >= options.threshold) {
            state.in_alarm = true;
            // Without an observed zero the statistic has grown since the first
            // frame with evidence.
            state.tau_start = state.last_zero_frame.value_or(state.since_zero.front().frame_id);
            state.peak_s = state.s;
            state.peak_frame = frame_id;
            state.decrease_run = 0;
        }
        out.record.s = state.s;
        out.record.alarm = state.in_alarm;
        return out;
    }

    state.since_zero.push_back({frame_id, *delta});
    state.peak_s = std::max(state.peak_s, state.s);
    if (state.s < s_prev) {
        ++state.decrease_run;
    } else {
        state.decrease_run = 0;
        state.peak_frame = frame_id;
    }
    out.record.alarm = true;

    if (state.decrease_run >= options.n_end || state.s == 0.0) {
        AnomalyEvent event;
        event.tau_start = state.tau_start;
        event.tau_end = state.peak_frame;
        event.peak_statistic = state.peak_s;
        event.evidence_trace = segment(state.since_zero, event.tau_start, event.tau_end);
        out.event = std::move(event);

        // Every frame after tau_end lowered the statistic, so restarting from
        // zero at tau_end leaves it at zero now.
        state.s = 0.0;
        state.in_alarm = false;
        state.decrease_run = 0;
        state.peak_s = 0.0;
        state.last_zero_frame = frame_id;
        state.since_zero.assign(1, {frame_id, *delta});
    }
    out.record.s = state.s;
    return out;
}

std::optional<AnomalyEvent> finish(const DetectorState& state) {
    if (!state.in_alarm || !state.last_frame) return std::nullopt;
    AnomalyEvent event;
    event.tau_start = state.tau_start;
    event.tau_end = *state.last_frame;
    event.peak_statistic = state.peak_s;
    event.truncated = true;
    event.evidence_trace = segment(state.since_zero, event.tau_start, event.tau_end);
    return event;
}

Detector::Detector(const DetectorModel& model, DetectorOptions options)
    : Detector(model, std::make_shared<const KdTree>(model.reference_points), options) {}

Detector::Detector(const DetectorModel& model, std::shared_ptr<const KdTree> index, DetectorOptions options)
    : m_(model.m), k_(model.k), baseline_(model.baseline()), index_(std::move(index)), options_(options) {
    model.validate();
    options_.validate();
    if (!index_ || index_->dim() != static_cast<std::size_t>(model.m)) {
        throw ConfigError("detector: index does not match the model dimension");
    }
}

StepOutcome Detector::step(std::uint64_t frame_id, std::span<const FeatureVector> frame_objects) {
    std::optional<double> delta;
    if (!frame_objects.empty()) {
        delta = evidence(frame_objects, *index_, m_, k_, baseline_);
    } else if (options_.empty_frame_policy == EmptyFramePolicy::Floor) {
        delta = -baseline_;
    }
    return advance(state_, frame_id, delta, options_);
}

OfflineResult run_offline(std::span<const Frame> frames, const DetectorModel& model,
                          const DetectorOptions& options) {
    OfflineResult result;
    if (frames.empty()) return result;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].frame_id <= frames[i - 1].frame_id) {
            throw DataError("frames out of order at position " + std::to_string(i) + ": frame " +
                            std::to_string(frames[i].frame_id) + " after " +
                            std::to_string(frames[i - 1].frame_id));
        }
    }
    Detector detector(model, options);
    result.trace.reserve(frames.size());
    for (const auto& frame : frames) {
        auto outcome = detector.step(frame.frame_id, frame.objects);
        result.trace.push_back(outcome.record);
        if (outcome.event) result.events.push_back(std::move(*outcome.event));
    }
    if (auto tail = detector.finish()) result.events.push_back(std::move(*tail));
    return result;
}

}  // namespace seqdetect
