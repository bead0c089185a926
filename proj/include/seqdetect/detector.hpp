#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "seqdetect/feature_io.hpp"
#include "seqdetect/kdtree.hpp"
#include "seqdetect/knn_model.hpp"

namespace seqdetect {

/// What a frame without detected objects contributes.
enum class EmptyFramePolicy {
    Skip,   // no evidence: statistic unchanged, frame never becomes tau_start
    Floor,  // evidence -d_alpha^m, the smallest value a real object can produce
};

std::string_view to_string(EmptyFramePolicy p);
EmptyFramePolicy parse_empty_frame_policy(std::string_view text);

struct DetectorOptions {
    double threshold = 0.0;  // h
    int n_end = 5;           // consecutive strict decreases that close an event
    EmptyFramePolicy empty_frame_policy = EmptyFramePolicy::Skip;

    void validate() const;
};

struct EvidencePoint {
    std::uint64_t frame_id = 0;
    double delta = 0.0;

    bool operator==(const EvidencePoint&) const = default;
};

/// A labelled anomalous segment [tau_start, tau_end] (inclusive).
struct AnomalyEvent {
    std::uint64_t tau_start = 0;
    std::uint64_t tau_end = 0;
    double peak_statistic = 0.0;
    bool truncated = false;  // stream ended while the alarm was still open
    std::vector<EvidencePoint> evidence_trace;

    bool operator==(const AnomalyEvent&) const = default;
};

struct DetectorState {
    double s = 0.0;
    std::optional<std::uint64_t> last_zero_frame;
    int decrease_run = 0;
    double peak_s = 0.0;             // largest statistic since the alarm
    std::uint64_t peak_frame = 0;    // last frame before the current decline
    bool in_alarm = false;
    std::uint64_t tau_start = 0;     // frozen when the alarm is raised
    std::optional<std::uint64_t> last_frame;
    std::vector<EvidencePoint> since_zero;  // evidence from last_zero_frame onwards

    bool operator==(const DetectorState&) const = default;
};

/// One row of the per-frame trace. `delta` is empty for skipped frames.
struct FrameRecord {
    std::uint64_t frame_id = 0;
    std::optional<double> delta;
    double s = 0.0;
    bool alarm = false;

    bool operator==(const FrameRecord&) const = default;
};

struct StepOutcome {
    FrameRecord record;
    std::optional<AnomalyEvent> event;
};

/// (max_i knn_distance(F_i))^m - d_alpha^m over the objects of one frame.
double anomaly_evidence(std::span<const FeatureVector> frame_objects, const DetectorModel& model,
                        const KdTree& index);
double anomaly_evidence(std::span<const FeatureVector> frame_objects, const DetectorModel& model);

/// max(s_prev + delta, 0).
double update_statistic(double s_prev, double delta);

/// Advances the statistic by one frame given its evidence (nullopt = skipped
/// frame). Raises the alarm at s >= h; once alarmed, an event closes after
/// `n_end` consecutive strict decreases or when s returns to zero, with
/// tau_end at the last frame before the decline. The statistic then restarts
/// from zero.
StepOutcome advance(DetectorState& state, std::uint64_t frame_id, std::optional<double> delta,
                    const DetectorOptions& options);

/// Closes an open alarm at end of stream as a truncated event.
std::optional<AnomalyEvent> finish(const DetectorState& state);

/// Streaming detector for one stream. Several detectors may share one index.
class Detector {
public:
    Detector(const DetectorModel& model, DetectorOptions options);
    Detector(const DetectorModel& model, std::shared_ptr<const KdTree> index, DetectorOptions options);

    StepOutcome step(std::uint64_t frame_id, std::span<const FeatureVector> frame_objects);
    std::optional<AnomalyEvent> finish() const { return seqdetect::finish(state_); }

    const DetectorState& state() const noexcept { return state_; }
    const DetectorOptions& options() const noexcept { return options_; }

private:
    int m_;
    int k_;
    double baseline_;
    std::shared_ptr<const KdTree> index_;
    DetectorOptions options_;
    DetectorState state_;
};

struct OfflineResult {
    std::vector<AnomalyEvent> events;
    std::vector<FrameRecord> trace;
};

/// Folds step() over frames ordered by strictly increasing frame id and
/// closes a trailing open alarm as a truncated event.
OfflineResult run_offline(std::span<const Frame> frames, const DetectorModel& model,
                          const DetectorOptions& options);

}  // namespace seqdetect
