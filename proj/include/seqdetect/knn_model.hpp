#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace seqdetect {

/// One weighted feature point for one detected object in one frame.
struct FeatureVector {
    std::uint64_t frame_id = 0;
    std::uint64_t object_id = 0;
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
};

/// Relative importance of the motion, location and appearance groups.
struct FeatureWeights {
    double motion = 1.0;
    double location = 0.4;
    double appearance = 0.9;
};

/// Builds [w1*mse, w2*cx, w2*cy, w2*area, w3*p1, ..., w3*pn] (length n + 4).
/// Throws DataError naming the offending input when a value is non-finite or
/// a class probability lies outside [0, 1].
FeatureVector assemble_feature(double mse, double center_x, double center_y, double area,
                               std::span<const double> class_probs,
                               const FeatureWeights& weights = {});

/// Dense row-major set of points sharing one dimension.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    const std::vector<double>& coords() const noexcept { return coords_; }

    void push_back(std::span<const double> point);

    bool operator==(const PointSet&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/// Squared Euclidean distance, accumulated in coordinate order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Euclidean distance from `query` to its k-th nearest point of `reference`
/// (k is 1-based). Exhaustive scan.
double knn_distance(std::span<const double> query, const PointSet& reference, int k);
double knn_distance(const FeatureVector& query, std::span<const FeatureVector> reference, int k);

enum class PhiConvention {
    PowerMinus,   // phi = max(d)^m - d_alpha^m, the range of the evidence
    RawDistance,  // phi = max(d)
};

std::string_view to_string(PhiConvention c);
PhiConvention parse_phi_convention(std::string_view text);

struct TrainOptions {
    int k = 1;
    double alpha = 0.05;
    double partition_fraction = 0.5;
    std::uint64_t partition_seed = 0;
    PhiConvention phi_convention = PhiConvention::PowerMinus;
};

/// Trained nominal model. Immutable once built; safe to share across streams.
struct DetectorModel {
    PointSet reference_points;
    int m = 0;
    int k = 1;
    double alpha = 0.05;
    double d_alpha = 0.0;
    double phi = 0.0;
    std::uint64_t m1_count = 0;
    std::uint64_t partition_seed = 0;
    PhiConvention phi_convention = PhiConvention::PowerMinus;

    std::size_t m2_count() const noexcept { return reference_points.size(); }

    /// d_alpha^m, the evidence baseline.
    double baseline() const;

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;

    bool operator==(const DetectorModel&) const = default;
};

/// 1-based nearest-rank index of the (1 - alpha) percentile among `count`
/// ascending values: ceil((1 - alpha) * count), clamped to [1, count].
std::size_t percentile_rank(double alpha, std::size_t count);

/// Random split into a scoring part (M1) and a reference part (M2), k-NN
/// distances of M1 against M2, nearest-rank percentile d_alpha and the
/// evidence bound phi.
DetectorModel train(std::span<const FeatureVector> dataset, const TrainOptions& options);

/// Same as train() but also returns the sorted M1 distances.
struct TrainingResult {
    DetectorModel model;
    std::vector<double> sorted_distances;
};
TrainingResult train_detailed(std::span<const FeatureVector> dataset, const TrainOptions& options);

}  // namespace seqdetect
