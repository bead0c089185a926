#include "seqdetect/knn_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "seqdetect/errors.hpp"
#include "seqdetect/kdtree.hpp"

namespace seqdetect {

namespace {

void require_finite(double value, const std::string& name) {
    if (!std::isfinite(value)) throw DataError("non-finite value in " + name);
}

}  // namespace

FeatureVector assemble_feature(double mse, double center_x, double center_y, double area,
                               std::span<const double> class_probs,
                               const FeatureWeights& weights) {
    require_finite(mse, "mse");
    require_finite(center_x, "center_x");
    require_finite(center_y, "center_y");
    require_finite(area, "area");
    require_finite(weights.motion, "weights.motion");
    require_finite(weights.location, "weights.location");
    require_finite(weights.appearance, "weights.appearance");
    if (weights.motion < 0.0 || weights.location < 0.0 || weights.appearance < 0.0) {
        throw DataError("feature weights must be non-negative");
    }
    if (mse < 0.0) throw DataError("mse must be non-negative");
    if (area < 0.0) throw DataError("area must be non-negative");

    FeatureVector out;
    out.values.reserve(class_probs.size() + 4);
    out.values.push_back(weights.motion * mse);
    out.values.push_back(weights.location * center_x);
    out.values.push_back(weights.location * center_y);
    out.values.push_back(weights.location * area);
    for (std::size_t i = 0; i < class_probs.size(); ++i) {
        const std::string name = "class_probs[" + std::to_string(i) + "]";
        require_finite(class_probs[i], name);
        if (class_probs[i] < 0.0 || class_probs[i] > 1.0) {
            throw DataError(name + " outside [0, 1]");
        }
        out.values.push_back(weights.appearance * class_probs[i]);
    }
    return out;
}

void PointSet::push_back(std::span<const double> point) {
    if (dim_ == 0 && coords_.empty()) dim_ = point.size();
    if (point.size() != dim_) {
        throw DataError("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                        std::to_string(point.size()));
    }
    coords_.insert(coords_.end(), point.begin(), point.end());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double knn_distance(std::span<const double> query, const PointSet& reference, int k) {
    if (reference.empty()) throw ConfigError("knn_distance: empty reference set");
    if (k < 1 || static_cast<std::size_t>(k) > reference.size()) {
        throw ConfigError("knn_distance: k = " + std::to_string(k) + " exceeds reference size " +
                          std::to_string(reference.size()));
    }
    if (query.size() != reference.dim()) {
        throw DataError("dimension mismatch: query has " + std::to_string(query.size()) +
                        " values, reference points have " + std::to_string(reference.dim()));
    }
    std::vector<double> d2(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) d2[i] = squared_distance(query, reference[i]);
    const auto kth = d2.begin() + (k - 1);
    std::nth_element(d2.begin(), kth, d2.end());
    return std::sqrt(*kth);
}

double knn_distance(const FeatureVector& query, std::span<const FeatureVector> reference, int k) {
    PointSet points(query.dim());
    for (const auto& r : reference) points.push_back(r.values);
    return knn_distance(query.values, points, k);
}

std::string_view to_string(PhiConvention c) {
    return c == PhiConvention::PowerMinus ? "power_minus" : "raw_distance";
}

PhiConvention parse_phi_convention(std::string_view text) {
    if (text == "power_minus") return PhiConvention::PowerMinus;
    if (text == "raw_distance") return PhiConvention::RawDistance;
    throw ConfigError("unknown phi convention '" + std::string(text) + "'");
}

double DetectorModel::baseline() const { return std::pow(d_alpha, m); }

void DetectorModel::validate() const {
    if (m < 1) throw ValidationError("model: m must be >= 1, got " + std::to_string(m));
    if (reference_points.empty()) throw ValidationError("model: no reference points");
    if (reference_points.dim() != static_cast<std::size_t>(m)) {
        throw ValidationError("model: reference points have dimension " +
                              std::to_string(reference_points.dim()) + ", expected m = " +
                              std::to_string(m));
    }
    if (k < 1 || static_cast<std::size_t>(k) > reference_points.size()) {
        throw ValidationError("model: k = " + std::to_string(k) + " must lie in [1, M2 = " +
                              std::to_string(reference_points.size()) + "]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("model: alpha must lie in (0, 1)");
    if (!std::isfinite(d_alpha) || d_alpha < 0.0) throw ValidationError("model: d_alpha must be >= 0");
    if (!std::isfinite(phi) || phi <= 0.0) throw ValidationError("model: phi must be > 0");
    if (m1_count < 1) throw ValidationError("model: m1_count must be >= 1");
    for (double v : reference_points.coords()) {
        if (!std::isfinite(v)) throw ValidationError("model: non-finite reference coordinate");
    }
}

std::size_t percentile_rank(double alpha, std::size_t count) {
    // The tolerance absorbs representation error in (1 - alpha) * count, so
    // alpha = 0.05, count = 100 gives rank 95 rather than 96.
    const double exact = (1.0 - alpha) * static_cast<double>(count);
    const auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    return std::clamp<std::size_t>(rank, 1, count);
}

TrainingResult train_detailed(std::span<const FeatureVector> dataset, const TrainOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
    if (!(options.partition_fraction > 0.0 && options.partition_fraction < 1.0)) {
        throw ConfigError("partition fraction must lie in (0, 1)");
    }
    if (options.k < 1) throw ConfigError("k must be >= 1");
    if (dataset.empty()) throw TrainingError("empty dataset");

    const std::size_t total = dataset.size();
    const auto min_size = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(1.0 / options.alpha - 1e-9)));
    if (total < min_size) {
        throw TrainingError("dataset too small: " + std::to_string(total) + " vectors, need at least " +
                            std::to_string(min_size));
    }
    const std::size_t m = dataset.front().dim();
    if (m == 0) throw TrainingError("feature vectors have no values");
    for (std::size_t i = 0; i < total; ++i) {
        if (dataset[i].dim() != m) {
            throw DataError("dimension mismatch at vector " + std::to_string(i) + ": expected " +
                            std::to_string(m) + ", got " + std::to_string(dataset[i].dim()));
        }
        for (double v : dataset[i].values) {
            if (!std::isfinite(v)) throw DataError("non-finite value in vector " + std::to_string(i));
        }
    }

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.partition_seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto m1 = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(options.partition_fraction * static_cast<double>(total))), 1,
        total - 1);
    const std::size_t m2 = total - m1;
    if (static_cast<std::size_t>(options.k) > m2) {
        throw TrainingError("k = " + std::to_string(options.k) + " exceeds reference size M2 = " +
                            std::to_string(m2));
    }

    PointSet reference(m);
    for (std::size_t i = m1; i < total; ++i) reference.push_back(dataset[order[i]].values);

    const KdTree index(reference);
    std::vector<double> distances(m1);
    for (std::size_t i = 0; i < m1; ++i) {
        distances[i] = index.kth_distance(dataset[order[i]].values, options.k);
    }
    std::sort(distances.begin(), distances.end());

    const double d_alpha = distances[percentile_rank(options.alpha, m1) - 1];
    const double d_max = distances.back();
    if (d_max == 0.0) throw TrainingError("degenerate nominal manifold: all k-NN distances are zero");

    const auto dim = static_cast<int>(m);
    const double phi = options.phi_convention == PhiConvention::PowerMinus
                           ? std::pow(d_max, dim) - std::pow(d_alpha, dim)
                           : d_max;
    if (!(phi > 0.0)) {
        throw TrainingError("degenerate nominal manifold: phi = 0 because the (1 - alpha) percentile "
                            "equals the maximum k-NN distance; use more data or a larger alpha");
    }

    TrainingResult result;
    result.model.reference_points = std::move(reference);
    result.model.m = dim;
    result.model.k = options.k;
    result.model.alpha = options.alpha;
    result.model.d_alpha = d_alpha;
    result.model.phi = phi;
    result.model.m1_count = m1;
    result.model.partition_seed = options.partition_seed;
    result.model.phi_convention = options.phi_convention;
    result.sorted_distances = std::move(distances);
    return result;
}

DetectorModel train(std::span<const FeatureVector> dataset, const TrainOptions& options) {
    return train_detailed(dataset, options).model;
}

}  // namespace seqdetect
