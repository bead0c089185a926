#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "seqdetect/knn_model.hpp"

namespace seqdetect {

/// All objects detected in one frame. `objects` may be empty.
struct Frame {
    std::uint64_t frame_id = 0;
    std::vector<FeatureVector> objects;
};

enum class CsvLayout {
    Weighted,  // frame_id,object_id,f1,...,fm
    Raw,       // frame_id,object_id,mse,center_x,center_y,area,p1,...,pn
};

struct FeatureTable {
    CsvLayout layout = CsvLayout::Weighted;
    std::size_t dim = 0;
    std::vector<Frame> frames;

    std::size_t object_count() const;
    std::vector<FeatureVector> flatten() const;
};

/// Reads feature rows grouped into frames. The layout is taken from the
/// header; raw rows are weighted through assemble_feature(). A row holding
/// only a frame id (`17` or `17,,`) declares an empty frame. Frame ids must be
/// non-decreasing. Errors carry the 1-based line number.
FeatureTable read_feature_csv(std::istream& in, const FeatureWeights& weights = {});
FeatureTable read_feature_csv_file(const std::filesystem::path& path,
                                   const FeatureWeights& weights = {});

/// Writes frames in the weighted layout, one row per object and a bare id
/// row for each empty frame.
void write_feature_csv(std::ostream& out, std::span<const Frame> frames);

}  // namespace seqdetect
