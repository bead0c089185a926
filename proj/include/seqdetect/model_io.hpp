#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "seqdetect/knn_model.hpp"

namespace seqdetect {

inline constexpr int kModelFormatVersion = 1;

/// Serializes to the versioned JSON model document. Reals are written with
/// shortest round-trip precision, so load_model(save_model(m)) == m.
std::string save_model(const DetectorModel& model);
void save_model_file(const DetectorModel& model, const std::filesystem::path& path);

/// Throws ParseError (with byte offset) on malformed JSON, VersionError on a
/// version mismatch and ValidationError on a schema or invariant violation.
DetectorModel load_model(std::string_view text);
DetectorModel load_model_file(const std::filesystem::path& path);

}  // namespace seqdetect
