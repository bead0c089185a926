#include "seqdetect/feature_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "seqdetect/errors.hpp"

namespace seqdetect {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_real(std::string_view field, std::size_t line, std::string_view column) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("invalid number '" + std::string(field) + "' in column " + std::string(column),
                         line, ParseError::Unit::Line);
    }
    if (!std::isfinite(value)) {
        throw ParseError("non-finite value in column " + std::string(column), line, ParseError::Unit::Line);
    }
    return value;
}

std::uint64_t parse_index(std::string_view field, std::size_t line, std::string_view column) {
    std::uint64_t value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("invalid index '" + std::string(field) + "' in column " + std::string(column),
                         line, ParseError::Unit::Line);
    }
    return value;
}

}  // namespace

std::size_t FeatureTable::object_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.objects.size();
    return n;
}

std::vector<FeatureVector> FeatureTable::flatten() const {
    std::vector<FeatureVector> out;
    out.reserve(object_count());
    for (const auto& f : frames) out.insert(out.end(), f.objects.begin(), f.objects.end());
    return out;
}

FeatureTable read_feature_csv(std::istream& in, const FeatureWeights& weights) {
    FeatureTable table;
    std::string text;
    std::size_t line_no = 0;
    std::vector<std::string> header;

    while (std::getline(in, text)) {
        ++line_no;
        std::string_view line = text;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (trim(line).empty()) continue;
        const auto fields = split(line);

        if (header.empty()) {
            header.assign(fields.begin(), fields.end());
            if (header.size() < 3 || header[0] != "frame_id" || header[1] != "object_id") {
                throw ParseError("header must start with frame_id,object_id and name at least one feature",
                                 line_no, ParseError::Unit::Line);
            }
            const bool raw = header.size() >= 6 && header[2] == "mse" && header[3] == "center_x" &&
                             header[4] == "center_y" && header[5] == "area";
            table.layout = raw ? CsvLayout::Raw : CsvLayout::Weighted;
            table.dim = header.size() - 2;  // raw: 4 + n, weighted: m
            continue;
        }

        const std::uint64_t frame_id = parse_index(fields[0], line_no, "frame_id");
        if (!table.frames.empty() && frame_id < table.frames.back().frame_id) {
            throw ParseError("frame ids must be non-decreasing (" + std::to_string(frame_id) + " after " +
                                 std::to_string(table.frames.back().frame_id) + ")",
                             line_no, ParseError::Unit::Line);
        }
        if (table.frames.empty() || table.frames.back().frame_id != frame_id) {
            table.frames.push_back(Frame{frame_id, {}});
        }

        bool marker = true;
        for (std::size_t i = 1; i < fields.size(); ++i) marker = marker && fields[i].empty();
        if (marker) continue;

        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no, ParseError::Unit::Line);
        }
        FeatureVector fv;
        if (table.layout == CsvLayout::Raw) {
            std::vector<double> probs;
            for (std::size_t i = 6; i < fields.size(); ++i) probs.push_back(parse_real(fields[i], line_no, header[i]));
            try {
                fv = assemble_feature(parse_real(fields[2], line_no, "mse"),
                                      parse_real(fields[3], line_no, "center_x"),
                                      parse_real(fields[4], line_no, "center_y"),
                                      parse_real(fields[5], line_no, "area"), probs, weights);
            } catch (const ParseError&) {
                throw;
            } catch (const DataError& e) {
                throw ParseError(e.what(), line_no, ParseError::Unit::Line);
            }
        } else {
            fv.values.reserve(fields.size() - 2);
            for (std::size_t i = 2; i < fields.size(); ++i) fv.values.push_back(parse_real(fields[i], line_no, header[i]));
        }
        fv.frame_id = frame_id;
        fv.object_id = parse_index(fields[1], line_no, "object_id");
        table.frames.back().objects.push_back(std::move(fv));
    }
    return table;
}

FeatureTable read_feature_csv_file(const std::filesystem::path& path, const FeatureWeights& weights) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file '" + path.string() + "'");
    return read_feature_csv(in, weights);
}

void write_feature_csv(std::ostream& out, std::span<const Frame> frames) {
    std::size_t dim = 0;
    for (const auto& f : frames) {
        if (!f.objects.empty()) {
            dim = f.objects.front().dim();
            break;
        }
    }
    out << "frame_id,object_id";
    for (std::size_t i = 1; i <= std::max<std::size_t>(dim, 1); ++i) out << ",f" << i;
    out << '\n';

    char buf[32];
    for (const auto& f : frames) {
        if (f.objects.empty()) {
            out << f.frame_id << '\n';
            continue;
        }
        for (const auto& obj : f.objects) {
            out << f.frame_id << ',' << obj.object_id;
            for (double v : obj.values) {
                const auto res = std::to_chars(buf, buf + sizeof(buf), v);
                out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
            }
            out << '\n';
        }
    }
}

}  // namespace seqdetect
