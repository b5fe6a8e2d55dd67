#include "lsrom/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace lsrom {
namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& field : out) {
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw InvalidInput("chunk csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

DataChunk read_chunk_csv(std::istream& in, std::uint64_t timestamp) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("chunk csv is empty");
    auto header = split(line);
    bool has_label = !header.empty() && header.back() == "label";
    const std::size_t f = header.size() - (has_label ? 1 : 0);
    if (f == 0) fail(1, "no feature columns");
    for (std::size_t j = 0; j < f; ++j) {
        if (header[j] != "f" + std::to_string(j)) fail(1, "expected column f" + std::to_string(j));
    }

    DataChunk chunk;
    chunk.timestamp = timestamp;
    std::vector<double> values;
    Labels labels;
    std::size_t rows = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split(line);
        if (fields.size() != header.size()) fail(lineno, "wrong number of fields");
        for (std::size_t j = 0; j < f; ++j) {
            double v = 0.0;
            auto field = fields[j];
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                fail(lineno, "column " + std::to_string(j) + " is not a number");
            }
            values.push_back(v);
        }
        if (has_label) {
            std::int64_t l = 0;
            auto field = fields.back();
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), l);
            if (ec != std::errc() || ptr != field.data() + field.size() || l < 0) {
                fail(lineno, "label is not a non-negative integer");
            }
            labels.push_back(l);
        }
        ++rows;
    }
    chunk.objects = Matrix(rows, f, std::move(values));
    if (has_label) chunk.labels = std::move(labels);
    chunk.validate();
    return chunk;
}

DataChunk read_chunk_csv(const std::filesystem::path& path, std::uint64_t timestamp) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open chunk file " + path.string());
    return read_chunk_csv(in, timestamp);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_chunk_csv(std::ostream& out, const DataChunk& chunk) {
    const auto f = chunk.features();
    for (std::size_t j = 0; j < f; ++j) {
        if (j) out << ',';
        out << 'f' << j;
    }
    if (chunk.labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            if (j) out << ',';
            out << format_double(chunk.objects(i, j));
        }
        if (chunk.labels) out << ',' << (*chunk.labels)[i];
        out << '\n';
    }
}

void write_chunk_csv(const std::filesystem::path& path, const DataChunk& chunk) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_chunk_csv(out, chunk);
}

}  // namespace lsrom
