#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lsrom/core.hpp"

namespace lsrom {

// Chunk files: header `f0,...,f{f-1}[,label]`, one object per row.
DataChunk read_chunk_csv(std::istream& in, std::uint64_t timestamp = 0);
DataChunk read_chunk_csv(const std::filesystem::path& path, std::uint64_t timestamp = 0);

void write_chunk_csv(std::ostream& out, const DataChunk& chunk);
void write_chunk_csv(const std::filesystem::path& path, const DataChunk& chunk);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace lsrom
