#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "flowtune/types.hpp"

namespace flowtune {

// Fixed CSV column order for transfer logs.
inline constexpr const char* kLogHeader =
    "id,src,dst,start_time,end_time,rtt_ms,bandwidth_mbps,avg_file_size_bytes,"
    "num_files,total_size_bytes,cc,p,pp,throughput_mbps";

struct RejectedRow {
    std::size_t line = 0; // 1-based line number in the file
    std::string reason;
    std::string raw;
};

struct ParseResult {
    std::vector<TransferRecord> records;
    std::vector<RejectedRow> rejects;
};

// Maps canonical column names (as in kLogHeader) to the names used in the
// file, for ingesting logs with foreign headers. Unmapped names are taken
// verbatim.
using ColumnMap = std::map<std::string, std::string>;

// Rows violating a record invariant or containing unparseable numerics are
// reported in `rejects` (input order preserved); a missing required column
// is a FormatError.
ParseResult parse_log(const std::string& path, const ColumnMap& schema = {});
ParseResult parse_log_stream(std::istream& in, const ColumnMap& schema = {});

void emit_log(const std::vector<TransferRecord>& records, const std::string& path);
// Canonical serialization: shortest round-trip decimals, '\n' line ends.
// parse_log(emit_log(r)) reproduces r exactly.
std::string format_log(const std::vector<TransferRecord>& records);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

} // namespace flowtune
