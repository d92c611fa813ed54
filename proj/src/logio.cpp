#include "flowtune/logio.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace flowtune {

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf.data(), end);
}

namespace {

const std::array<const char*, 14> kColumns = {
    "id", "src", "dst", "start_time", "end_time", "rtt_ms", "bandwidth_mbps",
    "avg_file_size_bytes", "num_files", "total_size_bytes", "cc", "p", "pp", "throughput_mbps"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_num(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && !s.empty();
}

bool parse_num(const std::string& s, std::int64_t& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && !s.empty();
}

bool parse_num(const std::string& s, int& out) {
    std::int64_t v = 0;
    if (!parse_num(s, v) || v < INT32_MIN || v > INT32_MAX) return false;
    out = static_cast<int>(v);
    return true;
}

} // namespace

ParseResult parse_log_stream(std::istream& in, const ColumnMap& schema) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("log file is empty (no header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv(line);
    std::array<std::size_t, 14> col{};
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        std::string want = kColumns[k];
        if (auto it = schema.find(want); it != schema.end()) want = it->second;
        auto pos = std::find(header.begin(), header.end(), want);
        if (pos == header.end())
            throw FormatError("missing required column '" + want + "' in log header");
        col[k] = static_cast<std::size_t>(pos - header.begin());
    }

    ParseResult res;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);

        auto reject = [&](const std::string& why) {
            res.rejects.push_back({line_no, why, line});
        };
        if (fields.size() < header.size()) {
            reject("row has fewer fields than header");
            continue;
        }

        TransferRecord r;
        r.id = fields[col[0]];
        r.src_endpoint = fields[col[1]];
        r.dst_endpoint = fields[col[2]];
        bool ok = true;
        auto num = [&](std::size_t k, auto& dst, const char* name) {
            if (!parse_num(fields[col[k]], dst)) {
                reject(std::string("unparseable numeric in column '") + name + "'");
                ok = false;
            }
        };
        num(3, r.start_time, "start_time");
        if (ok) num(4, r.end_time, "end_time");
        if (ok) num(5, r.rtt, "rtt_ms");
        if (ok) num(6, r.bandwidth, "bandwidth_mbps");
        if (ok) num(7, r.avg_file_size, "avg_file_size_bytes");
        if (ok) num(8, r.num_files, "num_files");
        if (ok) num(9, r.total_size, "total_size_bytes");
        if (ok) num(10, r.cc, "cc");
        if (ok) num(11, r.p, "p");
        if (ok) num(12, r.pp, "pp");
        if (ok) num(13, r.throughput, "throughput_mbps");
        if (!ok) continue;

        if (auto why = r.violation()) {
            reject(*why);
            continue;
        }
        res.records.push_back(std::move(r));
    }
    return res;
}

ParseResult parse_log(const std::string& path, const ColumnMap& schema) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open log file: " + path);
    return parse_log_stream(in, schema);
}

std::string format_log(const std::vector<TransferRecord>& records) {
    std::ostringstream out;
    out << kLogHeader << '\n';
    for (const auto& r : records) {
        out << r.id << ',' << r.src_endpoint << ',' << r.dst_endpoint << ','
            << format_double(r.start_time) << ',' << format_double(r.end_time) << ','
            << format_double(r.rtt) << ',' << format_double(r.bandwidth) << ','
            << format_double(r.avg_file_size) << ',' << r.num_files << ','
            << format_double(r.total_size) << ',' << r.cc << ',' << r.p << ',' << r.pp << ','
            << format_double(r.throughput) << '\n';
    }
    return out.str();
}

void emit_log(const std::vector<TransferRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open path for writing: " + path);
    out << format_log(records);
    if (!out) throw FormatError("write failed: " + path);
}

} // namespace flowtune
