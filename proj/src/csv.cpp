#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "softtopk/bench.hpp"

namespace softtopk {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void emit_csv(const std::vector<BenchRecord>& records, const std::string& path) {
    if (records.empty())
        throw SizeError("emit_csv requires at least one record (refusing to create '" + path + "')");

    std::vector<BenchRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), [](const BenchRecord& a, const BenchRecord& b) {
        return std::make_tuple(to_string(a.algo), a.n, a.k, a.repeat_index) <
               std::make_tuple(to_string(b.algo), b.n, b.k, b.repeat_index);
    });

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << kCsvHeader << '\n';
    for (const BenchRecord& r : sorted) {
        f << to_string(r.algo) << ',' << r.n << ',' << r.k << ',' << r.d << ',' << r.batch << ','
          << format_real(r.boost) << ',' << to_string(r.mode) << ',' << r.seed << ','
          << r.repeat_index << ',' << format_real(r.wall_time_s) << ','
          << format_real(r.nccs_mean) << ',' << format_real(r.nccs_std) << '\n';
    }
    f.flush();
    if (!f) throw IoError("write to '" + path + "' failed");
}

std::vector<BenchRecord> parse_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");

    auto fail = [&](std::size_t lineno, const std::string& why) -> IoError {
        return IoError("'" + path + "' line " + std::to_string(lineno) + ": " + why);
    };

    std::string line;
    if (!std::getline(f, line)) throw IoError("'" + path + "': empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw fail(1, "unexpected header '" + line + "'");

    std::vector<BenchRecord> out;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 12)
            throw fail(lineno, "expected 12 fields, got " + std::to_string(fields.size()));
        try {
            BenchRecord r;
            r.algo = algo_from_string(fields[0]);
            r.n = std::stoull(fields[1]);
            r.k = std::stoull(fields[2]);
            r.d = std::stoull(fields[3]);
            r.batch = std::stoull(fields[4]);
            r.boost = std::stod(fields[5]);
            r.mode = peaked_mode_from_string(fields[6]);
            r.seed = std::stoull(fields[7]);
            r.repeat_index = std::stoull(fields[8]);
            r.wall_time_s = std::stod(fields[9]);
            r.nccs_mean = std::stod(fields[10]);
            r.nccs_std = std::stod(fields[11]);
            out.push_back(r);
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& e) {
            throw fail(lineno, e.what());
        }
    }
    return out;
}

}  // namespace softtopk
