#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace notchlab {

const char* toolkit_version();

// Structured result document: ordered key-value payload plus named numeric
// arrays, written as report.txt and one plot-ready CSV per array. Every
// value is formatted with full double precision, and nothing time- or
// host-dependent goes in, so the same inputs produce the same bytes; wall
// time goes in a separate timing file that is not part of the payload.
struct Report {
    struct Csv {
        std::string name;    // file stem
        std::string header;  // comma-separated column names
        std::vector<std::vector<double>> rows;
    };

    std::string command;
    std::vector<std::pair<std::string, std::string>> fields;
    std::vector<Csv> arrays;

    void put(const std::string& key, const std::string& value);
    void put(const std::string& key, double value);
    void put_uint(const std::string& key, std::uint64_t value);
    void put_int(const std::string& key, std::int64_t value);
    void add_array(std::string name, std::string header, std::vector<std::vector<double>> rows);

    // report.txt contents; the deterministic payload together with the CSVs.
    std::string payload() const;
    static std::string csv_text(const Csv& csv);

    // Writes report.txt and every array CSV under dir, creating it if needed.
    void write(const std::string& dir) const;
    void write_timing(const std::string& dir, double seconds) const;

    static std::string format_double(double v);
};

// Whole-file write via a temp file in the same directory plus rename, so
// readers never observe a half-written file.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_text_file(const std::string& path);

}  // namespace notchlab
