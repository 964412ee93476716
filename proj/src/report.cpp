#include "notchlab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "notchlab/errors.hpp"

namespace notchlab {

const char* toolkit_version() { return "0.1.0"; }

std::string Report::format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Report::put(const std::string& key, const std::string& value) {
    fields.push_back({key, value});
}

void Report::put(const std::string& key, double value) { put(key, format_double(value)); }

void Report::put_uint(const std::string& key, std::uint64_t value) {
    put(key, std::to_string(value));
}

void Report::put_int(const std::string& key, std::int64_t value) {
    put(key, std::to_string(value));
}

void Report::add_array(std::string name, std::string header,
                       std::vector<std::vector<double>> rows) {
    arrays.push_back(Csv{std::move(name), std::move(header), std::move(rows)});
}

std::string Report::payload() const {
    std::ostringstream out;
    out << "command = " << command << "\n";
    out << "toolkit.version = " << toolkit_version() << "\n";
    for (const auto& [key, value] : fields) out << key << " = " << value << "\n";
    for (const auto& csv : arrays) {
        out << "array." << csv.name << ".file = " << csv.name << ".csv\n";
        out << "array." << csv.name << ".columns = " << csv.header << "\n";
        out << "array." << csv.name << ".rows = " << csv.rows.size() << "\n";
    }
    return out.str();
}

std::string Report::csv_text(const Csv& csv) {
    std::ostringstream out;
    out << csv.header << "\n";
    for (const auto& row : csv.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_double(row[i]);
        }
        out << "\n";
    }
    return out.str();
}

void Report::write(const std::string& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create output directory '" + dir + "': " + ec.message());
    atomic_write_file(dir + "/report.txt", payload());
    for (const auto& csv : arrays) atomic_write_file(dir + "/" + csv.name + ".csv", csv_text(csv));
}

void Report::write_timing(const std::string& dir, double seconds) const {
    atomic_write_file(dir + "/timing.txt",
                      "wall_seconds = " + format_double(seconds) + "\n");
}

void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_io("cannot open '" + tmp + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw_io("short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw_io("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw_io("failed reading '" + path + "'");
    return buf.str();
}

}  // namespace notchlab
