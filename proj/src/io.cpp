#include "dld/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dld/errors.hpp"

namespace dld {

namespace fs = std::filesystem;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt4(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

void to_little(std::vector<unsigned char>& bytes) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k + 8 <= bytes.size(); k += 8)
            for (int a = 0, b = 7; a < b; ++a, --b) std::swap(bytes[k + a], bytes[k + b]);
    }
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

}  // namespace

void write_doubles(const fs::path& path, std::span<const double> data) {
    ensure_parent(path);
    std::vector<unsigned char> bytes(data.size() * 8);
    if (!data.empty()) std::memcpy(bytes.data(), data.data(), bytes.size());
    to_little(bytes);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> read_doubles(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size % 8 != 0) throw IoError(path.string() + ": size is not a multiple of 8 bytes");
    std::vector<unsigned char> bytes(size);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw IoError("read failed: " + path.string());
    to_little(bytes);
    std::vector<double> data(size / 8);
    if (size) std::memcpy(data.data(), bytes.data(), size);
    return data;
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_field(const fs::path& stem, const FlowField& field, std::optional<double> d_c) {
    std::vector<double> planes(field.u().begin(), field.u().end());
    planes.insert(planes.end(), field.v().begin(), field.v().end());
    write_doubles(with_suffix(stem, ".bin"), planes);
    const DldParams& p = field.params();
    json j = {{"f", p.f}, {"N", p.n}, {"Re", p.re}, {"res", field.res()},
              {"achieved_re", field.achieved_re()}};
    j["d_c"] = d_c ? json(*d_c) : json(nullptr);
    write_json(with_suffix(stem, ".json"), j);
}

StoredField load_field(const fs::path& stem) {
    const json j = read_json(with_suffix(stem, ".json"));
    try {
        DldParams p = DldParams::make(j.at("f").get<double>(), j.at("N").get<int>(), j.at("Re").get<double>());
        const int res = j.at("res").get<int>();
        std::vector<double> planes = read_doubles(with_suffix(stem, ".bin"));
        const std::size_t cells = static_cast<std::size_t>(res) * res;
        if (planes.size() != 2 * cells)
            throw IoError(stem.string() + ".bin: expected " + std::to_string(2 * cells) + " values");
        std::vector<double> u(planes.begin(), planes.begin() + static_cast<std::ptrdiff_t>(cells));
        std::vector<double> v(planes.begin() + static_cast<std::ptrdiff_t>(cells), planes.end());
        StoredField s{FlowField(p, res, std::move(u), std::move(v), j.at("achieved_re").get<double>()),
                      std::nullopt};
        if (j.contains("d_c") && !j["d_c"].is_null()) s.d_c = j["d_c"].get<double>();
        return s;
    } catch (const json::exception& e) {
        throw IoError(stem.string() + ".json: " + e.what());
    }
}

void save_wall_field(const fs::path& stem, const WallField& wf) {
    write_doubles(with_suffix(stem, ".bin"), wf.dist);
    json j = {{"f", 2.0 * wf.geometry.pillar_radius}, {"N", wf.geometry.n}, {"res", wf.res},
              {"plane", "dist"}};
    write_json(with_suffix(stem, ".json"), j);
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,x,y,contact\n";
    std::size_t next = 0;
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
        const TracePoint& p = traj.points[k];
        bool contact = false;
        while (next < traj.contacts.size() && traj.contacts[next] <= k) contact = traj.contacts[next++] == k || contact;
        out += fmt17(p.t) + ',' + fmt17(p.x) + ',' + fmt17(p.y) + ',' + (contact ? "1" : "0") + '\n';
    }
    return out;
}

std::string recurrence_csv(const RecurrenceMap& map) {
    std::string out = "period,entry,exit,displacement\n";
    for (const RecurrenceRow& r : map.rows)
        out += std::to_string(r.period) + ',' + fmt17(r.entry) + ',' + fmt17(r.exit) + ',' + fmt17(r.displacement) + '\n';
    return out;
}

}  // namespace dld
