#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dld/flow.hpp"
#include "dld/tracer.hpp"
#include "dld/walls.hpp"

namespace dld {

using json = nlohmann::json;

/// "%.17g"; round-trips every double.
std::string fmt17(double x);
/// "%.4g" for human summaries.
std::string fmt4(double x);

void write_doubles(const std::filesystem::path& path, std::span<const double> data);
std::vector<double> read_doubles(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

struct StoredField {
    FlowField field;
    std::optional<double> d_c;
};

/// Writes `<stem>.bin` (u plane then v plane) and `<stem>.json`. A missing
/// critical diameter is stored as an explicit null.
void save_field(const std::filesystem::path& stem, const FlowField& field,
                std::optional<double> d_c = std::nullopt);
StoredField load_field(const std::filesystem::path& stem);

/// Single-plane dump of the wall distance grid with a matching sidecar.
void save_wall_field(const std::filesystem::path& stem, const WallField& wf);

/// t,x,y,contact rows (physical cell coordinates).
std::string trajectory_csv(const Trajectory& traj);
/// period,entry,exit,displacement rows.
std::string recurrence_csv(const RecurrenceMap& map);

inline std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
    return std::filesystem::path(stem.string() + ext);
}

}  // namespace dld
