#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ndmd/common.hpp"
#include "ndmd/observe.hpp"
#include "ndmd/video.hpp"

namespace ndmd {

inline constexpr const char* kToolVersion = "ndmd 0.1.0";

// Provenance stamp carried next to every artifact as <path>.meta.json.
struct RunMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
};

void write_meta_sidecar(const std::string& path, const RunMeta& meta);

// ---------------------------------------------------------------------------
// NVID: versioned binary video container.
// "NVID" | u32 version=1 | u32 T | u32 H | u32 W | f64 t0 | f64 dt |
// T*H*W f32 little-endian values, frame-major then row-major.
// ---------------------------------------------------------------------------
void nvid_write(const std::string& path, const VideoGrid& video,
                const std::optional<RunMeta>& meta = std::nullopt);
VideoGrid nvid_read(const std::string& path);

// ---------------------------------------------------------------------------
// Checkpoint container: named binary blobs.
// "NDMD" | u32 version=1 | u32 n_entries | entries sorted by name, each:
// u32 name_len | name | u8 kind (0 = f64 array, 1 = utf8 string) |
// u64 count | payload.
// ---------------------------------------------------------------------------
struct BlobFile {
    std::map<std::string, std::vector<double>> arrays;
    std::map<std::string, std::string> strings;
};

void blob_write(const std::string& path, const BlobFile& blobs,
                const std::optional<RunMeta>& meta = std::nullopt);
BlobFile blob_read(const std::string& path);

// ---------------------------------------------------------------------------
// Observations as JSON-lines: one record per sample.
// pixel: {"kind":"pixel","t":..,"x":..,"y":..,"re":..,"sigma":..}
// vis:   {"kind":"vis","t":..,"u":..,"v":..,"re":..,"im":..,"sigma":..}
// ---------------------------------------------------------------------------
void write_observations_jsonl(const std::string& path, const std::vector<PixelObservation>& obs,
                              const std::optional<RunMeta>& meta = std::nullopt);
void write_observations_jsonl(const std::string& path,
                              const std::vector<VisibilityObservation>& obs,
                              const std::optional<RunMeta>& meta = std::nullopt);
ObservationSet read_observations_jsonl(const std::string& path);

// Per-frame CSV grids of H x W values stacked into a video.
VideoGrid ingest_csv_grid(const std::vector<std::string>& paths, double dt, double t0 = 0.0);

// Generic numeric CSV with a header row.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows,
               const std::optional<RunMeta>& meta = std::nullopt);
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::string& path);

}  // namespace ndmd
