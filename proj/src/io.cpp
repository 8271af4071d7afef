#include "ndmd/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ndmd {

namespace {

using nlohmann::json;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), std::streamsize(n));
}

template <class T>
void put_pod(std::ostream& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

// Reader that tracks its offset so format errors can point at bytes.
struct ByteReader {
    std::string data;
    std::size_t pos = 0;
    std::string path;

    void need(std::size_t n, const char* what) const {
        if (pos + n > data.size())
            throw FormatError(path + ": truncated file while reading " + std::string(what), pos);
    }
    template <class T>
    T pod(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, data.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

ByteReader slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ByteReader{ss.str(), 0, path};
}

void check_magic(ByteReader& r, const char* magic) {
    std::size_t at = r.pos;
    std::string m = r.bytes(4, "magic");
    if (m != magic)
        throw FormatError(r.path + ": bad magic, expected \"" + magic + "\"", at);
}

}  // namespace

void write_meta_sidecar(const std::string& path, const RunMeta& meta) {
    json j;
    j["config_hash"] = meta.config_hash;
    j["seed"] = meta.seed;
    j["version"] = meta.version;
    std::ofstream out(path + ".meta.json");
    if (!out) throw DataError("cannot write metadata: " + path + ".meta.json");
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------- NVID

void nvid_write(const std::string& path, const VideoGrid& video,
                const std::optional<RunMeta>& meta) {
    require(video.T >= 1 && video.H >= 1 && video.W >= 1, "nvid_write: empty video");
    require(video.dt > 0.0, "nvid_write: dt must be positive");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write video: " + path);
    put_bytes(out, "NVID", 4);
    put_pod<std::uint32_t>(out, 1);
    put_pod<std::uint32_t>(out, std::uint32_t(video.T));
    put_pod<std::uint32_t>(out, std::uint32_t(video.H));
    put_pod<std::uint32_t>(out, std::uint32_t(video.W));
    put_pod<double>(out, video.t0);
    put_pod<double>(out, video.dt);
    for (double v : video.data) put_pod<float>(out, float(v));
    if (!out) throw DataError("write failed: " + path);
    if (meta) write_meta_sidecar(path, *meta);
}

VideoGrid nvid_read(const std::string& path) {
    ByteReader r = slurp(path);
    check_magic(r, "NVID");
    std::size_t at = r.pos;
    auto version = r.pod<std::uint32_t>("version");
    if (version != 1)
        throw FormatError(path + ": unsupported NVID version " + std::to_string(version) +
                              ", this reader supports version 1",
                          at);
    at = r.pos;
    auto T = r.pod<std::uint32_t>("T");
    auto H = r.pod<std::uint32_t>("H");
    auto W = r.pod<std::uint32_t>("W");
    if (T < 1 || H < 1 || W < 1)
        throw FormatError(path + ": zero dimension in header", at);
    double t0 = r.pod<double>("t0");
    at = r.pos;
    double dt = r.pod<double>("dt");
    if (!(dt > 0.0) || !std::isfinite(t0))
        throw FormatError(path + ": invalid timestamps (t0=" + std::to_string(t0) +
                              ", dt=" + std::to_string(dt) + ")",
                          at);
    VideoGrid video(int(T), int(H), int(W), t0, dt);
    for (std::size_t p = 0; p < video.data.size(); ++p)
        video.data[p] = double(r.pod<float>("pixel data"));
    if (r.pos != r.data.size())
        throw FormatError(path + ": trailing bytes after pixel data", r.pos);
    return video;
}

// ----------------------------------------------------------------- blob file

void blob_write(const std::string& path, const BlobFile& blobs,
                const std::optional<RunMeta>& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    put_bytes(out, "NDMD", 4);
    put_pod<std::uint32_t>(out, 1);
    put_pod<std::uint32_t>(out, std::uint32_t(blobs.arrays.size() + blobs.strings.size()));

    // single name-sorted stream across both kinds keeps files byte-stable
    auto ait = blobs.arrays.begin();
    auto sit = blobs.strings.begin();
    auto emit_name = [&](const std::string& name, std::uint8_t kind, std::uint64_t count) {
        put_pod<std::uint32_t>(out, std::uint32_t(name.size()));
        put_bytes(out, name.data(), name.size());
        put_pod<std::uint8_t>(out, kind);
        put_pod<std::uint64_t>(out, count);
    };
    while (ait != blobs.arrays.end() || sit != blobs.strings.end()) {
        bool take_array = sit == blobs.strings.end() ||
                          (ait != blobs.arrays.end() && ait->first < sit->first);
        if (take_array) {
            emit_name(ait->first, 0, ait->second.size());
            put_bytes(out, ait->second.data(), ait->second.size() * sizeof(double));
            ++ait;
        } else {
            emit_name(sit->first, 1, sit->second.size());
            put_bytes(out, sit->second.data(), sit->second.size());
            ++sit;
        }
    }
    if (!out) throw DataError("write failed: " + path);
    if (meta) write_meta_sidecar(path, *meta);
}

BlobFile blob_read(const std::string& path) {
    ByteReader r = slurp(path);
    check_magic(r, "NDMD");
    std::size_t at = r.pos;
    auto version = r.pod<std::uint32_t>("version");
    if (version != 1)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version) +
                              ", this reader supports version 1",
                          at);
    auto n = r.pod<std::uint32_t>("entry count");
    BlobFile blobs;
    for (std::uint32_t k = 0; k < n; ++k) {
        auto name_len = r.pod<std::uint32_t>("entry name length");
        std::string name = r.bytes(name_len, "entry name");
        at = r.pos;
        auto kind = r.pod<std::uint8_t>("entry kind");
        auto count = r.pod<std::uint64_t>("entry count");
        if (kind == 0) {
            std::string payload = r.bytes(std::size_t(count) * sizeof(double), "array payload");
            std::vector<double> v(count);
            std::memcpy(v.data(), payload.data(), payload.size());
            blobs.arrays[name] = std::move(v);
        } else if (kind == 1) {
            blobs.strings[name] = r.bytes(std::size_t(count), "string payload");
        } else {
            throw FormatError(path + ": unknown entry kind " + std::to_string(kind) +
                                  " for entry \"" + name + "\"",
                              at);
        }
    }
    if (r.pos != r.data.size())
        throw FormatError(path + ": trailing bytes after last entry", r.pos);
    return blobs;
}

// -------------------------------------------------------------- observations

namespace {

void write_jsonl(const std::string& path, const std::vector<json>& records,
                 const std::optional<RunMeta>& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write observations: " + path);
    for (const auto& rec : records) out << rec.dump() << '\n';
    if (!out) throw DataError("write failed: " + path);
    if (meta) write_meta_sidecar(path, *meta);
}

}  // namespace

void write_observations_jsonl(const std::string& path, const std::vector<PixelObservation>& obs,
                              const std::optional<RunMeta>& meta) {
    std::vector<json> recs;
    recs.reserve(obs.size());
    for (const auto& o : obs)
        recs.push_back(json{{"kind", "pixel"},
                            {"t", o.t},
                            {"x", o.x},
                            {"y", o.y},
                            {"re", o.value},
                            {"sigma", o.sigma}});
    write_jsonl(path, recs, meta);
}

void write_observations_jsonl(const std::string& path,
                              const std::vector<VisibilityObservation>& obs,
                              const std::optional<RunMeta>& meta) {
    std::vector<json> recs;
    recs.reserve(obs.size());
    for (const auto& o : obs)
        recs.push_back(json{{"kind", "vis"},
                            {"t", o.t},
                            {"u", o.u},
                            {"v", o.v},
                            {"re", o.vis.real()},
                            {"im", o.vis.imag()},
                            {"sigma", o.sigma}});
    write_jsonl(path, recs, meta);
}

ObservationSet read_observations_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open observations: " + path);
    ObservationSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            std::string kind = rec.at("kind").get<std::string>();
            if (kind == "pixel") {
                PixelObservation o;
                o.t = rec.at("t").get<double>();
                o.x = rec.at("x").get<double>();
                o.y = rec.at("y").get<double>();
                o.value = rec.at("re").get<double>();
                o.sigma = rec.at("sigma").get<double>();
                require(o.sigma > 0.0, "sigma must be positive");
                set.pixels.push_back(o);
            } else if (kind == "vis") {
                VisibilityObservation o;
                o.t = rec.at("t").get<double>();
                o.u = rec.at("u").get<double>();
                o.v = rec.at("v").get<double>();
                o.vis = cplx(rec.at("re").get<double>(), rec.at("im").get<double>());
                o.sigma = rec.at("sigma").get<double>();
                require(o.sigma > 0.0, "sigma must be positive");
                set.vis.push_back(o);
            } else {
                throw DataError("unknown observation kind \"" + kind + "\"");
            }
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    require(set.is_pixel() != set.is_vis(),
            path + ": expected a nonempty, single-kind observation file");
    return set;
}

// ----------------------------------------------------------------- CSV grids

VideoGrid ingest_csv_grid(const std::vector<std::string>& paths, double dt, double t0) {
    require(!paths.empty(), "ingest_csv_grid: no input files");
    require(dt > 0.0, "ingest_csv_grid: dt must be positive");
    std::vector<std::vector<std::vector<double>>> frames;
    int H = -1, W = -1;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open grid CSV: " + path);
        std::vector<std::vector<double>> rows;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            int col = 0;
            while (std::getline(ss, cell, ',')) {
                ++col;
                try {
                    std::size_t used = 0;
                    double v = std::stod(cell, &used);
                    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                    if (used != cell.size()) throw std::invalid_argument(cell);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric cell \"" +
                                    cell + "\" at column " + std::to_string(col));
                }
            }
            if (W == -1) W = int(row.size());
            if (int(row.size()) != W)
                throw DataError(path + ":" + std::to_string(lineno) + ": ragged row, expected " +
                                std::to_string(W) + " columns, got " +
                                std::to_string(row.size()));
            rows.push_back(std::move(row));
        }
        if (H == -1) H = int(rows.size());
        if (int(rows.size()) != H)
            throw DataError(path + ": frame has " + std::to_string(rows.size()) +
                            " rows, expected " + std::to_string(H));
        require(H >= 1 && W >= 1, path + ": empty grid");
        frames.push_back(std::move(rows));
    }
    VideoGrid video(int(frames.size()), H, W, t0, dt);
    for (int k = 0; k < video.T; ++k)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) video.at(k, i, j) = frames[std::size_t(k)][std::size_t(i)][std::size_t(j)];
    return video;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows,
               const std::optional<RunMeta>& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV: " + path);
    out.precision(17);
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
    for (const auto& row : rows) {
        require(row.size() == columns.size(), "write_csv: row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c)
            out << row[c] << (c + 1 < row.size() ? ',' : '\n');
    }
    if (!out) throw DataError("write failed: " + path);
    if (meta) write_meta_sidecar(path, *meta);
}

std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV: " + path);
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (columns.empty()) {
            while (std::getline(ss, cell, ',')) columns.push_back(cell);
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric cell \"" +
                                cell + "\"");
            }
        }
        if (row.size() != columns.size())
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(columns.size()) + " cells");
        rows.push_back(std::move(row));
    }
    return {columns, rows};
}

}  // namespace ndmd
